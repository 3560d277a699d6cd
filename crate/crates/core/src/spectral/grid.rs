use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^d` sampled on `N^d` points, with the set of retained
/// Fourier modes fixed by the dealiasing cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    resolution: usize,
    period: f64,
    dealias_fraction: f64,
}

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

impl GridSpec {
    pub fn new(dimension: usize, resolution: usize, period: f64) -> Result<Self> {
        Self::with_dealias(dimension, resolution, period, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(
        dimension: usize,
        resolution: usize,
        period: f64,
        dealias_fraction: f64,
    ) -> Result<Self> {
        if !(2..=3).contains(&dimension) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dimension}")));
        }
        if resolution < 8 || !resolution.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "resolution must be a power of two >= 8, got {resolution}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Self { dimension, resolution, period, dealias_fraction })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Largest retained integer wavenumber per axis.
    pub fn cutoff(&self) -> i64 {
        let half = (self.resolution / 2) as i64;
        // the small epsilon keeps 2/3 * 48 = 32 from rounding down to 31
        let cut = (self.dealias_fraction * half as f64 + 1e-9).floor() as i64;
        cut.min(half - 1)
    }

    /// Number of physical grid points, `N^d`.
    pub fn points(&self) -> usize {
        self.resolution.pow(self.dimension as u32)
    }

    /// `|Ω| = L^d`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dimension as i32)
    }

    /// Sharp Poincaré constant for zero-mean fields, `(L / 2π)^2`.
    pub fn poincare_constant(&self) -> f64 {
        let r = self.period / (2.0 * PI);
        r * r
    }

    /// Physical wavenumber of the integer lattice unit, `2π / L`.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Grid spacing `L / N`.
    pub fn spacing(&self) -> f64 {
        self.period / self.resolution as f64
    }

    /// Number of independent components of a symmetric `d x d` tensor.
    pub fn sym_components(&self) -> usize {
        self.dimension * (self.dimension + 1) / 2
    }

    pub fn is_retained(&self, k: &[i64]) -> bool {
        let cut = self.cutoff();
        k.len() == self.dimension && k.iter().all(|c| c.abs() <= cut)
    }

    pub fn modes(&self) -> Arc<ModeTable> {
        ModeTable::for_grid(self)
    }

    fn key(&self) -> GridKey {
        (
            self.dimension,
            self.resolution,
            self.period.to_bits(),
            self.dealias_fraction.to_bits(),
        )
    }
}

type GridKey = (usize, usize, u64, u64);

/// Position of `(i, j)` in the packed upper-triangular storage of a
/// symmetric tensor: `(0,0) (0,1) (0,2) (1,1) (1,2) (2,2)` in 3D.
pub fn sym_index(i: usize, j: usize, dimension: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * (2 * dimension - a + 1) / 2 + (b - a)
}

/// The retained Fourier modes of a grid in lexicographic wavevector order
/// (first axis slowest), with their physical wavevectors and positions in
/// the full FFT layout.
#[derive(Debug)]
pub struct ModeTable {
    pub grid: GridSpec,
    pub wavevectors: Vec<[i64; 3]>,
    pub k: Vec<[f64; 3]>,
    pub k_sq: Vec<f64>,
    pub fft_index: Vec<usize>,
    /// Compact index of `-k`.
    pub conj: Vec<usize>,
    pub zero: usize,
}

impl ModeTable {
    pub fn for_grid(grid: &GridSpec) -> Arc<ModeTable> {
        static REGISTRY: OnceLock<Mutex<HashMap<GridKey, Arc<ModeTable>>>> = OnceLock::new();
        let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = registry.lock().expect("mode table registry poisoned");
        map.entry(grid.key())
            .or_insert_with(|| Arc::new(ModeTable::build(*grid)))
            .clone()
    }

    fn build(grid: GridSpec) -> ModeTable {
        let d = grid.dimension;
        let n = grid.resolution as i64;
        let cut = grid.cutoff();
        let side = (2 * cut + 1) as usize;
        let count = side.pow(d as u32);
        let unit = grid.wavenumber_unit();

        let mut wavevectors = Vec::with_capacity(count);
        let mut k = Vec::with_capacity(count);
        let mut k_sq = Vec::with_capacity(count);
        let mut fft_index = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            let mut wv = [0i64; 3];
            for axis in (0..d).rev() {
                wv[axis] = (rem % side) as i64 - cut;
                rem /= side;
            }
            let mut kk = [0.0; 3];
            let mut idx = 0usize;
            for axis in 0..d {
                kk[axis] = unit * wv[axis] as f64;
                idx = idx * n as usize + wv[axis].rem_euclid(n) as usize;
            }
            wavevectors.push(wv);
            k_sq.push(kk.iter().map(|c| c * c).sum());
            k.push(kk);
            fft_index.push(idx);
        }
        // lexicographic order over a symmetric cube: -k sits at the mirrored position
        let conj = (0..count).map(|i| count - 1 - i).collect();
        ModeTable { grid, wavevectors, k, k_sq, fft_index, conj, zero: count / 2 }
    }

    pub fn len(&self) -> usize {
        self.wavevectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavevectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension
    }

    /// Compact index of an integer wavevector, if retained.
    pub fn index_of(&self, wavevector: &[i64]) -> Option<usize> {
        if !self.grid.is_retained(wavevector) {
            return None;
        }
        let cut = self.grid.cutoff();
        let side = 2 * cut + 1;
        let mut idx = 0i64;
        for c in wavevector {
            idx = idx * side + (c + cut);
        }
        Some(idx as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_follows_two_thirds_rule() {
        assert_eq!(GridSpec::new(2, 64, 1.0).unwrap().cutoff(), 21);
        assert_eq!(GridSpec::new(3, 32, 1.0).unwrap().cutoff(), 10);
        assert_eq!(GridSpec::new(2, 8, 1.0).unwrap().cutoff(), 2);
        assert_eq!(GridSpec::with_dealias(2, 16, 1.0, 1.0).unwrap().cutoff(), 7);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 16, 1.0).is_err());
        assert!(GridSpec::new(2, 12, 1.0).is_err());
        assert!(GridSpec::new(2, 4, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
        assert!(GridSpec::with_dealias(2, 16, 1.0, 1.5).is_err());
    }

    #[test]
    fn poincare_constant_is_unity_on_the_standard_torus() {
        let g = GridSpec::new(3, 16, 2.0 * PI).unwrap();
        assert!((g.poincare_constant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mode_table_conjugates_and_lookup() {
        let g = GridSpec::new(3, 16, 2.0 * PI).unwrap();
        let t = g.modes();
        for i in 0..t.len() {
            let a = t.wavevectors[i];
            let b = t.wavevectors[t.conj[i]];
            assert_eq!([a[0], a[1], a[2]], [-b[0], -b[1], -b[2]]);
            assert_eq!(t.index_of(&a[..3]), Some(i));
        }
        assert_eq!(t.wavevectors[t.zero], [0, 0, 0]);
        assert_eq!(t.index_of(&[6, 0, 0]), None);
    }

    #[test]
    fn sym_index_packs_upper_triangle() {
        assert_eq!(
            [sym_index(0, 0, 2), sym_index(0, 1, 2), sym_index(1, 0, 2), sym_index(1, 1, 2)],
            [0, 1, 1, 2]
        );
        let three: Vec<usize> = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(i, j)| sym_index(i, j, 3))
            .collect();
        assert_eq!(three, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sym_index(2, 1, 3), 4);
    }
}

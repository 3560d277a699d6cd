use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, ModeTable};
use super::transform::Transform;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative size of `k·v̂` below which a mode counts as already solenoidal.
const SOLENOIDAL_GUARD: f64 = 1e-14;

/// Divergence-free, zero-mean real vector field stored as its retained
/// Fourier coefficients, component-major, modes in lexicographic order.
///
/// Coefficients follow `û_k = |Ω|^{-1} ∫ u e^{-ik·x} dx`, so every inner
/// product below carries the volume factor `|Ω|`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    modes: Arc<ModeTable>,
    data: Vec<Complex64>,
}

/// Squared `H`, `V` and `V'` norms of a field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub dual_sq: f64,
}

/// Measured violations of the field invariants, each relative to the
/// field's scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldDefects {
    pub mean: f64,
    pub divergence: f64,
    pub conjugate: f64,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid() == other.grid() && self.data == other.data
    }
}

impl SpectralField {
    pub fn zeros(grid: &GridSpec) -> Self {
        let modes = grid.modes();
        let len = modes.len() * grid.dimension();
        Self { modes, data: vec![ZERO; len] }
    }

    /// Wraps coefficients that are already projected; callers inside the
    /// crate guarantee the invariants.
    pub(crate) fn from_projected(modes: Arc<ModeTable>, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), modes.len() * modes.dimension());
        Self { modes, data }
    }

    /// Builds a field from a sparse list of `(wavevector, amplitude)` pairs.
    /// The conjugate mode is filled in automatically and the result is
    /// Leray-projected.
    pub fn from_modes(grid: &GridSpec, modes: &[(Vec<i64>, Vec<Complex64>)]) -> Result<Self> {
        let table = grid.modes();
        let d = grid.dimension();
        let count = table.len();
        let mut raw = vec![ZERO; count * d];
        for (k, amp) in modes {
            if amp.len() != d {
                return Err(Error::Shape { expected: d, found: amp.len() });
            }
            let m = table.index_of(k).ok_or_else(|| {
                Error::Domain(format!("wavevector {k:?} is outside the retained set"))
            })?;
            if m == table.zero {
                return Err(Error::Domain("the k = 0 mode must vanish".into()));
            }
            let mc = table.conj[m];
            for c in 0..d {
                raw[c * count + m] += amp[c];
                raw[c * count + mc] += amp[c].conj();
            }
        }
        leray_project(raw, grid)
    }

    /// Random solenoidal field supported on `0 < |n| <= max_shell` (integer
    /// wavevectors), rescaled so that `‖u‖² = energy`.
    pub fn random(grid: &GridSpec, seed: u64, max_shell: f64, energy: f64) -> Result<Self> {
        let table = grid.modes();
        let d = grid.dimension();
        let count = table.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = vec![ZERO; count * d];
        for m in 0..count {
            let mc = table.conj[m];
            if mc <= m {
                continue;
            }
            let n_sq: i64 = table.wavevectors[m].iter().map(|c| c * c).sum();
            if n_sq == 0 || n_sq as f64 > max_shell * max_shell {
                continue;
            }
            for c in 0..d {
                let z = Complex64::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                raw[c * count + m] = z;
                raw[c * count + mc] = z.conj();
            }
        }
        let mut field = leray_project(raw, grid)?;
        let current = field.l2_sq();
        if current > 0.0 {
            field.scale((energy / current).sqrt());
        } else if energy > 0.0 {
            return Err(Error::Domain("no modes available below the requested shell".into()));
        }
        Ok(field)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.modes.grid
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn dimension(&self) -> usize {
        self.modes.dimension()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.data
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.modes.len();
        &self.data[c * n..(c + 1) * n]
    }

    /// Coefficient vector at an integer wavevector (zero if not retained).
    pub fn amplitude(&self, wavevector: &[i64]) -> Vec<Complex64> {
        match self.modes.index_of(wavevector) {
            Some(m) => (0..self.dimension()).map(|c| self.component(c)[m]).collect(),
            None => vec![ZERO; self.dimension()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.modes, &other.modes) || self.grid() == other.grid()
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
        Ok(())
    }

    /// `alpha * self + beta * other` as a new field.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_grid(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * alpha + b * beta)
            .collect();
        Ok(Self::from_projected(Arc::clone(&self.modes), data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    fn weighted_inner(&self, other: &Self, weight: impl Fn(usize) -> f64) -> f64 {
        let n = self.modes.len();
        let mut sum = 0.0;
        for c in 0..self.dimension() {
            let a = &self.data[c * n..(c + 1) * n];
            let b = &other.data[c * n..(c + 1) * n];
            for m in 0..n {
                sum += weight(m) * (a[m].re * b[m].re + a[m].im * b[m].im);
            }
        }
        sum * self.grid().volume()
    }

    /// `H` inner product `(u, w) = ∫ u·w dx`. Also the `V'`–`V` duality
    /// pairing when `self` is a force.
    pub fn inner(&self, other: &Self) -> f64 {
        assert!(self.same_grid(other), "inner product across grids");
        self.weighted_inner(other, |_| 1.0)
    }

    /// `V` inner product `(∇u, ∇w)`.
    pub fn inner_grad(&self, other: &Self) -> f64 {
        assert!(self.same_grid(other), "inner product across grids");
        let k_sq = &self.modes.k_sq;
        self.weighted_inner(other, |m| k_sq[m])
    }

    /// `V'` inner product, weights `1/|k|²`.
    pub fn inner_dual(&self, other: &Self) -> f64 {
        assert!(self.same_grid(other), "inner product across grids");
        let k_sq = &self.modes.k_sq;
        self.weighted_inner(other, |m| if k_sq[m] > 0.0 { 1.0 / k_sq[m] } else { 0.0 })
    }

    pub fn l2_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn grad_sq(&self) -> f64 {
        self.inner_grad(self)
    }

    pub fn dual_sq(&self) -> f64 {
        self.inner_dual(self)
    }

    pub fn norms(&self) -> Norms {
        Norms { l2_sq: self.l2_sq(), grad_sq: self.grad_sq(), dual_sq: self.dual_sq() }
    }

    /// `‖u‖² <= C_Ω ‖∇u‖²` with a `1e-12 ‖∇u‖²` allowance for rounding.
    pub fn poincare_check(&self) -> bool {
        let n = self.norms();
        n.l2_sq <= self.grid().poincare_constant() * n.grad_sq + 1e-12 * n.grad_sq
    }

    /// Upper bound on `max_x |u(x)|` from the triangle inequality.
    pub fn max_speed_bound(&self) -> f64 {
        let n = self.modes.len();
        (0..n)
            .map(|m| {
                (0..self.dimension())
                    .map(|c| self.data[c * n + m].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .sum()
    }

    pub fn defects(&self) -> FieldDefects {
        let n = self.modes.len();
        let d = self.dimension();
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return FieldDefects { mean: 0.0, divergence: 0.0, conjugate: 0.0 };
        }
        let mean = (0..d).map(|c| self.data[c * n + self.modes.zero].norm()).fold(0.0, f64::max);
        let mut divergence: f64 = 0.0;
        let mut conjugate: f64 = 0.0;
        for m in 0..n {
            let k = self.modes.k[m];
            let kn = self.modes.k_sq[m].sqrt();
            let mut s = ZERO;
            for (c, kc) in k.iter().enumerate().take(d) {
                s += self.data[c * n + m] * kc;
                let mc = self.modes.conj[m];
                conjugate = conjugate.max((self.data[c * n + m] - self.data[c * n + mc].conj()).norm());
            }
            if kn > 0.0 {
                divergence = divergence.max(s.norm() / kn);
            }
        }
        FieldDefects { mean: mean / scale, divergence: divergence / scale, conjugate: conjugate / scale }
    }

    /// Physical values of every component on the grid.
    pub fn to_physical(&self, tr: &mut Transform) -> Vec<Vec<f64>> {
        let d = self.dimension();
        let p = tr.points();
        let mut out = vec![vec![0.0; p]; d];
        let mut c = 0;
        while c < d {
            if c + 1 < d {
                let (lo, hi) = out.split_at_mut(c + 1);
                tr.inverse_pair(self.component(c), Some(self.component(c + 1)), &mut lo[c], Some(&mut hi[0]));
                c += 2;
            } else {
                tr.inverse_pair(self.component(c), None, &mut out[c], None);
                c += 1;
            }
        }
        out
    }

    /// Multiply every mode by a real factor depending on `|k|²`.
    pub fn map_diagonal(&mut self, factor: impl Fn(f64) -> f64) {
        let n = self.modes.len();
        let factors: Vec<f64> = self.modes.k_sq.iter().map(|&q| factor(q)).collect();
        for c in 0..self.dimension() {
            for (z, f) in self.data[c * n..(c + 1) * n].iter_mut().zip(&factors) {
                *z *= *f;
            }
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Projects compact coefficients in place onto solenoidal, zero-mean fields:
/// `v̂ ← v̂ - k (k·v̂)/|k|²`, `v̂_0 ← 0`.
pub(crate) fn project_in_place(modes: &ModeTable, data: &mut [Complex64]) {
    let n = modes.len();
    let d = modes.dimension();
    for c in 0..d {
        data[c * n + modes.zero] = ZERO;
    }
    for m in 0..n {
        let k_sq = modes.k_sq[m];
        if k_sq == 0.0 {
            continue;
        }
        let k = modes.k[m];
        let mut s = ZERO;
        let mut v_sq = 0.0;
        for c in 0..d {
            let z = data[c * n + m];
            s += z * k[c];
            v_sq += z.norm_sqr();
        }
        if s.norm_sqr() <= SOLENOIDAL_GUARD * SOLENOIDAL_GUARD * k_sq * v_sq {
            continue;
        }
        let s = s / k_sq;
        for c in 0..d {
            data[c * n + m] -= s * k[c];
        }
    }
}

/// Leray projection of raw, conjugate-symmetric per-mode amplitudes.
pub fn leray_project(raw: Vec<Complex64>, grid: &GridSpec) -> Result<SpectralField> {
    let modes = grid.modes();
    let expected = modes.len() * grid.dimension();
    if raw.len() != expected {
        return Err(Error::Shape { expected, found: raw.len() });
    }
    let n = modes.len();
    let scale = raw.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut defect: f64 = 0.0;
    for c in 0..grid.dimension() {
        for m in 0..n {
            let a = raw[c * n + m];
            let b = raw[c * n + modes.conj[m]];
            defect = defect.max((a - b.conj()).norm());
        }
    }
    if defect > 1e-12 * scale {
        return Err(Error::NotConjugateSymmetric(defect / scale));
    }
    let mut data = raw;
    project_in_place(&modes, &mut data);
    Ok(SpectralField::from_projected(modes, data))
}

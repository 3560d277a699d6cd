use nalgebra::Matrix3;

use super::field::SpectralField;
use super::grid::{sym_index, GridSpec};
use super::ops::gradient_physical;
use super::transform::Transform;
use crate::error::{Error, Result};

/// Symmetric `d x d` tensor per grid point, stored as packed physical
/// components (see [`sym_index`]).
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: *grid, comps: vec![vec![0.0; grid.points()]; grid.sym_components()] }
    }

    pub fn from_components(grid: &GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.sym_components() {
            return Err(Error::Shape { expected: grid.sym_components(), found: comps.len() });
        }
        for c in &comps {
            if c.len() != grid.points() {
                return Err(Error::Shape { expected: grid.points(), found: c.len() });
            }
        }
        Ok(Self { grid: *grid, comps })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[sym_index(i, j, self.grid.dimension())]
    }

    pub fn get(&self, i: usize, j: usize, point: usize) -> f64 {
        self.component(i, j)[point]
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `½ tr R` at every grid point.
    pub fn half_trace(&self) -> Vec<f64> {
        let d = self.grid.dimension();
        (0..self.grid.points())
            .map(|p| 0.5 * (0..d).map(|i| self.get(i, i, p)).sum::<f64>())
            .collect()
    }

    /// Smallest eigenvalue over all grid points.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.grid.dimension();
        let mut min = f64::INFINITY;
        for p in 0..self.grid.points() {
            let lam = if d == 2 {
                let (a, b, c) = (self.get(0, 0, p), self.get(0, 1, p), self.get(1, 1, p));
                let mid = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                mid - rad
            } else {
                let m = Matrix3::from_fn(|i, j| self.get(i, j, p));
                m.symmetric_eigenvalues().min()
            };
            min = min.min(lam);
        }
        min
    }

    /// Frobenius pairing `(A, B) = ∫ A:B dx` by grid quadrature.
    pub fn inner(&self, other: &Self) -> f64 {
        let d = self.grid.dimension();
        let mut sum = 0.0;
        for i in 0..d {
            for j in i..d {
                let w = if i == j { 1.0 } else { 2.0 };
                let dot: f64 = self.component(i, j).iter().zip(other.component(i, j)).map(|(a, b)| a * b).sum();
                sum += w * dot;
            }
        }
        sum * self.grid.volume() / self.grid.points() as f64
    }

    /// `(R, ∇w) = ∫ R_ij ∂_j w_i dx` by grid quadrature.
    pub fn pair_gradient(&self, tr: &mut Transform, w: &SpectralField) -> f64 {
        let grad = gradient_physical(tr, w);
        let d = self.grid.dimension();
        let mut sum = 0.0;
        for (i, gi) in grad.iter().enumerate() {
            for (j, gij) in gi.iter().enumerate().take(d) {
                sum += self.component(i, j).iter().zip(gij).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        sum * self.grid.volume() / self.grid.points() as f64
    }

    /// Symmetric gradient `S = (∇w + ∇wᵀ)/2` of a field.
    pub fn strain_rate(tr: &mut Transform, w: &SpectralField) -> Self {
        let grad = gradient_physical(tr, w);
        let d = w.dimension();
        let mut comps = Vec::with_capacity(d * (d + 1) / 2);
        for (i, row) in grad.iter().enumerate() {
            for (j, col) in grad.iter().enumerate().skip(i) {
                comps.push(row[j].iter().zip(&col[i]).map(|(a, b)| 0.5 * (a + b)).collect());
            }
        }
        Self { grid: *w.grid(), comps }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        Ok(Self { grid: self.grid, comps })
    }

    /// The isotropic tensor `s·Id`.
    pub fn identity(grid: &GridSpec, s: f64) -> Self {
        let d = grid.dimension();
        let mut out = Self::zeros(grid);
        for i in 0..d {
            out.comps[sym_index(i, i, d)].fill(s);
        }
        out
    }
}

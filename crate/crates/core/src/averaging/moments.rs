use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver::{Observer, StageSample};
use crate::spectral::{GridSpec, ModeTable, SpectralField, SymTensorField};

/// Weighted Welford accumulator of centred second moments.
///
/// It tracks `M_t((v − v̄)⊗(v − v̄))`, `M_t‖∇(v − v̄)‖²` and
/// `M_t⟨f − f̄, v − v̄⟩` directly, with running means, so it is an
/// independent check of the difference formulas used by
/// [`TimeAverager`](super::TimeAverager).
#[derive(Clone, Debug)]
pub struct CenteredMoments {
    grid: GridSpec,
    modes: Arc<ModeTable>,
    weight: f64,
    mean_v: Vec<Complex64>,
    mean_f: Vec<Complex64>,
    mean_phys: Vec<Vec<f64>>,
    m2: Vec<Vec<f64>>,
    m2_grad: f64,
    co_flux: f64,
}

impl CenteredMoments {
    pub fn new(grid: &GridSpec) -> Self {
        let modes = grid.modes();
        let len = modes.len() * grid.dimension();
        let zero = Complex64::new(0.0, 0.0);
        Self {
            grid: *grid,
            modes,
            weight: 0.0,
            mean_v: vec![zero; len],
            mean_f: vec![zero; len],
            mean_phys: vec![vec![0.0; grid.points()]; grid.dimension()],
            m2: vec![vec![0.0; grid.points()]; grid.sym_components()],
            m2_grad: 0.0,
            co_flux: 0.0,
        }
    }

    /// Adds `(v, f)` with weight `w`; `velocity` is `v` on the grid.
    pub fn add(&mut self, w: f64, v: &SpectralField, f: &SpectralField, velocity: &[Vec<f64>]) -> Result<()> {
        if v.grid() != &self.grid || f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if w <= 0.0 {
            return Ok(());
        }
        self.weight += w;
        let r = w / self.weight;
        let c = w * (1.0 - r);

        let dv: Vec<Complex64> = v.coefficients().iter().zip(&self.mean_v).map(|(a, m)| a - m).collect();
        let df: Vec<Complex64> = f.coefficients().iter().zip(&self.mean_f).map(|(a, m)| a - m).collect();
        let dv = SpectralField::from_projected(Arc::clone(&self.modes), dv);
        let df = SpectralField::from_projected(Arc::clone(&self.modes), df);
        self.m2_grad += c * dv.grad_sq();
        self.co_flux += c * df.inner(&dv);
        for (m, d) in self.mean_v.iter_mut().zip(dv.coefficients()) {
            *m += d * r;
        }
        for (m, d) in self.mean_f.iter_mut().zip(df.coefficients()) {
            *m += d * r;
        }

        let d = self.grid.dimension();
        let delta: Vec<Vec<f64>> =
            velocity.iter().zip(&self.mean_phys).map(|(u, m)| u.iter().zip(m).map(|(a, b)| a - b).collect()).collect();
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                for ((m2, a), b) in self.m2[k].iter_mut().zip(&delta[i]).zip(&delta[j]) {
                    *m2 += c * a * b;
                }
                k += 1;
            }
        }
        for (m, dl) in self.mean_phys.iter_mut().zip(&delta) {
            for (x, y) in m.iter_mut().zip(dl) {
                *x += r * y;
            }
        }
        Ok(())
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    fn inverse_weight(&self) -> Result<f64> {
        if self.weight > 0.0 {
            Ok(1.0 / self.weight)
        } else {
            Err(Error::EmptyAverage)
        }
    }

    pub fn mean_velocity(&self) -> SpectralField {
        SpectralField::from_projected(Arc::clone(&self.modes), self.mean_v.clone())
    }

    /// `M_t((v − v̄)⊗(v − v̄))`
    pub fn stress(&self) -> Result<SymTensorField> {
        let s = self.inverse_weight()?;
        let comps = self.m2.iter().map(|c| c.iter().map(|x| x * s).collect()).collect();
        SymTensorField::from_components(&self.grid, comps)
    }

    /// `M_t‖∇(v − v̄)‖²`
    pub fn fluctuation_grad_sq(&self) -> Result<f64> {
        Ok(self.m2_grad * self.inverse_weight()?)
    }

    /// `M_t⟨f − f̄, v − v̄⟩`
    pub fn fluctuation_flux(&self) -> Result<f64> {
        Ok(self.co_flux * self.inverse_weight()?)
    }
}

impl Observer for CenteredMoments {
    fn on_stage(&mut self, stage: &StageSample<'_>) {
        self.add(stage.weight, stage.v, stage.f, &stage.nonlinear.velocity).expect("solver stages share the grid");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::TimeAverager;
    use crate::spectral::{nonlinear_eval, with_transform};
    use std::f64::consts::PI;

    #[test]
    fn agrees_with_difference_formulas() {
        let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
        let mut avg = TimeAverager::new(&g);
        let mut mom = CenteredMoments::new(&g);
        for seed in 0..8 {
            let v = SpectralField::random(&g, seed, 4.0, 1.0 + seed as f64).unwrap();
            let f = SpectralField::random(&g, 100 + seed, 3.0, 0.5).unwrap();
            let eval = with_transform(&g, |tr| nonlinear_eval(tr, &v));
            let w = [1.0, 2.0, 2.0, 1.0][seed as usize % 4] / 6.0;
            avg.add_weighted(w, &v, &f, &eval).unwrap();
            mom.add(w, &v, &f, &eval.velocity).unwrap();
        }
        let agg = avg.finalize(1.0).unwrap();
        let r = mom.stress().unwrap();
        let diff = r.combine(1.0, &agg.reynolds_stress, -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-13 * r.max_abs());
        let g2 = mom.fluctuation_grad_sq().unwrap();
        assert!((g2 - agg.eps).abs() <= 1e-13 * agg.mean_grad_sq);
        let fl = mom.fluctuation_flux().unwrap();
        assert!((fl - agg.flux_turb).abs() <= 1e-13 * agg.mean_work.abs().max(fl.abs()));
        assert!(mom.mean_velocity().sub(&agg.v_bar).unwrap().l2_sq() <= 1e-28 * agg.mean_energy);
    }

    #[test]
    fn empty_moments_reject_queries() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        assert!(CenteredMoments::new(&g).stress().is_err());
    }
}

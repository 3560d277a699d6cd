//! Streaming time averages `M_t g = (1/t) ∫_0^t g(s) ds` and the Reynolds
//! statistics built from them.
//!
//! One [`TimeAverager`] owns every accumulator, so all averaged quantities
//! share a single set of quadrature weights. Fluctuation quantities are
//! never accumulated; they are recovered at the end by difference
//! (`R = M(v⊗v) − v̄⊗v̄`, `M‖∇v'‖² = M‖∇v‖² − ‖∇v̄‖²`, ...), which makes the
//! finite-`t` identities hold for whatever weights were used.

mod compensated;
mod moments;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{BoundVerdict, Observer, SolverState, StageSample, StageScalars};
use crate::spectral::{
    nonlinear_eval, outer_products, with_transform, GridSpec, ModeTable, NonlinearEval,
    SpectralField, SymTensorField,
};
use compensated::{CompensatedScalar, CompensatedSum};

pub use moments::CenteredMoments;

/// Relative tolerance for "uniform" sample spacing.
const SPACING_TOLERANCE: f64 = 1e-9;

struct Pending {
    t: f64,
    v: SpectralField,
    f: SpectralField,
    eval: NonlinearEval,
}

pub struct TimeAverager {
    grid: GridSpec,
    modes: Arc<ModeTable>,
    t_accum: CompensatedScalar,
    v: CompensatedSum,
    f: CompensatedSum,
    nl: CompensatedSum,
    vv: CompensatedSum,
    energy: CompensatedScalar,
    grad_sq: CompensatedScalar,
    work: CompensatedScalar,
    f_dual_sq: CompensatedScalar,
    last_t: Option<f64>,
    spacing: Option<f64>,
    pending: Option<Pending>,
}

impl TimeAverager {
    pub fn new(grid: &GridSpec) -> Self {
        let modes = grid.modes();
        let coeffs = 2 * modes.len() * grid.dimension();
        Self {
            grid: *grid,
            modes,
            t_accum: CompensatedScalar::default(),
            v: CompensatedSum::new(coeffs),
            f: CompensatedSum::new(coeffs),
            nl: CompensatedSum::new(coeffs),
            vv: CompensatedSum::new(grid.sym_components() * grid.points()),
            energy: CompensatedScalar::default(),
            grad_sq: CompensatedScalar::default(),
            work: CompensatedScalar::default(),
            f_dual_sq: CompensatedScalar::default(),
            last_t: None,
            spacing: None,
            pending: None,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Total weight accumulated so far (the averaging horizon).
    pub fn elapsed(&self) -> f64 {
        self.t_accum.value()
    }

    /// Adds `weight · g(v, f)` to every accumulator. `eval` must be the
    /// nonlinear evaluation of `v`.
    pub fn add_weighted(&mut self, weight: f64, v: &SpectralField, f: &SpectralField, eval: &NonlinearEval) -> Result<()> {
        self.add_with(weight, v, f, eval, StageScalars::of(v, f))
    }

    fn add_with(
        &mut self,
        weight: f64,
        v: &SpectralField,
        f: &SpectralField,
        eval: &NonlinearEval,
        scalars: StageScalars,
    ) -> Result<()> {
        if v.grid() != &self.grid || f.grid() != &self.grid || eval.term.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Domain(format!("quadrature weight must be non-negative, got {weight}")));
        }
        self.t_accum.add(weight);
        self.v.add_complex(weight, v.coefficients());
        self.f.add_complex(weight, f.coefficients());
        self.nl.add_complex(weight, eval.term.coefficients());
        let p = self.grid.points();
        for (c, prod) in eval.products.iter().enumerate() {
            self.vv.add_real(c * p, weight, prod);
        }
        self.energy.add(weight * scalars.energy);
        self.grad_sq.add(weight * scalars.grad_sq);
        self.work.add(weight * scalars.work);
        self.f_dual_sq.add(weight * scalars.f_dual_sq);
        Ok(())
    }

    /// Adds one solver stage with its RK4 quadrature weight. Stage times
    /// must be non-decreasing.
    pub fn accumulate_stage(&mut self, stage: &StageSample<'_>) -> Result<()> {
        if let Some(prev) = self.last_t {
            if stage.t < prev {
                return Err(Error::Ordering { previous: prev, next: stage.t });
            }
        }
        self.add_with(stage.weight, stage.v, stage.f, stage.nonlinear, stage.scalars)?;
        self.last_t = Some(stage.t);
        Ok(())
    }

    /// Trapezoid-rule streaming update from point samples `(t, v, f)` with
    /// strictly increasing, uniformly spaced times.
    pub fn accumulate(&mut self, t: f64, v: &SpectralField, f: &SpectralField) -> Result<()> {
        if v.grid() != &self.grid || f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if let Some(prev) = self.last_t {
            if t <= prev {
                return Err(Error::Ordering { previous: prev, next: t });
            }
            let h = t - prev;
            if let Some(s) = self.spacing {
                if (h - s).abs() > SPACING_TOLERANCE * s {
                    return Err(Error::NonUniformSpacing { expected: s, found: h });
                }
            }
            self.spacing.get_or_insert(h);
        }
        let eval = with_transform(&self.grid, |tr| nonlinear_eval(tr, v));
        if let Some(p) = self.pending.take() {
            let h = t - p.t;
            self.add_weighted(0.5 * h, &p.v, &p.f, &p.eval)?;
            self.add_weighted(0.5 * h, v, f, &eval)?;
        }
        self.pending = Some(Pending { t, v: v.clone(), f: f.clone(), eval });
        self.last_t = Some(t);
        Ok(())
    }

    /// Combines averagers over disjoint time ranges.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        self.t_accum.merge(&other.t_accum);
        self.v.merge(&other.v);
        self.f.merge(&other.f);
        self.nl.merge(&other.nl);
        self.vv.merge(&other.vv);
        self.energy.merge(&other.energy);
        self.grad_sq.merge(&other.grad_sq);
        self.work.merge(&other.work);
        self.f_dual_sq.merge(&other.f_dual_sq);
        self.last_t = match (self.last_t, other.last_t) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(())
    }

    fn inverse_elapsed(&self) -> Result<f64> {
        let t = self.elapsed();
        if t > 0.0 {
            Ok(1.0 / t)
        } else {
            Err(Error::EmptyAverage)
        }
    }

    pub fn mean_velocity(&self) -> Result<SpectralField> {
        let s = self.inverse_elapsed()?;
        Ok(SpectralField::from_projected(Arc::clone(&self.modes), self.v.scaled_complex(s)))
    }

    pub fn mean_force(&self) -> Result<SpectralField> {
        let s = self.inverse_elapsed()?;
        Ok(SpectralField::from_projected(Arc::clone(&self.modes), self.f.scaled_complex(s)))
    }

    /// `M_t(v ⊗ v)` in packed physical components.
    pub fn mean_products(&self) -> Result<SymTensorField> {
        let s = self.inverse_elapsed()?;
        let p = self.grid.points();
        let comps = (0..self.grid.sym_components()).map(|c| self.vv.scaled_real(c * p..(c + 1) * p, s)).collect();
        SymTensorField::from_components(&self.grid, comps)
    }

    pub fn finalize(&self, viscosity: f64) -> Result<ReynoldsAggregate> {
        let s = self.inverse_elapsed()?;
        let t = self.elapsed();
        let v_bar = self.mean_velocity()?;
        let f_bar = self.mean_force()?;
        let b = SpectralField::from_projected(Arc::clone(&self.modes), self.nl.scaled_complex(s));
        let mean_products = self.mean_products()?;
        let (mean_part, mean_flow_term) = with_transform(&self.grid, |tr| {
            let phys = v_bar.to_physical(tr);
            (outer_products(&phys), nonlinear_eval(tr, &v_bar).term)
        });
        let mean_part = SymTensorField::from_components(&self.grid, mean_part)?;
        let reynolds_stress = mean_products.combine(1.0, &mean_part, -1.0)?;
        let stress_divergence = b.sub(&mean_flow_term)?;
        let mean_grad_sq = self.grad_sq.value() * s;
        let mean_work = self.work.value() * s;
        let eps = viscosity * (mean_grad_sq - v_bar.grad_sq());
        let flux_turb = mean_work - f_bar.inner(&v_bar);
        let k_field = reynolds_stress.half_trace();
        Ok(ReynoldsAggregate {
            t,
            viscosity,
            mean_energy: self.energy.value() * s,
            mean_grad_sq,
            mean_work,
            mean_f_dual_sq: self.f_dual_sq.value() * s,
            eps,
            flux_turb,
            v_bar,
            f_bar,
            b,
            stress_divergence,
            reynolds_stress,
            k_field,
        })
    }
}

impl Observer for TimeAverager {
    fn on_stage(&mut self, stage: &StageSample<'_>) {
        self.accumulate_stage(stage).expect("solver stages are ordered and share the grid");
    }
}

/// Long-time statistics at one horizon `t`.
#[derive(Clone, Debug)]
pub struct ReynoldsAggregate {
    pub t: f64,
    pub viscosity: f64,
    pub mean_energy: f64,
    /// `M_t‖∇v‖²`
    pub mean_grad_sq: f64,
    /// `M_t⟨f, v⟩`
    pub mean_work: f64,
    /// `M_t‖f‖²_{V'}`
    pub mean_f_dual_sq: f64,
    /// `ν (M_t‖∇v‖² − ‖∇v̄‖²)`, unclamped.
    pub eps: f64,
    /// `M_t⟨f, v⟩ − ⟨f̄, v̄⟩`
    pub flux_turb: f64,
    pub v_bar: SpectralField,
    pub f_bar: SpectralField,
    /// `B = M_t P∇·(v⊗v)`
    pub b: SpectralField,
    /// `F = B − P∇·(v̄⊗v̄)`
    pub stress_divergence: SpectralField,
    pub reynolds_stress: SymTensorField,
    /// `½ tr R` per grid point.
    pub k_field: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub t: f64,
    pub mean_energy: f64,
    pub mean_grad_sq: f64,
    pub mean_work: f64,
    pub mean_f_dual_sq: f64,
    pub eps: f64,
    pub eps_clamped: f64,
    pub flux_turb: f64,
    pub v_bar_energy: f64,
    pub v_bar_grad_sq: f64,
    pub f_bar_dual_sq: f64,
    pub turbulent_energy: f64,
    pub min_eigenvalue: f64,
    pub max_abs_stress: f64,
}

impl ReynoldsAggregate {
    pub fn grid(&self) -> &GridSpec {
        self.v_bar.grid()
    }

    /// `∫ k dx = ½ M_t‖v'‖²`.
    pub fn turbulent_energy(&self) -> f64 {
        let g = self.grid();
        self.k_field.iter().sum::<f64>() * g.volume() / g.points() as f64
    }

    /// Smallest pointwise eigenvalue of `R` and `max|R|`.
    pub fn psd_check(&self) -> (f64, f64) {
        (self.reynolds_stress.min_eigenvalue(), self.reynolds_stress.max_abs())
    }

    pub fn summary(&self) -> AggregateSummary {
        let (min_eigenvalue, max_abs_stress) = self.psd_check();
        AggregateSummary {
            t: self.t,
            mean_energy: self.mean_energy,
            mean_grad_sq: self.mean_grad_sq,
            mean_work: self.mean_work,
            mean_f_dual_sq: self.mean_f_dual_sq,
            eps: self.eps,
            eps_clamped: self.eps.max(0.0),
            flux_turb: self.flux_turb,
            v_bar_energy: self.v_bar.l2_sq(),
            v_bar_grad_sq: self.v_bar.grad_sq(),
            f_bar_dual_sq: self.f_bar.dual_sq(),
            turbulent_energy: self.turbulent_energy(),
            min_eigenvalue,
            max_abs_stress,
        }
    }
}

/// Verdicts of the `M_t` operator bounds, valid for `t ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtBoundVerdicts {
    /// `‖M_t f‖_{V'} ≤ 2𝓕`
    pub force_mean: BoundVerdict,
    /// `M_t‖∇v‖² ≤ ‖v₀‖²/(νt) + 2𝓕²/ν²`
    pub dissipation: BoundVerdict,
    /// `M_t‖f‖²_{V'} ≤ 2𝓕²`
    pub force_energy: BoundVerdict,
    /// `|M_t⟨f, v⟩| ≤ √2 𝓕 (‖v₀‖²/(νt) + 2𝓕²/ν²)^{1/2}`
    pub work: BoundVerdict,
}

impl MtBoundVerdicts {
    pub fn all_hold(&self) -> bool {
        self.force_mean.holds && self.dissipation.holds && self.force_energy.holds && self.work.holds
    }
}

fn verdict(t: f64, bound: f64, value: f64) -> BoundVerdict {
    let slack = bound - value;
    BoundVerdict { holds: slack >= -1e-10 * bound.abs().max(value.abs()), slack, worst_t: t }
}

/// Checks the `M_t` bounds; `None` when `t < 1`, where they do not apply.
pub fn mt_operator_bound_check(agg: &ReynoldsAggregate, f_uloc_sq: f64, v0_sq: f64) -> Option<MtBoundVerdicts> {
    if agg.t < 1.0 {
        return None;
    }
    let nu = agg.viscosity;
    let t = agg.t;
    let f_norm = f_uloc_sq.sqrt();
    let dissipation_bound = v0_sq / (nu * t) + 2.0 * f_uloc_sq / (nu * nu);
    Some(MtBoundVerdicts {
        force_mean: verdict(t, 2.0 * f_norm, agg.f_bar.dual_sq().sqrt()),
        dissipation: verdict(t, dissipation_bound, agg.mean_grad_sq),
        force_energy: verdict(t, 2.0 * f_uloc_sq, agg.mean_f_dual_sq),
        work: verdict(t, 2f64.sqrt() * f_norm * dissipation_bound.sqrt(), agg.mean_work.abs()),
    })
}

/// Cauchy increments `‖v̄_{t_{j+1}} − v̄_{t_j}‖_V` along successive horizons.
pub fn mean_convergence_diagnostic(aggregates: &[ReynoldsAggregate]) -> Result<Vec<f64>> {
    aggregates
        .windows(2)
        .map(|w| Ok(w[1].v_bar.sub(&w[0].v_bar)?.grad_sq().sqrt()))
        .collect()
}

/// Aggregate and solver state captured when a run crosses a horizon.
#[derive(Clone, Debug)]
pub struct HorizonSnapshot {
    pub aggregate: ReynoldsAggregate,
    pub state: SolverState,
}

/// Observer that averages every solver stage and finalizes at each
/// requested horizon.
pub struct HorizonAverager {
    averager: TimeAverager,
    viscosity: f64,
    horizon_steps: Vec<u64>,
    next: usize,
    snapshots: Vec<HorizonSnapshot>,
}

impl HorizonAverager {
    /// `horizons` must be positive multiples of `dt`, strictly increasing.
    pub fn new(grid: &GridSpec, viscosity: f64, dt: f64, horizons: &[f64]) -> Result<Self> {
        let mut steps = Vec::with_capacity(horizons.len());
        for &h in horizons {
            let n = (h / dt).round();
            if h.is_nan() || h <= 0.0 || (n * dt - h).abs() > 1e-9 * h {
                return Err(Error::Domain(format!("horizon {h} is not a positive multiple of dt = {dt}")));
            }
            if let Some(&prev) = steps.last() {
                if n as u64 <= prev {
                    return Err(Error::Ordering { previous: prev as f64 * dt, next: h });
                }
            }
            steps.push(n as u64);
        }
        Ok(Self { averager: TimeAverager::new(grid), viscosity, horizon_steps: steps, next: 0, snapshots: Vec::new() })
    }

    pub fn averager(&self) -> &TimeAverager {
        &self.averager
    }

    pub fn snapshots(&self) -> &[HorizonSnapshot] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<HorizonSnapshot> {
        self.snapshots
    }
}

impl Observer for HorizonAverager {
    fn on_stage(&mut self, stage: &StageSample<'_>) {
        self.averager.on_stage(stage);
    }

    fn on_step(&mut self, state: &SolverState) {
        if self.horizon_steps.get(self.next) == Some(&state.step) {
            let mut aggregate = self.averager.finalize(self.viscosity).expect("positive horizon");
            // the stage weights sum to the horizon only up to roundoff
            aggregate.t = state.t;
            self.snapshots.push(HorizonSnapshot { aggregate, state: state.clone() });
            self.next += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::div_tensor;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(2, 16, 2.0 * PI).unwrap()
    }

    fn w(g: &GridSpec) -> SpectralField {
        SpectralField::from_modes(g, &[(vec![1, 2], vec![Complex64::new(2.0, 0.5), Complex64::new(-1.0, -0.25)])]).unwrap()
    }

    #[test]
    fn single_sample_is_an_empty_average() {
        let g = grid();
        let mut avg = TimeAverager::new(&g);
        avg.accumulate(0.0, &w(&g), &SpectralField::zeros(&g)).unwrap();
        assert!(matches!(avg.mean_velocity(), Err(Error::EmptyAverage)));
        assert!(matches!(avg.finalize(0.1), Err(Error::EmptyAverage)));
    }

    #[test]
    fn constant_input_is_reproduced() {
        let g = grid();
        let w = w(&g);
        let mut avg = TimeAverager::new(&g);
        for j in 0..=40 {
            avg.accumulate(j as f64 * 0.05, &w, &w).unwrap();
        }
        let agg = avg.finalize(0.1).unwrap();
        assert!(agg.v_bar.sub(&w).unwrap().l2_sq() <= 1e-30 * w.l2_sq());
        assert!(agg.reynolds_stress.max_abs() <= 1e-14 * w.max_speed_bound().powi(2));
        assert!(agg.eps.abs() <= 1e-14 * w.grad_sq());
        assert!(agg.flux_turb.abs() <= 1e-14 * w.l2_sq());
        assert!((agg.t - 2.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_is_exact_on_linear_functions() {
        let g = grid();
        let w = w(&g);
        let mut avg = TimeAverager::new(&g);
        let t_end = 3.0;
        for j in 0..=30 {
            let s = j as f64 * 0.1;
            avg.accumulate(s, &w.scaled(s), &SpectralField::zeros(&g)).unwrap();
        }
        let expected = w.scaled(t_end / 2.0);
        let mean = avg.mean_velocity().unwrap();
        assert!(mean.sub(&expected).unwrap().l2_sq().sqrt() <= 1e-14 * expected.l2_sq().sqrt());
    }

    #[test]
    fn cosine_oscillation_has_analytic_statistics() {
        let g = grid();
        let w = w(&g);
        let nu = 0.1;
        let mut avg = TimeAverager::new(&g);
        let n = 6284;
        let dt = 2.0 * PI / n as f64;
        for j in 0..=n {
            let s = j as f64 * dt;
            avg.accumulate(s, &w.scaled(s.cos()), &SpectralField::zeros(&g)).unwrap();
        }
        let agg = avg.finalize(nu).unwrap();
        assert!(agg.v_bar.l2_sq().sqrt() <= 1e-12 * w.l2_sq().sqrt());
        let expected_eps = nu * w.grad_sq() / 2.0;
        assert!((agg.eps - expected_eps).abs() <= 1e-10 * expected_eps);
        let half_ww = with_transform(&g, |tr| {
            SymTensorField::from_components(&g, outer_products(&w.to_physical(tr))).unwrap()
        });
        let diff = agg.reynolds_stress.combine(1.0, &half_ww, -0.5).unwrap();
        assert!(diff.max_abs() <= 1e-10 * half_ww.max_abs());
    }

    #[test]
    fn alternating_signs_give_outer_product() {
        let g = grid();
        let w = w(&g);
        let mut avg = TimeAverager::new(&g);
        let zero = SpectralField::zeros(&g);
        let plus = with_transform(&g, |tr| nonlinear_eval(tr, &w));
        let minus = with_transform(&g, |tr| nonlinear_eval(tr, &w.scaled(-1.0)));
        avg.add_weighted(0.5, &w, &zero, &plus).unwrap();
        avg.add_weighted(0.5, &w.scaled(-1.0), &zero, &minus).unwrap();
        let agg = avg.finalize(1.0).unwrap();
        assert!(agg.v_bar.is_zero());
        let ww = SymTensorField::from_components(&g, plus.products.clone()).unwrap();
        assert_eq!(agg.reynolds_stress, ww);
    }

    #[test]
    fn ordering_and_spacing_are_enforced() {
        let g = grid();
        let w = w(&g);
        let mut avg = TimeAverager::new(&g);
        avg.accumulate(0.0, &w, &w).unwrap();
        avg.accumulate(0.1, &w, &w).unwrap();
        assert!(matches!(avg.accumulate(0.1, &w, &w), Err(Error::Ordering { .. })));
        assert!(matches!(avg.accumulate(0.3, &w, &w), Err(Error::NonUniformSpacing { .. })));
    }

    #[test]
    fn stress_divergence_matches_tensor_divergence() {
        let g = grid();
        let mut avg = TimeAverager::new(&g);
        let zero = SpectralField::zeros(&g);
        for seed in 0..5 {
            let v = SpectralField::random(&g, seed, 4.0, 1.0).unwrap();
            let eval = with_transform(&g, |tr| nonlinear_eval(tr, &v));
            avg.add_weighted(0.1 + seed as f64 * 0.05, &v, &zero, &eval).unwrap();
        }
        let agg = avg.finalize(0.01).unwrap();
        let direct = div_tensor(&agg.reynolds_stress);
        let err = direct.sub(&agg.stress_divergence).unwrap().dual_sq().sqrt();
        assert!(err <= 1e-12 * agg.stress_divergence.dual_sq().sqrt(), "{err:e}");
        let (min_eig, max_abs) = agg.psd_check();
        assert!(min_eig >= -1e-12 * max_abs);
    }

    #[test]
    fn merge_equals_single_stream() {
        let g = grid();
        let zero = SpectralField::zeros(&g);
        let fields: Vec<SpectralField> = (0..6).map(|s| SpectralField::random(&g, s, 3.0, 1.0).unwrap()).collect();
        let evals: Vec<NonlinearEval> = fields.iter().map(|v| with_transform(&g, |tr| nonlinear_eval(tr, v))).collect();
        let mut whole = TimeAverager::new(&g);
        let mut a = TimeAverager::new(&g);
        let mut b = TimeAverager::new(&g);
        for (i, (v, e)) in fields.iter().zip(&evals).enumerate() {
            whole.add_weighted(0.25, v, &zero, e).unwrap();
            if i < 3 { a.add_weighted(0.25, v, &zero, e).unwrap() } else { b.add_weighted(0.25, v, &zero, e).unwrap() }
        }
        a.merge(&b).unwrap();
        let (x, y) = (a.finalize(0.1).unwrap(), whole.finalize(0.1).unwrap());
        assert!(x.v_bar.sub(&y.v_bar).unwrap().l2_sq() <= 1e-30);
        assert!((x.eps - y.eps).abs() <= 1e-15 * y.eps.abs());
    }

    #[test]
    fn steady_force_mean_is_within_twice_the_uloc_norm() {
        let g = grid();
        let f = w(&g);
        let mut avg = TimeAverager::new(&g);
        let zero = SpectralField::zeros(&g);
        for j in 0..=20 {
            avg.accumulate(j as f64 * 0.1, &zero, &f).unwrap();
        }
        let agg = avg.finalize(0.5).unwrap();
        let v = mt_operator_bound_check(&agg, f.dual_sq(), 0.0).unwrap();
        assert!(v.all_hold());
        assert!((v.force_mean.slack - f.dual_sq().sqrt()).abs() <= 1e-12 * f.dual_sq().sqrt());
    }

    #[test]
    fn short_horizons_are_not_applicable() {
        let g = grid();
        let zero = SpectralField::zeros(&g);
        let mut avg = TimeAverager::new(&g);
        avg.accumulate(0.0, &zero, &zero).unwrap();
        avg.accumulate(0.5, &zero, &zero).unwrap();
        assert!(mt_operator_bound_check(&avg.finalize(1.0).unwrap(), 1.0, 1.0).is_none());
    }

    #[test]
    fn constant_means_have_zero_increments() {
        let g = grid();
        let w = w(&g);
        let mut avg = TimeAverager::new(&g);
        let mut aggs = Vec::new();
        for j in 0..=16 {
            avg.accumulate(j as f64 * 0.25, &w, &w).unwrap();
            if j == 4 || j == 8 || j == 16 {
                aggs.push(avg.finalize(1.0).unwrap());
            }
        }
        let inc = mean_convergence_diagnostic(&aggs).unwrap();
        assert_eq!(inc.len(), 2);
        assert!(inc.iter().all(|&x| x <= 1e-14));
    }
}

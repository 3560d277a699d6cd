//! Families of steady forces converging to a limit force, their long-time
//! mean flows, and Cesàro means `S_n = (1/n) Σ_{k≤n} v̄^k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{HorizonAverager, ReynoldsAggregate};
use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::report::{energy_residual_rate, ReynoldsReport};
use crate::solver::{Solver, SolverConfig};
use crate::spectral::{nonlinear_term, GridSpec, SpectralField};

/// `f^k = f̄ + amplitude · e_k`, `e_k` a divergence-free mode of unit `L²`
/// norm at wavevector `q_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceFamily {
    pub f_bar: SpectralField,
    pub amplitude: f64,
    /// `q_1, q_2, ...`; defaults to `(k+1, 1)` or `(k+1, 1, 0)`.
    pub schedule: Vec<Vec<i64>>,
    /// Seeds the phase of each perturbation mode.
    pub seed: u64,
}

impl ForceFamily {
    pub fn new(f_bar: SpectralField, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Domain(format!("family amplitude must be non-negative, got {amplitude}")));
        }
        Ok(Self { f_bar, amplitude, schedule: Vec::new(), seed })
    }

    pub fn with_schedule(mut self, schedule: Vec<Vec<i64>>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.f_bar.grid()
    }

    /// Wavevector `q_k`, `k ≥ 1`.
    pub fn wavevector(&self, k: usize) -> Option<Vec<i64>> {
        if k == 0 {
            return None;
        }
        if !self.schedule.is_empty() {
            return self.schedule.get(k - 1).cloned();
        }
        let mut q = vec![0; self.grid().dimension()];
        q[0] = k as i64 + 1;
        q[1] = 1;
        Some(q)
    }

    /// Unit perturbation `e_k`.
    pub fn perturbation(&self, k: usize) -> Result<SpectralField> {
        let g = *self.grid();
        let q = self.wavevector(k).ok_or_else(|| Error::Domain(format!("schedule has no entry for member {k}")))?;
        if q.len() != g.dimension() || q.iter().all(|&x| x == 0) || !g.is_retained(&q) {
            return Err(Error::Domain(format!("wavevector {q:?} is not a retained mode")));
        }
        let direction = transverse_unit(&q);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let phase = Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>());
        // a e^{iq·x} + c.c. has squared L² norm 2|Ω||c|²
        let c = phase / (2.0 * g.volume()).sqrt();
        let amp = direction.iter().map(|a| c * *a).collect();
        SpectralField::from_modes(&g, &[(q, amp)])
    }

    pub fn member(&self, k: usize) -> Result<ForcingSpec> {
        let mut f = self.f_bar.clone();
        f.add_scaled(self.amplitude, &self.perturbation(k)?)?;
        Ok(ForcingSpec::steady(f))
    }
}

/// A real unit vector orthogonal to `q`.
fn transverse_unit(q: &[i64]) -> Vec<f64> {
    let qf: Vec<f64> = q.iter().map(|&x| x as f64).collect();
    let v = if qf.len() == 2 {
        vec![-qf[1], qf[0]]
    } else {
        // q × e_z, or q × e_x when q is along e_z
        if qf[0] != 0.0 || qf[1] != 0.0 {
            vec![qf[1], -qf[0], 0.0]
        } else {
            vec![0.0, qf[2], -qf[1]]
        }
    };
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// The first `n` members `f^1, ..., f^n` of the family.
pub fn generate_family(family: &ForceFamily, n: usize) -> Result<Vec<ForcingSpec>> {
    if n == 0 {
        return Err(Error::Domain("family size must be at least 1".into()));
    }
    (1..=n).map(|k| family.member(k)).collect()
}

/// Running Cesàro means `S_1, ..., S_n`.
pub fn cesaro(fields: &[SpectralField]) -> Result<Vec<SpectralField>> {
    let first = fields.first().ok_or_else(|| Error::Domain("Cesàro mean of an empty list".into()))?;
    // S_n = S_{n-1} + (x_n − S_{n-1})/n keeps constant sequences exact
    let mut mean = SpectralField::zeros(first.grid());
    let mut out = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        let step = f.sub(&mean)?;
        mean.add_scaled(1.0 / (i + 1) as f64, &step)?;
        out.push(mean.clone());
    }
    Ok(out)
}

/// One realization of the family at the ensemble horizon.
#[derive(Clone, Debug)]
pub struct Realization {
    pub index: usize,
    pub aggregate: ReynoldsAggregate,
    pub v_final: SpectralField,
    pub report: ReynoldsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n: usize,
    pub horizon: f64,
    /// `‖S_m − S_{m−1}‖_V`, `m = 2..n`.
    pub cauchy_increments: Vec<f64>,
    /// `‖(1/m) Σ f^k − f̄‖_{V'}`, `m = 1..n`.
    pub force_mean_distance: Vec<f64>,
    /// `ν (⟨M_t‖∇v‖²⟩ − ‖∇S_n‖²)`
    pub eps: f64,
    /// `(⟨B⟩ − P∇·(S_n⊗S_n), S_n)`
    pub ensemble_stress_work: f64,
    /// `⟨M_t⟨f, v⟩⟩ − ⟨⟨f̄⟩, S_n⟩`
    pub flux: f64,
    /// Boundary remainder of the ensemble closure.
    pub rho: f64,
    /// `ensemble_stress_work + rho`
    pub dissipativity_margin: f64,
    /// `eps − flux − dissipativity_margin`
    pub closure_defect: f64,
    /// `max(1e-8, 10 · worst realization energy-residual rate) · scale`
    pub tol_identity: f64,
    pub tol_sign: f64,
    pub dissipative: bool,
    pub max_mean_grad: f64,
    pub uniform_bound: f64,
    pub realizations_closed: bool,
    pub realizations: Vec<ReynoldsReport>,
}

#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub report: EnsembleReport,
    pub cesaro: Vec<SpectralField>,
    pub realizations: Vec<Realization>,
}

fn run_realization(family: &ForceFamily, template: &SolverConfig, index: usize) -> Result<Realization> {
    let mut config = template.clone();
    config.forcing = family.member(index + 1)?;
    config.initial = SpectralField::zeros(&template.grid);
    let horizon = config.t_end;
    let mut solver = Solver::new(config.clone())?;
    let mut averager = HorizonAverager::new(&config.grid, config.viscosity, config.dt, &[horizon])?;
    let out = solver.run(&mut averager)?;
    let snapshot = averager.into_snapshots().pop().ok_or(Error::EmptyAverage)?;
    let rate = energy_residual_rate(&out.samples, config.viscosity)?;
    let report = ReynoldsReport::assemble(&snapshot.aggregate, &config.initial, &out.state.v, rate)?;
    Ok(Realization { index, aggregate: snapshot.aggregate, v_final: out.state.v, report })
}

/// Runs `n` members of `family` from rest to `template.t_end` (in parallel,
/// reduced in index order) and evaluates the ensemble statistics.
pub fn ensemble_report(family: &ForceFamily, template: &SolverConfig, n: usize) -> Result<EnsembleRun> {
    if family.grid() != &template.grid {
        return Err(Error::GridMismatch);
    }
    let members = generate_family(family, n)?;
    let results: Vec<Result<Realization>> =
        (0..n).into_par_iter().map(|i| run_realization(family, template, i)).collect();
    let mut realizations = Vec::with_capacity(n);
    for (index, r) in results.into_iter().enumerate() {
        realizations.push(r.map_err(|e| Error::Realization { index, source: Box::new(e) })?);
    }
    let report = evaluate(family, &members, &realizations, template)?;
    let v_bars: Vec<SpectralField> = realizations.iter().map(|r| r.aggregate.v_bar.clone()).collect();
    Ok(EnsembleRun { report, cesaro: cesaro(&v_bars)?, realizations })
}

/// Ensemble statistics from finished realizations.
pub fn evaluate(
    family: &ForceFamily,
    members: &[ForcingSpec],
    realizations: &[Realization],
    template: &SolverConfig,
) -> Result<EnsembleReport> {
    let n = realizations.len();
    let nu = template.viscosity;
    let t = template.t_end;
    let v_bars: Vec<SpectralField> = realizations.iter().map(|r| r.aggregate.v_bar.clone()).collect();
    let s = cesaro(&v_bars)?;
    let cauchy_increments = s.windows(2).map(|w| Ok(w[1].sub(&w[0])?.grad_sq().sqrt())).collect::<Result<_>>()?;

    let forces: Vec<SpectralField> =
        members.iter().map(|m| m.steady_limit().cloned().ok_or(Error::Domain("family member is not steady".into()))).collect::<Result<_>>()?;
    let force_means = cesaro(&forces)?;
    let force_mean_distance = force_means.iter().map(|m| Ok(m.sub(&family.f_bar)?.dual_sq().sqrt())).collect::<Result<_>>()?;

    let s_n = &s[n - 1];
    let mean = |f: &dyn Fn(&Realization) -> f64| realizations.iter().map(f).sum::<f64>() / n as f64;
    let mean_field = |f: &dyn Fn(&Realization) -> SpectralField| -> Result<SpectralField> {
        let fs: Vec<SpectralField> = realizations.iter().map(f).collect();
        Ok(cesaro(&fs)?.pop().expect("non-empty"))
    };
    let b_mean = mean_field(&|r| r.aggregate.b.clone())?;
    let f_mean = mean_field(&|r| r.aggregate.f_bar.clone())?;
    let v_end_mean = mean_field(&|r| r.v_final.clone())?;

    let eps = nu * (mean(&|r| r.aggregate.mean_grad_sq) - s_n.grad_sq());
    let ensemble_stress_work = b_mean.sub(&nonlinear_term(s_n))?.inner(s_n);
    let flux = mean(&|r| r.aggregate.mean_work) - f_mean.inner(s_n);
    // realizations start from rest
    let rho = -mean(&|r| r.v_final.l2_sq()) / (2.0 * t) + v_end_mean.inner(s_n) / t;
    let dissipativity_margin = ensemble_stress_work + rho;
    let tol_sign = crate::report::SIGN_FLOOR * eps.max(nu * s_n.grad_sq());
    let worst_rate = realizations.iter().fold(0.0, |m: f64, r| m.max(r.report.energy_residual_rate));
    let scale = [eps, ensemble_stress_work, flux, rho].iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let tol_identity = crate::report::IDENTITY_FLOOR.max(crate::report::RESIDUAL_FACTOR * worst_rate) * scale;

    let max_mean_grad = v_bars.iter().map(|v| v.grad_sq().sqrt()).fold(0.0, f64::max);
    let force_bound = family.f_bar.dual_sq().sqrt() + family.amplitude;
    let uniform_bound = (2.0f64).sqrt() * force_bound / nu;

    Ok(EnsembleReport {
        n,
        horizon: t,
        cauchy_increments,
        force_mean_distance,
        eps,
        ensemble_stress_work,
        flux,
        rho,
        dissipativity_margin,
        closure_defect: eps - flux - dissipativity_margin,
        tol_identity,
        tol_sign,
        dissipative: dissipativity_margin >= -tol_sign,
        max_mean_grad,
        uniform_bound,
        realizations_closed: realizations.iter().all(|r| r.report.closure_holds),
        realizations: realizations.iter().map(|r| r.report.clone()).collect(),
    })
}

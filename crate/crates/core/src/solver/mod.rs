//! Time integration of the Galerkin-truncated Navier-Stokes system
//!
//! ```text
//! dv/dt + ν A v + P ∇·(v ⊗ v) = P f,      A = -Δ,
//! ```
//!
//! by the integrating-factor (Lawson) RK4 scheme: the viscous term is
//! integrated exactly through `e^{-ν|k|² t}` and RK4 is applied to the
//! nonlinearity and forcing in the rotated variable. Running integrals of
//! `‖∇v‖²` and `⟨f, v⟩` are carried as extra RK4 unknowns, i.e. they use the
//! stage values with weights `h/6, h/3, h/3, h/6`; observers see the same
//! stage values and weights, so every time average downstream shares this
//! quadrature.

mod bounds;
mod checkpoint;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::spectral::{nonlinear_eval, GridSpec, NonlinearEval, SpectralField, Transform};

pub use bounds::{energy_residual, verify_apriori_bounds, AprioriVerdicts, BoundVerdict};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC};

/// RK4 stage offsets and quadrature weights (fractions of `dt`).
pub const STAGE_OFFSETS: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
pub const STAGE_WEIGHTS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub viscosity: f64,
    pub dt: f64,
    pub t_end: f64,
    pub forcing: ForcingSpec,
    pub initial: SpectralField,
    pub sample_stride: usize,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return bad(format!("viscosity must be positive, got {}", self.viscosity));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return bad(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt));
        }
        if self.sample_stride == 0 {
            return bad("sample stride must be at least 1".into());
        }
        if self.initial.grid() != &self.grid || self.forcing.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let limit = cfl_limit(&self.grid, &self.initial);
        if self.dt > limit {
            return bad(format!("dt = {} violates the CFL guard dt <= {limit:.6e}", self.dt));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// `0.5 (L/N) / max(1, speed bound of v₀)`.
pub fn cfl_limit(grid: &GridSpec, initial: &SpectralField) -> f64 {
    0.5 * grid.spacing() / initial.max_speed_bound().max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub v: SpectralField,
    pub step: u64,
    /// `∫_0^t ‖∇v‖² ds`.
    pub dissipation_integral: f64,
    /// `∫_0^t ⟨f, v⟩ ds`.
    pub work_integral: f64,
}

impl SolverState {
    pub fn initial(v0: SpectralField) -> Self {
        Self { t: 0.0, v: v0, step: 0, dissipation_integral: 0.0, work_integral: 0.0 }
    }
}

/// One row of the sampled time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: u64,
    pub t: f64,
    /// `‖v‖²`
    pub energy: f64,
    pub grad_sq: f64,
    /// `⟨f(t), v(t)⟩`
    pub work_rate: f64,
    pub f_dual_sq: f64,
    pub dissipation_integral: f64,
    pub work_integral: f64,
}

/// Stage value handed to observers together with its quadrature weight.
pub struct StageSample<'a> {
    pub t: f64,
    pub weight: f64,
    pub v: &'a SpectralField,
    pub f: &'a SpectralField,
    pub nonlinear: &'a NonlinearEval,
    pub scalars: StageScalars,
}

/// Scalar functionals of a stage value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageScalars {
    /// `‖v‖²`
    pub energy: f64,
    pub grad_sq: f64,
    /// `⟨f, v⟩`
    pub work: f64,
    pub f_dual_sq: f64,
}

impl StageScalars {
    pub fn of(v: &SpectralField, f: &SpectralField) -> Self {
        Self { energy: v.l2_sq(), grad_sq: v.grad_sq(), work: f.inner(v), f_dual_sq: f.dual_sq() }
    }
}

pub trait Observer {
    fn on_stage(&mut self, _stage: &StageSample<'_>) {}
    fn on_step(&mut self, _state: &SolverState) {}
    fn on_sample(&mut self, _state: &SolverState, _sample: &Sample) {}
}

impl Observer for () {}

impl<T: Observer + ?Sized> Observer for &mut T {
    fn on_stage(&mut self, stage: &StageSample<'_>) {
        (**self).on_stage(stage)
    }
    fn on_step(&mut self, state: &SolverState) {
        (**self).on_step(state)
    }
    fn on_sample(&mut self, state: &SolverState, sample: &Sample) {
        (**self).on_sample(state, sample)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn on_stage(&mut self, stage: &StageSample<'_>) {
        self.0.on_stage(stage);
        self.1.on_stage(stage);
    }
    fn on_step(&mut self, state: &SolverState) {
        self.0.on_step(state);
        self.1.on_step(state);
    }
    fn on_sample(&mut self, state: &SolverState, sample: &Sample) {
        self.0.on_sample(state, sample);
        self.1.on_sample(state, sample);
    }
}

/// Diagnostics attached to a detected blow-up.
pub struct BlowUp {
    pub step: u64,
    pub t: f64,
    pub last_finite: SolverState,
    pub samples: Vec<Sample>,
}

impl fmt::Debug for BlowUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlowUp")
            .field("step", &self.step)
            .field("t", &self.t)
            .field("samples", &self.samples.len())
            .finish()
    }
}

impl fmt::Display for BlowUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "non-finite coefficients at step {} (t = {})", self.step, self.t)
    }
}

impl std::error::Error for BlowUp {}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub state: SolverState,
    pub samples: Vec<Sample>,
}

/// Stepper with cached integrating factors and FFT plans.
pub struct Solver {
    config: SolverConfig,
    transform: Transform,
    decay_half: Vec<f64>,
    decay_full: Vec<f64>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let modes = config.grid.modes();
        let nu = config.viscosity;
        let dt = config.dt;
        let decay_half = modes.k_sq.iter().map(|k2| (-nu * k2 * 0.5 * dt).exp()).collect();
        let decay_full = modes.k_sq.iter().map(|k2| (-nu * k2 * dt).exp()).collect();
        let transform = Transform::new(&config.grid);
        Ok(Self { config, transform, decay_half, decay_full })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn initial_state(&self) -> SolverState {
        SolverState::initial(self.config.initial.clone())
    }

    pub fn sample(&self, state: &SolverState) -> Sample {
        let f = self.config.forcing.evaluate_unchecked(state.t);
        let n = state.v.norms();
        Sample {
            step: state.step,
            t: state.t,
            energy: n.l2_sq,
            grad_sq: n.grad_sq,
            work_rate: f.inner(&state.v),
            f_dual_sq: f.dual_sq(),
            dissipation_integral: state.dissipation_integral,
            work_integral: state.work_integral,
        }
    }

    /// `-P∇·(V⊗V) + P f(t)` at one stage, reported to the observer.
    fn stage<O: Observer>(
        &mut self,
        t: f64,
        weight: f64,
        v: &SpectralField,
        observer: &mut O,
        integrals: &mut (f64, f64),
    ) -> Vec<Complex64> {
        let f = self.config.forcing.evaluate_unchecked(t);
        let nl = nonlinear_eval(&mut self.transform, v);
        let scalars = StageScalars::of(v, &f);
        integrals.0 += weight * scalars.grad_sq;
        integrals.1 += weight * scalars.work;
        observer.on_stage(&StageSample { t, weight, v, f: &f, nonlinear: &nl, scalars });
        f.coefficients().iter().zip(nl.term.coefficients()).map(|(a, b)| a - b).collect()
    }

    fn diag(&self, factors: &[f64], data: &[Complex64]) -> Vec<Complex64> {
        data.chunks(factors.len()).flat_map(|c| c.iter().zip(factors).map(|(z, e)| z * e)).collect()
    }

    /// Advances `state` by one step of size `dt`.
    pub fn step<O: Observer>(&mut self, state: &mut SolverState, observer: &mut O) -> Result<()> {
        let h = self.config.dt;
        let t0 = state.step as f64 * h;
        let t_half = (state.step as f64 + 0.5) * h;
        let t1 = (state.step + 1) as f64 * h;
        let modes = Arc::clone(state.v.modes());
        let wrap = |data: Vec<Complex64>| SpectralField::from_projected(Arc::clone(&modes), data);
        let mut integrals = (0.0, 0.0);
        let w = STAGE_WEIGHTS.map(|b| b * h);
        let v0 = state.v.coefficients();

        let k1 = self.stage(t0, w[0], &state.v, observer, &mut integrals);
        let v2: Vec<Complex64> = v0.iter().zip(&k1).map(|(a, b)| a + b * (0.5 * h)).collect();
        let v2 = wrap(self.diag(&self.decay_half, &v2));
        let k2 = self.stage(t_half, w[1], &v2, observer, &mut integrals);
        let e_half_v0 = self.diag(&self.decay_half, v0);
        let v3 = wrap(e_half_v0.iter().zip(&k2).map(|(a, b)| a + b * (0.5 * h)).collect());
        let k3 = self.stage(t_half, w[2], &v3, observer, &mut integrals);
        let e_full_v0 = self.diag(&self.decay_full, v0);
        let e_half_k3 = self.diag(&self.decay_half, &k3);
        let v4 = wrap(e_full_v0.iter().zip(&e_half_k3).map(|(a, b)| a + b * h).collect());
        let k4 = self.stage(t1, w[3], &v4, observer, &mut integrals);

        let e_full_k1 = self.diag(&self.decay_full, &k1);
        let k23: Vec<Complex64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
        let e_half_k23 = self.diag(&self.decay_half, &k23);
        let next: Vec<Complex64> = (0..v0.len())
            .map(|i| e_full_v0[i] + (e_full_k1[i] + e_half_k23[i] * 2.0 + k4[i]) * (h / 6.0))
            .collect();

        if !next.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            || !(integrals.0.is_finite() && integrals.1.is_finite())
        {
            return Err(Error::BlowUp(Box::new(BlowUp {
                step: state.step + 1,
                t: t1,
                last_finite: state.clone(),
                samples: Vec::new(),
            })));
        }
        state.v = wrap(next);
        state.step += 1;
        state.t = state.step as f64 * h;
        state.dissipation_integral += integrals.0;
        state.work_integral += integrals.1;
        observer.on_step(state);
        Ok(())
    }

    /// Integrates to `t_end`, sampling every `sample_stride` steps and at
    /// both ends.
    pub fn run<O: Observer>(&mut self, observer: &mut O) -> Result<RunOutput> {
        let mut state = self.initial_state();
        self.run_from(&mut state, observer).map(|samples| RunOutput { state, samples })
    }

    /// Continues from an arbitrary state (e.g. a checkpoint) to `t_end`.
    pub fn run_from<O: Observer>(&mut self, state: &mut SolverState, observer: &mut O) -> Result<Vec<Sample>> {
        let steps = self.config.steps();
        let stride = self.config.sample_stride as u64;
        let mut samples = Vec::new();
        let first = self.sample(state);
        observer.on_sample(state, &first);
        samples.push(first);
        while state.step < steps {
            if let Err(err) = self.step(state, observer) {
                return Err(match err {
                    Error::BlowUp(mut b) => {
                        b.samples = samples;
                        Error::BlowUp(b)
                    }
                    other => other,
                });
            }
            if state.step.is_multiple_of(stride) || state.step == steps {
                let s = self.sample(state);
                observer.on_sample(state, &s);
                samples.push(s);
            }
        }
        Ok(samples)
    }
}

/// One step from `state` under `config`.
pub fn step(state: &SolverState, config: &SolverConfig) -> Result<SolverState> {
    let mut solver = Solver::new(config.clone())?;
    let mut next = state.clone();
    solver.step(&mut next, &mut ())?;
    Ok(next)
}

/// Full run under `config`, streaming to `observer`.
pub fn run<O: Observer>(config: &SolverConfig, observer: &mut O) -> Result<RunOutput> {
    Solver::new(config.clone())?.run(observer)
}

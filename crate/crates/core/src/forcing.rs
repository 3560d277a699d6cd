//! Time-dependent force programs in `L²_uloc(ℝ₊; V')` and estimators for
//! their uniformly-local norm and convergence defect.
//!
//! `Bursts` and `RandomPhases` are constructions of this crate: bounded in
//! the uniformly-local norm without converging to any steady force.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralField};

/// Leray-projected amplitude of a phase mode at its compact mode index.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedMode {
    pub index: usize,
    pub amplitude: Vec<Complex64>,
}

/// One randomly rotating mode of a [`ForcingSpec::RandomPhases`] program.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMode {
    pub wavevector: Vec<i64>,
    pub amplitude: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec {
    Steady {
        base: SpectralField,
    },
    /// `f(t) = limit + e^{-rate t} transient`.
    ConvergentToSteady {
        limit: SpectralField,
        transient: SpectralField,
        rate: f64,
    },
    /// `f(t) = base + sin(ω t) modulation`.
    TimePeriodic {
        base: SpectralField,
        modulation: SpectralField,
        angular_frequency: f64,
    },
    /// `f(t) = pulse` while `t mod period < pulse_width`, zero otherwise.
    Bursts {
        pulse: SpectralField,
        pulse_width: f64,
        period: f64,
    },
    /// Fixed-amplitude modes whose phases follow a seeded piecewise-linear
    /// process with knots `correlation_time` apart.
    RandomPhases {
        grid: GridSpec,
        modes: Vec<PhaseMode>,
        correlation_time: f64,
        seed: u64,
        projected: Vec<ProjectedMode>,
    },
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {value}")))
    }
}

fn check_same_grid(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl ForcingSpec {
    pub fn zero(grid: &GridSpec) -> Self {
        ForcingSpec::Steady { base: SpectralField::zeros(grid) }
    }

    pub fn steady(base: SpectralField) -> Self {
        ForcingSpec::Steady { base }
    }

    pub fn convergent(limit: SpectralField, transient: SpectralField, rate: f64) -> Result<Self> {
        check_same_grid(&limit, &transient)?;
        check_positive("rate", rate)?;
        Ok(ForcingSpec::ConvergentToSteady { limit, transient, rate })
    }

    pub fn periodic(base: SpectralField, modulation: SpectralField, angular_frequency: f64) -> Result<Self> {
        check_same_grid(&base, &modulation)?;
        check_positive("angular frequency", angular_frequency)?;
        Ok(ForcingSpec::TimePeriodic { base, modulation, angular_frequency })
    }

    pub fn bursts(pulse: SpectralField, pulse_width: f64, period: f64) -> Result<Self> {
        if !(pulse_width > 0.0 && pulse_width <= 1.0) {
            return Err(Error::Domain(format!("pulse width must lie in (0, 1], got {pulse_width}")));
        }
        if !(period.is_finite() && period >= 1.0) {
            return Err(Error::Domain(format!("burst period must be >= 1, got {period}")));
        }
        Ok(ForcingSpec::Bursts { pulse, pulse_width, period })
    }

    pub fn random_phases(
        grid: &GridSpec,
        modes: Vec<PhaseMode>,
        correlation_time: f64,
        seed: u64,
    ) -> Result<Self> {
        check_positive("correlation time", correlation_time)?;
        let projected = modes
            .iter()
            .map(|m| {
                let field = SpectralField::from_modes(grid, &[(m.wavevector.clone(), m.amplitude.clone())])?;
                let index = field.modes().index_of(&m.wavevector).expect("validated by from_modes");
                Ok(ProjectedMode { index, amplitude: field.amplitude(&m.wavevector) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ForcingSpec::RandomPhases { grid: *grid, modes, correlation_time, seed, projected })
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            ForcingSpec::Steady { base } => base.grid(),
            ForcingSpec::ConvergentToSteady { limit, .. } => limit.grid(),
            ForcingSpec::TimePeriodic { base, .. } => base.grid(),
            ForcingSpec::Bursts { pulse, .. } => pulse.grid(),
            ForcingSpec::RandomPhases { grid, .. } => grid,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ForcingSpec::Steady { .. } => "steady",
            ForcingSpec::ConvergentToSteady { .. } => "convergent_to_steady",
            ForcingSpec::TimePeriodic { .. } => "time_periodic",
            ForcingSpec::Bursts { .. } => "bursts",
            ForcingSpec::RandomPhases { .. } => "random_phases",
        }
    }

    /// Whether the program admits a steady limit `f̃` with vanishing
    /// convergence defect.
    pub fn steady_limit(&self) -> Option<&SpectralField> {
        match self {
            ForcingSpec::Steady { base } => Some(base),
            ForcingSpec::ConvergentToSteady { limit, .. } => Some(limit),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForcingSpec::Steady { base } => base.is_zero(),
            _ => false,
        }
    }

    /// `f(t)`; deterministic in `(self, t)`.
    pub fn evaluate(&self, t: f64) -> Result<SpectralField> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("forcing evaluated at negative time {t}")));
        }
        Ok(self.evaluate_unchecked(t))
    }

    pub(crate) fn evaluate_unchecked(&self, t: f64) -> SpectralField {
        match self {
            ForcingSpec::Steady { base } => base.clone(),
            ForcingSpec::ConvergentToSteady { limit, transient, rate } => {
                let mut f = limit.clone();
                f.add_scaled((-rate * t).exp(), transient).expect("grids checked at construction");
                f
            }
            ForcingSpec::TimePeriodic { base, modulation, angular_frequency } => {
                let mut f = base.clone();
                f.add_scaled((angular_frequency * t).sin(), modulation)
                    .expect("grids checked at construction");
                f
            }
            ForcingSpec::Bursts { pulse, pulse_width, period } => {
                if t.rem_euclid(*period) < *pulse_width {
                    pulse.clone()
                } else {
                    SpectralField::zeros(pulse.grid())
                }
            }
            ForcingSpec::RandomPhases { grid, correlation_time, seed, projected, .. } => {
                let mut f = SpectralField::zeros(grid);
                let s = t / correlation_time;
                let knot = s.floor();
                let frac = s - knot;
                let knot = knot as u64;
                let n = f.modes().len();
                let d = f.dimension();
                let table = std::sync::Arc::clone(f.modes());
                let data = f.data_mut();
                for (index, mode) in projected.iter().enumerate() {
                    let phi = (1.0 - frac) * knot_phase(*seed, index as u64, knot)
                        + frac * knot_phase(*seed, index as u64, knot + 1);
                    let rot = Complex64::from_polar(1.0, phi);
                    let (m, mc) = (mode.index, table.conj[mode.index]);
                    for c in 0..d {
                        let z = mode.amplitude[c] * rot;
                        data[c * n + m] += z;
                        data[c * n + mc] += z.conj();
                    }
                }
                f
            }
        }
    }

    /// `‖f(t)‖²_{V'}`.
    pub fn dual_sq_at(&self, t: f64) -> f64 {
        self.evaluate_unchecked(t).dual_sq()
    }

    /// Finite-horizon estimate of `𝓕² = sup_t ∫_t^{t+1} ‖f(s)‖²_{V'} ds`:
    /// trapezoid rule on every window `[t, t+1]` whose start lies on the
    /// quadrature grid in `[0, horizon - 1]`.
    pub fn uloc_norm_sq(&self, horizon: f64, quadrature_dt: f64) -> Result<f64> {
        if horizon.is_nan() || horizon < 1.0 {
            return Err(Error::Domain(format!("uloc horizon must be >= 1, got {horizon}")));
        }
        let per_unit = steps_per_unit(quadrature_dt)?;
        let h = 1.0 / per_unit as f64;
        let windows = ((horizon - 1.0) * per_unit as f64 + 1e-9).floor() as usize + 1;
        let samples = windows + per_unit;
        let g: Vec<f64> = (0..samples).map(|j| self.dual_sq_at(j as f64 / per_unit as f64)).collect();
        let mut prefix = Vec::with_capacity(samples + 1);
        prefix.push(0.0);
        for (j, v) in g.iter().enumerate() {
            prefix.push(prefix[j] + v);
        }
        let mut best: f64 = 0.0;
        for i in 0..windows {
            let end = i + per_unit;
            let window = h * (prefix[end + 1] - prefix[i] - 0.5 * (g[i] + g[end]));
            best = best.max(window);
        }
        Ok(best)
    }

    /// `∫_t^{t+1} ‖f(s) - candidate‖²_{V'} ds` by composite Simpson.
    pub fn convergence_defect(&self, candidate: &SpectralField, t: f64, quadrature_dt: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("defect window start must be >= 0, got {t}")));
        }
        check_same_grid(candidate, &SpectralField::zeros(self.grid()))?;
        let mut per_unit = steps_per_unit(quadrature_dt)?;
        per_unit += per_unit % 2;
        let h = 1.0 / per_unit as f64;
        let mut sum = 0.0;
        for j in 0..=per_unit {
            let w = if j == 0 || j == per_unit {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = self.evaluate_unchecked(t + j as f64 * h);
            sum += w * f.sub(candidate).expect("grid checked").dual_sq();
        }
        Ok(sum * h / 3.0)
    }
}

fn steps_per_unit(quadrature_dt: f64) -> Result<usize> {
    if !(quadrature_dt > 0.0 && quadrature_dt <= 1e-2) {
        return Err(Error::Domain(format!("quadrature step must lie in (0, 1e-2], got {quadrature_dt}")));
    }
    Ok((1.0 / quadrature_dt).round() as usize)
}

/// Phase at knot `knot` of mode `index`: a counter-based ChaCha draw, so
/// any knot can be evaluated without replaying the stream.
fn knot_phase(seed: u64, index: u64, knot: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.set_word_pos(2 * knot as u128);
    let bits = rng.next_u64() >> 11;
    2.0 * PI * bits as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(2, 16, 2.0 * PI).unwrap()
    }

    fn mode(k: [i64; 2], a: f64) -> SpectralField {
        // amplitude along k^⊥
        let amp = vec![Complex64::new(-(k[1] as f64) * a, 0.0), Complex64::new(k[0] as f64 * a, 0.0)];
        SpectralField::from_modes(&grid(), &[(k.to_vec(), amp)]).unwrap()
    }

    #[test]
    fn steady_and_convergent_evaluation() {
        let g = mode([1, 2], 0.3);
        let h = mode([2, -1], 0.5);
        assert_eq!(ForcingSpec::steady(g.clone()).evaluate(7.5).unwrap(), g);
        let f = ForcingSpec::convergent(g.clone(), h.clone(), 1.0).unwrap();
        assert_eq!(f.evaluate(0.0).unwrap(), g.add(&h).unwrap());
        assert!(f.evaluate(-1.0).is_err());
    }

    #[test]
    fn bursts_window() {
        let p = mode([1, 1], 1.0);
        let f = ForcingSpec::bursts(p.clone(), 0.25, 1.0).unwrap();
        assert!(f.evaluate(0.5).unwrap().is_zero());
        assert_eq!(f.evaluate(0.1).unwrap(), p);
        assert!(ForcingSpec::bursts(p.clone(), 1.5, 1.0).is_err());
        assert!(ForcingSpec::bursts(p, 0.5, 0.5).is_err());
    }

    #[test]
    fn uloc_of_steady_force_is_its_dual_norm() {
        let g = mode([1, 2], 0.3);
        let f = ForcingSpec::steady(g.clone());
        let u = f.uloc_norm_sq(3.0, 1e-2).unwrap();
        assert!((u - g.dual_sq()).abs() <= 1e-12 * g.dual_sq());
        assert!(f.uloc_norm_sq(0.5, 1e-2).is_err());
        assert!(f.uloc_norm_sq(3.0, 0.1).is_err());
    }

    #[test]
    fn uloc_of_bursts_is_pulse_mass() {
        let mut p = mode([1, 1], 1.0);
        p.scale((4.0 / p.dual_sq()).sqrt());
        let f = ForcingSpec::bursts(p, 0.25, 1.0).unwrap();
        let u = f.uloc_norm_sq(4.0, 1e-3).unwrap();
        assert!((u - 1.0).abs() < 1e-12, "{u}");
    }

    #[test]
    fn uloc_is_monotone_in_horizon() {
        let g = mode([1, 2], 0.3);
        let h = mode([2, 1], 0.8);
        let f = ForcingSpec::periodic(g, h, 0.7).unwrap();
        let a = f.uloc_norm_sq(2.0, 1e-2).unwrap();
        let b = f.uloc_norm_sq(5.0, 1e-2).unwrap();
        let c = f.uloc_norm_sq(9.0, 1e-2).unwrap();
        assert!(a <= b && b <= c);
    }

    #[test]
    fn convergent_uloc_is_attained_at_the_first_window() {
        let g = mode([1, 2], 0.3);
        let h = mode([1, 2], 0.6);
        let rate: f64 = 0.8;
        let f = ForcingSpec::convergent(g.clone(), h.clone(), rate).unwrap();
        // closed form of ∫_0^1 ‖g + e^{-rs} h‖² ds
        let (gg, gh, hh) = (g.dual_sq(), g.inner_dual(&h), h.dual_sq());
        let exact = gg + 2.0 * gh * (1.0 - (-rate).exp()) / rate + hh * (1.0 - (-2.0 * rate).exp()) / (2.0 * rate);
        let u = f.uloc_norm_sq(10.0, 1e-3).unwrap();
        assert!((u - exact).abs() < 1e-6 * exact, "{u} {exact}");
        assert!(u > gg);
    }

    #[test]
    fn convergence_defect_matches_closed_form() {
        let g = mode([1, 2], 0.3);
        let h = mode([2, -1], 0.5);
        let f = ForcingSpec::convergent(g.clone(), h.clone(), 1.0).unwrap();
        for t in [0.0f64, 1.0, 2.5, 6.0] {
            let exact = h.dual_sq() * ((-2.0 * t).exp() - (-2.0 * (t + 1.0)).exp()) / 2.0;
            let q = f.convergence_defect(&g, t, 1e-3).unwrap();
            assert!((q - exact).abs() <= 1e-8 * exact, "t={t}: {q} vs {exact}");
        }
        let s = ForcingSpec::steady(g.clone());
        assert_eq!(s.convergence_defect(&g, 3.0, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn convergent_defect_decreases_monotonically() {
        let f = ForcingSpec::convergent(mode([1, 2], 0.3), mode([2, 1], 0.4), 0.5).unwrap();
        let limit = f.steady_limit().unwrap().clone();
        let defects: Vec<f64> =
            (0..8).map(|t| f.convergence_defect(&limit, t as f64, 1e-2).unwrap()).collect();
        assert!(defects.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bursts_do_not_converge() {
        let p = mode([1, 1], 1.0);
        let f = ForcingSpec::bursts(p.clone(), 0.25, 1.0).unwrap();
        let zero = SpectralField::zeros(&grid());
        for t in [1.0, 5.0, 20.0] {
            let q = f.convergence_defect(&zero, t, 1e-3).unwrap();
            assert!((q - 0.25 * p.dual_sq()).abs() < 2e-3 * p.dual_sq(), "{q}");
        }
        // no candidate does better than splitting the difference
        let half = p.scaled(0.25);
        assert!(f.convergence_defect(&half, 10.0, 1e-3).unwrap() > 0.1 * p.dual_sq());
    }

    #[test]
    fn random_phases_are_reproducible_and_bounded() {
        let g = grid();
        let modes = vec![
            PhaseMode { wavevector: vec![1, 2], amplitude: vec![Complex64::new(-0.4, 0.0), Complex64::new(0.2, 0.0)] },
            PhaseMode { wavevector: vec![3, -1], amplitude: vec![Complex64::new(0.1, 0.1), Complex64::new(0.3, 0.3)] },
        ];
        let f = ForcingSpec::random_phases(&g, modes.clone(), 0.5, 42).unwrap();
        let f2 = ForcingSpec::random_phases(&g, modes, 0.5, 42).unwrap();
        for t in [0.0, 0.3, 1.7, 12.25] {
            let a = f.evaluate(t).unwrap();
            assert_eq!(a, f2.evaluate(t).unwrap());
            let d = a.defects();
            assert!(d.divergence < 1e-14 && d.conjugate == 0.0);
        }
        // amplitudes are fixed, only phases move
        let n0 = f.dual_sq_at(0.0);
        assert!((f.dual_sq_at(3.3) - n0).abs() < 1e-12 * n0);
        let u = f.uloc_norm_sq(5.0, 1e-2).unwrap();
        assert!((u - n0).abs() < 1e-10 * n0);
        // the phase process keeps moving, so the force does not settle
        let a = f.evaluate(10.0).unwrap();
        assert!(f.convergence_defect(&a, 40.0, 1e-2).unwrap() > 1e-3 * n0);
    }
}

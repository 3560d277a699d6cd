//! Closure identities of the averaged equations at a finite horizon.
//!
//! With `v̄ = M_t v`, `B = M_t P∇·(v⊗v)` and `R = M_t(v⊗v) − v̄⊗v̄`, the
//! averaged Galerkin system reads
//!
//! ```text
//! ν A v̄ + P∇·(v̄⊗v̄ + R) − f̄ = (v₀ − v(t)) / t
//! ```
//!
//! and testing it with `v̄` and subtracting the averaged energy equality
//! gives `eps = (∇·R, v̄) + M_t⟨f', v'⟩ + rho`, where `rho` gathers the
//! boundary terms at `0` and `t`. Both hold up to the time integration
//! error, which the tolerances below are tied to.

use serde::{Deserialize, Serialize};

use crate::averaging::{AggregateSummary, MtBoundVerdicts, ReynoldsAggregate};
use crate::error::{Error, Result};
use crate::solver::{energy_residual, AprioriVerdicts, Sample};
use crate::spectral::{div_tensor, nonlinear_term, with_transform, SpectralField, SymTensorField};

/// Floor of the relative identity tolerance.
pub const IDENTITY_FLOOR: f64 = 1e-8;
/// Multiplier on the measured energy residual rate.
pub const RESIDUAL_FACTOR: f64 = 10.0;
/// Relative zero for sign verdicts.
pub const SIGN_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub absolute: f64,
    /// Largest magnitude among the balanced terms.
    pub scale: f64,
    pub relative: f64,
}

impl Residual {
    fn new(absolute: f64, scale: f64) -> Self {
        let relative = if scale > 0.0 { absolute / scale } else { absolute };
        Self { absolute, scale, relative }
    }
}

fn check_horizon(agg: &ReynoldsAggregate, t: f64) -> Result<()> {
    if (agg.t - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::HorizonMismatch { aggregate: agg.t, requested: t });
    }
    Ok(())
}

/// `(v₀ − v(t)) / t`
fn boundary_term(v0: &SpectralField, v_final: &SpectralField, t: f64) -> Result<SpectralField> {
    Ok(v0.sub(v_final)?.scaled(1.0 / t))
}

/// `V'` norm of `ν A v̄ + P∇·(v̄⊗v̄ + R) − f̄ − (v₀ − v(t))/t`.
pub fn reynolds_residual(agg: &ReynoldsAggregate, v0: &SpectralField, v_final: &SpectralField, t: f64) -> Result<Residual> {
    check_horizon(agg, t)?;
    let mut viscous = agg.v_bar.clone();
    let nu = agg.viscosity;
    viscous.map_diagonal(|k_sq| nu * k_sq);
    let boundary = boundary_term(v0, v_final, t)?;
    let residual = viscous.add(&agg.b)?.sub(&agg.f_bar)?.sub(&boundary)?;
    let scale = [&viscous, &agg.b, &agg.f_bar, &boundary]
        .iter()
        .map(|x| x.dual_sq().sqrt())
        .fold(0.0, f64::max);
    Ok(Residual::new(residual.dual_sq().sqrt(), scale))
}

/// `V'` norm of `ν A v̄ + P∇·(v̄⊗v̄ + R) − f̄`: the residual of the steady
/// mean-flow equation, which differs from [`reynolds_residual`] by the
/// boundary term `(v₀ − v(t))/t` and so decays like `1/t` on bounded runs.
pub fn limit_reynolds_residual(agg: &ReynoldsAggregate) -> Result<Residual> {
    let mut viscous = agg.v_bar.clone();
    let nu = agg.viscosity;
    viscous.map_diagonal(|k_sq| nu * k_sq);
    let residual = viscous.add(&agg.b)?.sub(&agg.f_bar)?;
    let scale = [&viscous, &agg.b, &agg.f_bar].iter().map(|x| x.dual_sq().sqrt()).fold(0.0, f64::max);
    Ok(Residual::new(residual.dual_sq().sqrt(), scale))
}

/// `ν‖∇v̄‖² + (∇·R, v̄) − ⟨f̄, v̄⟩ − ((v₀ − v(t))/t, v̄)`.
pub fn mean_energy_balance(agg: &ReynoldsAggregate, v0: &SpectralField, v_final: &SpectralField, t: f64) -> Result<Residual> {
    check_horizon(agg, t)?;
    let boundary = boundary_term(v0, v_final, t)?;
    let terms = [
        agg.viscosity * agg.v_bar.grad_sq(),
        agg.stress_divergence.inner(&agg.v_bar),
        -agg.f_bar.inner(&agg.v_bar),
        -boundary.inner(&agg.v_bar),
    ];
    let scale = terms.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    Ok(Residual::new(terms.iter().sum::<f64>().abs(), scale))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationRecord {
    pub eps: f64,
    /// `(∇·R, v̄)`
    pub stress_work: f64,
    pub flux_turb: f64,
    /// `(‖v₀‖² − ‖v(t)‖²)/(2t) − ((v₀ − v(t))/t, v̄)`
    pub rho: f64,
    /// `stress_work + flux_turb + rho − eps`
    pub margin: f64,
}

impl DissipationRecord {
    /// Largest magnitude among the terms of the closure identity.
    pub fn scale(&self) -> f64 {
        [self.eps, self.stress_work, self.flux_turb, self.rho].iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}

pub fn dissipation_inequality(
    agg: &ReynoldsAggregate,
    v0: &SpectralField,
    v_final: &SpectralField,
    t: f64,
) -> Result<DissipationRecord> {
    check_horizon(agg, t)?;
    let boundary = boundary_term(v0, v_final, t)?;
    let rho = (v0.l2_sq() - v_final.l2_sq()) / (2.0 * t) - boundary.inner(&agg.v_bar);
    let stress_work = agg.stress_divergence.inner(&agg.v_bar);
    Ok(DissipationRecord {
        eps: agg.eps,
        stress_work,
        flux_turb: agg.flux_turb,
        rho,
        margin: stress_work + agg.flux_turb + rho - agg.eps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoussinesqFit {
    pub nu_t: f64,
    pub k0: f64,
    pub relative_misfit: f64,
}

/// Least-squares fit `R ≈ −ν_t S(v̄) + (2/3) k₀ Id` in the Frobenius
/// pairing over the grid.
pub fn boussinesq_fit(agg: &ReynoldsAggregate) -> BoussinesqFit {
    let r = &agg.reynolds_stress;
    let g = agg.grid();
    let r_sq = r.inner(r);
    if r_sq == 0.0 {
        return BoussinesqFit { nu_t: 0.0, k0: 0.0, relative_misfit: 0.0 };
    }
    let s = with_transform(g, |tr| SymTensorField::strain_rate(tr, &agg.v_bar));
    let a1 = s.combine(-1.0, &s, 0.0).expect("same grid");
    let a2 = SymTensorField::identity(g, 2.0 / 3.0);
    let (g11, g12, g22) = (a1.inner(&a1), a1.inner(&a2), a2.inner(&a2));
    let (b1, b2) = (a1.inner(r), a2.inner(r));
    let det = g11 * g22 - g12 * g12;
    let (nu_t, k0) = if g11 <= 1e-28 * r_sq || det <= 1e-14 * g11 * g22 {
        (0.0, b2 / g22)
    } else {
        ((b1 * g22 - b2 * g12) / det, (g11 * b2 - g12 * b1) / det)
    };
    let fit = a1.combine(nu_t, &a2, k0).expect("same grid");
    let resid = r.combine(1.0, &fit, -1.0).expect("same grid");
    BoussinesqFit { nu_t, k0, relative_misfit: (resid.inner(&resid) / r_sq).max(0.0).sqrt() }
}

/// Defects of identities that hold by construction up to roundoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefects {
    /// `‖F − P∇·R‖_{V'}` relative to the largest term of the mean momentum
    /// balance: `‖F‖`, `‖B‖`, `‖N(v̄)‖`, `ν‖∇v̄‖` or `‖f̄‖` in `V'`.
    pub stress_divergence: f64,
    /// `|(∇·R, v̄) + (R, ∇v̄)| / max(|(∇·R, v̄)|, ‖R‖‖∇v̄‖)`
    pub integration_by_parts: f64,
}

pub fn identity_defects(agg: &ReynoldsAggregate) -> IdentityDefects {
    let direct = div_tensor(&agg.reynolds_stress);
    let momentum_scale = [
        agg.stress_divergence.dual_sq(),
        agg.b.dual_sq(),
        nonlinear_term(&agg.v_bar).dual_sq(),
        agg.viscosity * agg.viscosity * agg.v_bar.grad_sq(),
        agg.f_bar.dual_sq(),
    ]
    .iter()
    .fold(0.0, |m: f64, x| m.max(x.sqrt()));
    let diff = direct.sub(&agg.stress_divergence).expect("same grid").dual_sq().sqrt();
    let stress_divergence = if momentum_scale > 0.0 { diff / momentum_scale } else { diff };

    let work = agg.stress_divergence.inner(&agg.v_bar);
    let paired = with_transform(agg.grid(), |tr| agg.reynolds_stress.pair_gradient(tr, &agg.v_bar));
    let r_norm = agg.reynolds_stress.inner(&agg.reynolds_stress).sqrt();
    let scale = work.abs().max(r_norm * agg.v_bar.grad_sq().sqrt());
    let ibp = (work + paired).abs();
    IdentityDefects {
        stress_divergence,
        integration_by_parts: if scale > 0.0 { ibp / scale } else { ibp },
    }
}

/// `max` over sample intervals of `|energy residual| / interval length`.
pub fn energy_residual_rate(samples: &[Sample], viscosity: f64) -> Result<f64> {
    let residuals = energy_residual(samples, viscosity)?;
    Ok(residuals
        .iter()
        .zip(samples.windows(2))
        .fold(0.0, |m: f64, (r, w)| m.max(r.abs() / (w[1].t - w[0].t))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub identity: f64,
    pub sign: f64,
}

pub fn tolerances(record: &DissipationRecord, agg: &ReynoldsAggregate, energy_rate: f64) -> Tolerances {
    let identity = IDENTITY_FLOOR.max(RESIDUAL_FACTOR * energy_rate) * record.scale();
    let sign = SIGN_FLOOR * record.eps.max(agg.viscosity * agg.v_bar.grad_sq());
    Tolerances { identity, sign }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReynoldsReport {
    pub horizon: f64,
    pub aggregate: AggregateSummary,
    pub reynolds_residual: Residual,
    pub limit_residual: Residual,
    pub mean_energy_residual: Residual,
    pub dissipation: DissipationRecord,
    pub energy_residual_rate: f64,
    pub tolerances: Tolerances,
    pub closure_holds: bool,
    /// `(∇·R, v̄) ≥ −tol_sign`
    pub dissipative: bool,
    pub boussinesq: BoussinesqFit,
    pub identities: IdentityDefects,
    pub apriori: Option<AprioriVerdicts>,
    pub mt_bounds: Option<MtBoundVerdicts>,
}

impl ReynoldsReport {
    /// `energy_rate` is the measured energy residual per unit time of the
    /// run that produced `agg`.
    pub fn assemble(
        agg: &ReynoldsAggregate,
        v0: &SpectralField,
        v_final: &SpectralField,
        energy_rate: f64,
    ) -> Result<Self> {
        let t = agg.t;
        let dissipation = dissipation_inequality(agg, v0, v_final, t)?;
        let tolerances = tolerances(&dissipation, agg, energy_rate);
        Ok(Self {
            horizon: t,
            aggregate: agg.summary(),
            reynolds_residual: reynolds_residual(agg, v0, v_final, t)?,
            limit_residual: limit_reynolds_residual(agg)?,
            mean_energy_residual: mean_energy_balance(agg, v0, v_final, t)?,
            closure_holds: dissipation.margin.abs() <= tolerances.identity,
            dissipative: dissipation.stress_work >= -tolerances.sign,
            dissipation,
            energy_residual_rate: energy_rate,
            tolerances,
            boussinesq: boussinesq_fit(agg),
            identities: identity_defects(agg),
            apriori: None,
            mt_bounds: None,
        })
    }

    pub fn with_bounds(mut self, apriori: Option<AprioriVerdicts>, mt_bounds: Option<MtBoundVerdicts>) -> Self {
        self.apriori = apriori;
        self.mt_bounds = mt_bounds;
        self
    }
}

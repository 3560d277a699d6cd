use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};

/// Per-interval energy balance defect
/// `½‖v(t_{j+1})‖² − ½‖v(t_j)‖² + ν∫‖∇v‖² − ∫⟨f,v⟩`.
pub fn energy_residual(samples: &[Sample], viscosity: f64) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!("energy residual needs at least 2 samples, got {}", samples.len())));
    }
    check_uniform(samples)?;
    Ok(samples
        .windows(2)
        .map(|w| {
            0.5 * (w[1].energy - w[0].energy) + viscosity * (w[1].dissipation_integral - w[0].dissipation_integral)
                - (w[1].work_integral - w[0].work_integral)
        })
        .collect())
}

fn check_uniform(samples: &[Sample]) -> Result<()> {
    let mut spacing = None;
    for w in samples.windows(2) {
        let h = w[1].t - w[0].t;
        if h <= 0.0 {
            return Err(Error::Ordering { previous: w[0].t, next: w[1].t });
        }
        // the last interval may be shorter when t_end is not a stride multiple
        match spacing {
            None => spacing = Some(h),
            Some(s) if h > s * (1.0 + 1e-9) => return Err(Error::NonUniformSpacing { expected: s, found: h }),
            Some(_) => {}
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub holds: bool,
    /// `min(bound − value)` over the checked instants.
    pub slack: f64,
    /// Time at which the slack is smallest.
    pub worst_t: f64,
}

impl BoundVerdict {
    fn new() -> Self {
        Self { holds: true, slack: f64::INFINITY, worst_t: 0.0 }
    }

    fn update(&mut self, t: f64, bound: f64, value: f64, tolerance: f64) {
        let slack = bound - value;
        if slack < self.slack {
            self.slack = slack;
            self.worst_t = t;
        }
        if slack < -tolerance {
            self.holds = false;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriVerdicts {
    /// `‖v(t)‖² ≤ ‖v₀‖² + (3 + C_Ω/ν) 𝓕²/ν`
    pub energy: BoundVerdict,
    /// `ν ∫_0^t ‖∇v‖² ≤ ‖v₀‖² + ([t] + 1) 𝓕²/ν`
    pub dissipation: BoundVerdict,
    /// `‖v(τ)‖² + ν ∫_ξ^τ ‖∇v‖² ≤ ‖v(ξ)‖² + 𝓕²/ν` for `0 ≤ τ − ξ ≤ 1`
    pub window: BoundVerdict,
}

impl AprioriVerdicts {
    pub fn all_hold(&self) -> bool {
        self.energy.holds && self.dissipation.holds && self.window.holds
    }
}

/// Checks the three a-priori bounds along a sampled trajectory.
/// `f_uloc_sq` is `𝓕²`; `poincare` is `C_Ω`.
pub fn verify_apriori_bounds(
    samples: &[Sample],
    f_uloc_sq: f64,
    viscosity: f64,
    poincare: f64,
    v0_sq: f64,
) -> AprioriVerdicts {
    let nu = viscosity;
    let tol = |scale: f64| 1e-10 * scale.max(1e-300);
    let forcing = f_uloc_sq / nu;

    let energy_bound = v0_sq + (3.0 + poincare / nu) * forcing;
    let mut energy = BoundVerdict::new();
    let mut dissipation = BoundVerdict::new();
    for s in samples {
        energy.update(s.t, energy_bound, s.energy, tol(energy_bound));
        let bound = v0_sq + (s.t.floor() + 1.0) * forcing;
        dissipation.update(s.t, bound, nu * s.dissipation_integral, tol(bound));
    }

    // G(t) = ‖v(t)‖² + ν∫_0^t‖∇v‖²; the window bound asks for
    // G(τ) − min_{τ−1 ≤ ξ ≤ τ} G(ξ) ≤ 𝓕²/ν, tracked with a monotone deque.
    let g: Vec<f64> = samples.iter().map(|s| s.energy + nu * s.dissipation_integral).collect();
    let mut window = BoundVerdict::new();
    let mut deque: VecDeque<usize> = VecDeque::new();
    for (j, s) in samples.iter().enumerate() {
        while deque.back().is_some_and(|&i| g[i] >= g[j]) {
            deque.pop_back();
        }
        deque.push_back(j);
        while deque.front().is_some_and(|&i| s.t - samples[i].t > 1.0 + 1e-9) {
            deque.pop_front();
        }
        let min = g[*deque.front().expect("contains j")];
        window.update(s.t, forcing, g[j] - min, tol(g[j].abs().max(forcing)));
    }

    AprioriVerdicts { energy, dissipation, window }
}

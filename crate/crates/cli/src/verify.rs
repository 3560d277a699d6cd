//! Re-checks the invariants recorded in emitted reports.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use meanflow_core::report::IDENTITY_FLOOR;
use meanflow_core::ReynoldsReport;
use serde_json::Value;

use crate::error::CliError;
use crate::experiment::{EnsembleFile, RunReport, ENSEMBLE_SCHEMA, REPORT_SCHEMA};

/// Relative tolerance for the Reynolds and mean-energy residuals.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Relative tolerance for the coefficient-level identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Relative floor for the smallest eigenvalue of the Reynolds stress.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub location: String,
    pub passed: bool,
    /// `tolerance − defect`; negative when the check fails.
    pub slack: Option<f64>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}", self.name)?;
        if !self.location.is_empty() {
            write!(f, " [{}]", self.location)?;
        }
        if let Some(s) = self.slack {
            write!(f, " slack {s:.3e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifySummary {
    pub checks: Vec<Check>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    fn push(&mut self, name: &str, location: &str, defect: f64, tol: f64) {
        let slack = tol - defect;
        self.checks.push(Check {
            name: name.into(),
            location: location.into(),
            passed: slack >= 0.0,
            slack: Some(slack),
        });
    }

    fn flag(&mut self, name: &str, location: &str, passed: bool) {
        self.checks.push(Check { name: name.into(), location: location.into(), passed, slack: None });
    }
}

/// Every `report.json` and `ensemble.json` below `root`, sorted; `root`
/// itself when it is a file.
pub fn find_reports(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut found = Vec::new();
    let mut pending = vec![root.to_path_buf()];
    while let Some(dir) = pending.pop() {
        let entries = fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
            if path.is_dir() {
                pending.push(path);
            } else if matches!(path.file_name().and_then(|n| n.to_str()), Some("report.json" | "ensemble.json")) {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

pub fn verify(root: &Path) -> Result<VerifySummary, CliError> {
    let mut summary = VerifySummary::default();
    let paths = find_reports(root)?;
    if paths.is_empty() {
        summary.flag("no reports found", &root.display().to_string(), false);
        return Ok(summary);
    }
    for path in paths {
        let location = path.strip_prefix(root).unwrap_or(&path).display().to_string();
        let location = if location.is_empty() { path.display().to_string() } else { location };
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let value: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(_) => {
                summary.flag("readable JSON", &location, false);
                continue;
            }
        };
        let schema = value.get("schema").and_then(Value::as_str).unwrap_or("");
        match schema {
            REPORT_SCHEMA => match serde_json::from_value::<RunReport>(value) {
                Ok(report) => check_run(&mut summary, &location, &report),
                Err(_) => summary.flag("report layout", &location, false),
            },
            ENSEMBLE_SCHEMA => match serde_json::from_value::<EnsembleFile>(value) {
                Ok(file) => check_ensemble(&mut summary, &location, &file),
                Err(_) => summary.flag("report layout", &location, false),
            },
            other => summary.flag(&format!("known schema version (found {other:?})"), &location, false),
        }
    }
    Ok(summary)
}

fn check_run(summary: &mut VerifySummary, location: &str, report: &RunReport) {
    if report.per_horizon.is_empty() {
        summary.flag("empty average marked n/a", location, report.status == "n/a");
        return;
    }
    for r in &report.per_horizon {
        check_horizon(summary, &format!("{location} t={}", r.horizon), r);
    }
}

fn check_horizon(summary: &mut VerifySummary, at: &str, r: &ReynoldsReport) {
    let d = &r.dissipation;
    let closure = d.eps - d.stress_work - d.flux_turb - d.rho;
    summary.push("closure identity", at, closure.abs(), r.tolerances.identity);
    summary.push("Reynolds residual", at, r.reynolds_residual.relative, RESIDUAL_TOL);
    summary.push("mean energy balance", at, r.mean_energy_residual.relative, RESIDUAL_TOL);
    summary.push("stress divergence identity", at, r.identities.stress_divergence, IDENTITY_TOL);
    summary.push("integration by parts", at, r.identities.integration_by_parts, IDENTITY_TOL);
    let a = &r.aggregate;
    summary.push("Reynolds stress PSD", at, -a.min_eigenvalue, PSD_TOL * a.max_abs_stress);
    if let Some(v) = &r.apriori {
        let slack = v.energy.slack.min(v.dissipation.slack).min(v.window.slack);
        summary.checks.push(Check { name: "a-priori bounds".into(), location: at.into(), passed: v.all_hold(), slack: Some(slack) });
    }
    if let Some(v) = &r.mt_bounds {
        let slack = v.force_mean.slack.min(v.dissipation.slack).min(v.force_energy.slack).min(v.work.slack);
        summary.checks.push(Check { name: "M_t bounds".into(), location: at.into(), passed: v.all_hold(), slack: Some(slack) });
    }
}

fn check_ensemble(summary: &mut VerifySummary, location: &str, file: &EnsembleFile) {
    let r = &file.report;
    let at = format!("{location} n={}", r.n);
    let scale = [r.eps, r.ensemble_stress_work, r.flux, r.rho].iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let defect = r.eps - r.flux - r.ensemble_stress_work - r.rho;
    summary.push("ensemble closure identity", &at, defect.abs(), r.tol_identity.max(IDENTITY_FLOOR * scale));
    summary.push("ensemble dissipativity", &at, -r.dissipativity_margin, r.tol_sign);
    summary.push("uniform bound on mean gradients", &at, r.max_mean_grad, r.uniform_bound);
    summary.flag("realization closures", &at, r.realizations_closed);
    if r.cauchy_increments.len() >= 3 {
        // increments[i] = ‖S_{i+2} − S_{i+1}‖_V; monotone from n = 4 on, or
        // identically zero for a degenerate family
        let tail = &r.cauchy_increments[2..];
        summary.flag("Cesaro increments decreasing", &at, tail.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0 && w[1] == 0.0));
    }
}

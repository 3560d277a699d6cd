//! Drives solver, averaging, reports and ensembles from a configuration and
//! writes the artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use meanflow_core::averaging::{mean_convergence_diagnostic, mt_operator_bound_check, HorizonAverager};
use meanflow_core::ensemble::ensemble_report;
use meanflow_core::report::energy_residual_rate;
use meanflow_core::solver::{verify_apriori_bounds, write_checkpoint, Checkpoint};
use meanflow_core::{EnsembleReport, Error, ForcingSpec, ReynoldsReport, Sample, Solver, SolverState};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::CliError;

pub const REPORT_SCHEMA: &str = "meanflow-report/1";
pub const ENSEMBLE_SCHEMA: &str = "meanflow-ensemble/1";
pub const SERIES_SCHEMA: &str = "# meanflow-series 1";
pub const SERIES_COLUMNS: &str = "t,energy,grad_sq,work_rate,f_dual_sq";

/// Overrides the root against which relative output directories resolve.
pub const OUTPUT_ROOT_ENV: &str = "MEANFLOW_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingInfo {
    pub kind: String,
    /// Bursts and random phases are test constructions, not force classes
    /// singled out by the theory.
    pub constructed: bool,
    /// Windowed `sup_t ∫_t^{t+1} ‖f‖²_{V'}` over the run.
    pub uloc_norm_sq: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `‖v̄(t_{j+1}) − v̄(t_j)‖_V` between successive horizons.
    pub mean_increments: Vec<f64>,
    /// `∫_t^{t+1} ‖f − f̃‖²_{V'}` at each horizon, for forces with a steady limit.
    pub convergence_defects: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    /// `ok`, or `n/a` when no horizon was reached.
    pub status: String,
    pub config: ExperimentConfig,
    pub forcing: ForcingInfo,
    pub initial_energy: f64,
    pub horizons: Vec<f64>,
    pub per_horizon: Vec<ReynoldsReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub schema: String,
    pub config: ExperimentConfig,
    pub report: EnsembleReport,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub directory: PathBuf,
    pub report: RunReport,
    pub samples: Vec<Sample>,
}

#[derive(Clone, Debug)]
pub struct EnsembleOutcome {
    pub directory: PathBuf,
    pub report: EnsembleReport,
}

/// `root/directory` when a root is given and the directory is relative.
pub fn resolve_output(config: &ExperimentConfig, root: Option<&Path>) -> PathBuf {
    let dir = PathBuf::from(&config.output.directory);
    match root {
        Some(root) if dir.is_relative() => root.join(dir),
        _ => dir,
    }
}

/// Output directory honoring the environment override.
pub fn output_directory(config: &ExperimentConfig) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
    resolve_output(config, root.as_deref())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn series_csv(samples: &[Sample]) -> String {
    let mut out = format!("{SERIES_SCHEMA}\n{SERIES_COLUMNS}\n");
    for s in samples {
        out.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", s.t, s.energy, s.grad_sq, s.work_rate, s.f_dual_sq));
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_state(path: &Path, state: &SolverState, echo: &str) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let checkpoint = Checkpoint { state: state.clone(), config_echo: echo.to_string() };
    write_checkpoint(&mut out, &checkpoint)?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn checkpoint_name(horizon: f64) -> String {
    format!("checkpoint_t{horizon}.bin")
}

fn forcing_info(forcing: &ForcingSpec, t_end: f64, dt: f64) -> Result<ForcingInfo, CliError> {
    let uloc_norm_sq = forcing.uloc_norm_sq(t_end.max(1.0), dt.min(1e-2))?;
    Ok(ForcingInfo {
        kind: forcing.kind().to_string(),
        constructed: matches!(forcing, ForcingSpec::Bursts { .. } | ForcingSpec::RandomPhases { .. }),
        uloc_norm_sq: Some(uloc_norm_sq),
    })
}

/// Runs one trajectory and writes `series.csv`, `report.json` and a
/// checkpoint per horizon into `dir`, as selected by the output formats.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    let experiment = config.build()?;
    let solver_config = experiment.solver;
    let formats = &config.output.formats;
    let echo = config.echo();
    create_dir(dir)?;

    let nu = solver_config.viscosity;
    let dt = solver_config.dt;
    let v0 = solver_config.initial.clone();
    let forcing = forcing_info(&solver_config.forcing, solver_config.t_end, dt)?;
    let f_uloc_sq = forcing.uloc_norm_sq.expect("computed above");
    let steady_limit = solver_config.forcing.steady_limit().cloned();
    let forcing_spec = solver_config.forcing.clone();
    let grid = solver_config.grid;

    let mut averager = HorizonAverager::new(&grid, nu, dt, &experiment.horizons)?;
    let mut solver = Solver::new(solver_config)?;
    let output = match solver.run(&mut averager) {
        Ok(output) => output,
        Err(Error::BlowUp(blow_up)) => {
            if formats.contains(&OutputFormat::Csv) {
                write_file(&dir.join("series.csv"), series_csv(&blow_up.samples).as_bytes())?;
            }
            if formats.contains(&OutputFormat::Checkpoint) {
                write_state(&dir.join("checkpoint_last_finite.bin"), &blow_up.last_finite, &echo)?;
            }
            return Err(Error::BlowUp(blow_up).into());
        }
        Err(e) => return Err(e.into()),
    };
    let samples = output.samples;
    if formats.contains(&OutputFormat::Csv) {
        write_file(&dir.join("series.csv"), series_csv(&samples).as_bytes())?;
    }

    let snapshots = averager.into_snapshots();
    let energy_rate = if samples.len() >= 2 { energy_residual_rate(&samples, nu)? } else { 0.0 };
    let mut per_horizon = Vec::with_capacity(snapshots.len());
    let mut defects = Vec::with_capacity(snapshots.len());
    for (snap, &h) in snapshots.iter().zip(&experiment.horizons) {
        let upto: Vec<Sample> = samples.iter().filter(|s| s.t <= h * (1.0 + 1e-12)).cloned().collect();
        let apriori = verify_apriori_bounds(&upto, f_uloc_sq, nu, grid.poincare_constant(), v0.l2_sq());
        let mt = mt_operator_bound_check(&snap.aggregate, f_uloc_sq, v0.l2_sq());
        let report = ReynoldsReport::assemble(&snap.aggregate, &v0, &snap.state.v, energy_rate)?
            .with_bounds(Some(apriori), mt);
        per_horizon.push(report);
        if let Some(limit) = &steady_limit {
            defects.push(forcing_spec.convergence_defect(limit, h, dt.min(1e-2))?);
        }
        if formats.contains(&OutputFormat::Checkpoint) {
            write_state(&dir.join(checkpoint_name(h)), &snap.state, &echo)?;
        }
    }
    let aggregates: Vec<_> = snapshots.iter().map(|s| s.aggregate.clone()).collect();
    let mean_increments = if aggregates.len() >= 2 { mean_convergence_diagnostic(&aggregates)? } else { Vec::new() };

    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        status: if per_horizon.is_empty() { "n/a".into() } else { "ok".into() },
        config: config.clone(),
        forcing,
        initial_energy: v0.l2_sq(),
        horizons: experiment.horizons,
        per_horizon,
        diagnostics: Diagnostics {
            mean_increments,
            convergence_defects: steady_limit.map(|_| defects),
        },
    };
    if formats.contains(&OutputFormat::Json) {
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(RunOutcome { directory: dir.to_path_buf(), report, samples })
}

pub fn realization_dir(index: usize) -> String {
    format!("realization_{index:03}")
}

/// Runs the force family at horizon `t_end` from rest and writes
/// `ensemble.json` plus one `report.json` per realization.
pub fn run_ensemble(config: &ExperimentConfig, dir: &Path) -> Result<EnsembleOutcome, CliError> {
    let mut config = config.clone();
    config.ensemble.enabled = true;
    let experiment = config.build()?;
    let family = experiment.family.expect("enabled above");
    let template = experiment.solver;
    let run = ensemble_report(&family, &template, config.ensemble.n)?;
    create_dir(dir)?;

    let realizations = dir.join("realizations");
    create_dir(&realizations)?;
    for (i, (report, realization)) in run.report.realizations.iter().zip(&run.realizations).enumerate() {
        let member = family.member(i + 1)?;
        let sub = realizations.join(realization_dir(i));
        create_dir(&sub)?;
        let forcing = forcing_info(&member, template.t_end, template.dt)?;
        let mt = mt_operator_bound_check(&realization.aggregate, forcing.uloc_norm_sq.expect("computed"), 0.0);
        let file = RunReport {
            schema: REPORT_SCHEMA.into(),
            status: "ok".into(),
            config: config.clone(),
            forcing,
            initial_energy: 0.0,
            horizons: vec![report.horizon],
            per_horizon: vec![report.clone().with_bounds(None, mt)],
            diagnostics: Diagnostics { mean_increments: Vec::new(), convergence_defects: None },
        };
        write_json(&sub.join("report.json"), &file)?;
    }
    let file = EnsembleFile { schema: ENSEMBLE_SCHEMA.into(), config: config.clone(), report: run.report.clone() };
    write_json(&dir.join("ensemble.json"), &file)?;
    Ok(EnsembleOutcome { directory: dir.to_path_buf(), report: run.report })
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meanflow_cli::experiment::{output_directory, run_ensemble, run_experiment};
use meanflow_cli::{parse_config, verify, CliError, ExperimentConfig};
use meanflow_core::solver::read_checkpoint;

#[derive(Parser)]
#[command(name = "meanflow", version, about = "Long-time averages of forced Navier-Stokes flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write series, reports and checkpoints.
    Run { config: PathBuf },
    /// Run the steady-force family described by the ensemble section.
    Ensemble { config: PathBuf },
    /// Re-check every report below a directory.
    Verify { dir: PathBuf },
    /// Print the header of a checkpoint file.
    CheckpointInfo { file: PathBuf },
    /// Parse a configuration and print it with defaults filled.
    Check { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            let config = load(&config)?;
            let out = run_experiment(&config, &output_directory(&config))?;
            println!("wrote {} ({} horizon(s), status {})", out.directory.display(), out.report.per_horizon.len(), out.report.status);
        }
        Command::Ensemble { config } => {
            let config = load(&config)?;
            let out = run_ensemble(&config, &output_directory(&config))?;
            let r = &out.report;
            println!(
                "wrote {} (n = {}, margin {:e}, dissipative {})",
                out.directory.display(),
                r.n,
                r.dissipativity_margin,
                r.dissipative
            );
        }
        Command::Verify { dir } => {
            let summary = verify(&dir)?;
            for check in &summary.checks {
                println!("{check}");
            }
            if !summary.passed() {
                return Err(CliError::Verification(summary.failures()));
            }
        }
        Command::CheckpointInfo { file } => {
            let input = fs::File::open(&file).map_err(|e| CliError::io(&file, e))?;
            let cp = read_checkpoint(std::io::BufReader::new(input))?;
            let g = cp.grid();
            let s = &cp.state;
            println!("dimension {}", g.dimension());
            println!("resolution {}", g.resolution());
            println!("period {:?}", g.period());
            println!("modes {}", s.v.modes().len());
            println!("t {:?}", s.t);
            println!("step {}", s.step);
            println!("energy {:e}", s.v.l2_sq());
            println!("grad_sq {:e}", s.v.grad_sq());
            println!("config {}", cp.config_echo);
        }
        Command::Check { config } => {
            println!("{}", load(&config)?.to_json_pretty());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use esdg::check;
use esdg::output;
use esdg::study;
use esdg::{AppError, RunConfig};

/// Entropy-stable DGSEM solver for the Saint-Venant-Exner system.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write snapshots and the entropy time series.
    Solve {
        config: PathBuf,
        /// Output directory; defaults to `output.directory` of the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Replace a config value, e.g. `--override time.t_end=5`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Manufactured-solution convergence study over `study.resolutions`.
    Convergence {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Entropy rate and cost of each fluctuation in `study.fluctuations`.
    EntropyStudy {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Operator and fluctuation self-tests.
    Check,
}

fn run(cli: Cli) -> Result<bool, AppError> {
    esdg::configure_threads()?;
    match cli.command {
        Command::Solve {
            config,
            output_dir,
            overrides,
        } => {
            let cfg = RunConfig::from_file(&config, &overrides)?;
            let dir = output_dir.unwrap_or_else(|| cfg.output.directory.clone());
            let (_, summary) = study::run_simulation(&cfg, &dir)?;
            println!(
                "{} K={} N={}: t = {} after {} steps, entropy {:.10e} -> {:.10e}",
                summary.scenario,
                summary.elements,
                summary.degree,
                summary.final_time,
                summary.steps,
                summary.initial_entropy,
                summary.final_entropy
            );
            println!("output written to {}", dir.display());
            Ok(true)
        }
        Command::Convergence { config, overrides } => {
            let cfg = RunConfig::from_file(&config, &overrides)?;
            let report = match study::run_convergence(&cfg) {
                Ok(r) => r,
                Err(AppError::PartialConvergence { report, source }) => {
                    eprint!("{}", report.to_table());
                    return Err(*source);
                }
                Err(e) => return Err(e),
            };
            print!("{}", report.to_table());
            let path = cfg.output.directory.join("convergence.json");
            output::write_text(&path, &report.to_json())?;
            println!("report written to {}", path.display());
            Ok(true)
        }
        Command::EntropyStudy { config, overrides } => {
            let cfg = RunConfig::from_file(&config, &overrides)?;
            let rows = study::run_entropy_study(&cfg)?;
            print!("{}", study::entropy_study_table(&rows));
            let path = cfg.output.directory.join("entropy_study.json");
            output::write_text(
                &path,
                &serde_json::to_string_pretty(&rows).expect("rows serialize"),
            )?;
            Ok(rows.iter().all(|r| r.error.is_none()))
        }
        Command::Check => {
            let results = check::run_checks();
            print!("{}", check::format_checks(&results));
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

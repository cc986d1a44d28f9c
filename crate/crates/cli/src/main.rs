use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conflow::harness::{check_initial, compare_runs, run_scenario, verify_exact, ScenarioConfig};
use conflow::FlowError;

/// Log-diffusion / conformal Ricci flow scenarios.
#[derive(Parser)]
#[command(name = "conflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config, default runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a cigar run with the exact solution at dt and dt/2.
    VerifyExact {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compare the final states and diagnostics of two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check the flow hypotheses on the initial data of a scenario.
    CheckInitial {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

const VERIFICATION_FAILURE: u8 = 1;
const SOLVER_FAILURE: u8 = 2;
const BAD_INPUT: u8 = 3;

fn exit_code(e: &FlowError) -> u8 {
    match e {
        FlowError::StepRejected(_) | FlowError::NewtonFailure { .. } | FlowError::Estimation(_) => {
            SOLVER_FAILURE
        }
        _ => BAD_INPUT,
    }
}

fn execute(cmd: Command) -> Result<u8, FlowError> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            let outcome = run_scenario(&cfg, &dir)?;
            print!("{}", std::fs::read_to_string(&outcome.artifacts.report)?);
            println!("artifacts: {}", dir.display());
            Ok(if outcome.succeeded() {
                0
            } else {
                SOLVER_FAILURE
            })
        }
        Command::VerifyExact { config, json } => {
            let report = verify_exact(&ScenarioConfig::load(&config)?)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", report.to_text());
            }
            Ok(if report.passed {
                0
            } else {
                VERIFICATION_FAILURE
            })
        }
        Command::Compare { a, b, json } => {
            let report = compare_runs(&a, &b)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", report.to_text());
            }
            Ok(0)
        }
        Command::CheckInitial { config, json } => {
            let report = check_initial(&ScenarioConfig::load(&config)?)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap's own usage-error status (2) would read as a solver failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { BAD_INPUT } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

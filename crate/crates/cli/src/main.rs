use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffdrive::sim::{
    compare_modes, events_to_text, run_scenario, write_trace, RunError, RunOutput, Scenario, ScenarioError,
};
use diffdrive::supervisor::ControllerMode;

const EXIT_INVALID: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;
const EXIT_LOW_BETTER: u8 = 4;

/// Differential-drive robot simulator with adaptive traction control.
#[derive(Parser)]
#[command(name = "diffdrive", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario in one controller mode.
    Run {
        scenario: PathBuf,
        /// Overrides the mode in the scenario file.
        #[arg(long)]
        mode: Option<ControllerMode>,
        /// Directory for the trace, summary and event log.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the noise seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a scenario in both modes and compare final displacement errors.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and its velocity plan without simulating.
    Validate { scenario: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = match e {
            ScenarioError::Plan(_) => EXIT_INFEASIBLE,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = match e {
            RunError::Plan(_) => EXIT_INFEASIBLE,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn file_stem(scenario: &Scenario, path: &Path) -> String {
    if scenario.name.is_empty() {
        path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
    } else {
        scenario.name.clone()
    }
}

fn save(out: &Path, stem: &str, run: &RunOutput) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let base = format!("{stem}_{}", run.summary.mode);
    let trace = out.join(format!("{base}.csv"));
    write_trace(&run.trace, &trace).map_err(|e| io_failure(&trace, e))?;
    let summary = out.join(format!("{base}.summary.txt"));
    std::fs::write(&summary, run.summary.to_text()).map_err(|e| io_failure(&summary, e))?;
    let events = out.join(format!("{base}.events.csv"));
    std::fs::write(&events, events_to_text(&run.events)).map_err(|e| io_failure(&events, e))?;
    Ok(())
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            println!(
                "ok: {} sections, {:.3} m, mass {:.3} kg, yaw inertia {:.4} kg·m²",
                s.path.sections().len(),
                s.path.total_length(),
                s.params.mass,
                s.params.yaw_inertia
            );
            Ok(0)
        }
        Command::Run {
            scenario,
            mode,
            out,
            seed,
        } => {
            let s = Scenario::load(&scenario)?;
            let mode = mode.unwrap_or(s.controller.mode);
            let seed = seed.unwrap_or(s.noise.seed);
            let run = run_scenario(&s, mode, seed)?;
            if let Some(out) = out {
                save(&out, &file_stem(&s, &scenario), &run)?;
            }
            print!("{}", run.summary.to_text());
            Ok(if run.summary.completed() { 0 } else { EXIT_INCOMPLETE })
        }
        Command::Compare { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let cmp = compare_modes(&s, s.noise.seed)?;
            let report = cmp.to_text();
            if let Some(out) = out {
                let stem = file_stem(&s, &scenario);
                save(&out, &stem, &cmp.low)?;
                save(&out, &stem, &cmp.combined)?;
                let path = out.join(format!("{stem}_compare.txt"));
                std::fs::write(&path, &report).map_err(|e| io_failure(&path, e))?;
            }
            print!("{report}");
            Ok(if !cmp.low.summary.completed() && !cmp.combined.summary.completed() {
                EXIT_INCOMPLETE
            } else if cmp.combined_wins() {
                0
            } else {
                EXIT_LOW_BETTER
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit 2 is reserved for infeasible plans
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

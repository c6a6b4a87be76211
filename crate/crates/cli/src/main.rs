use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpsched_core::harness::{self, RunOptions, ScenarioConfig, PRESET_NAMES};
use mpsched_core::SchedulerKind;

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mpsched", version, about = "Multipath packet scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scheduler on a scenario.
    Run {
        #[command(flatten)]
        common: Common,
        /// fifo, fdps or rtt-half; defaults to the scenario's scheduler.
        #[arg(long)]
        scheduler: Option<SchedulerKind>,
    },
    /// Run every scheduler on a scenario.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// List built-in scenarios.
    Presets,
}

#[derive(Debug, Args)]
struct Common {
    /// Preset name or path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Base seed; run k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<u32>,
    /// Simulated seconds per run.
    #[arg(long)]
    sim_seconds: Option<f64>,
    #[arg(long, env = "MPSCHED_OUT", default_value = "mpsched-out")]
    out: PathBuf,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = harness::load_scenario(&common.scenario).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(runs) = common.runs {
        cfg.runs = runs;
    }
    if let Some(secs) = common.sim_seconds {
        cfg.sim_seconds = secs;
    }
    cfg.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    Ok(cfg)
}

fn execute(cfg: &ScenarioConfig, schedulers: &[SchedulerKind], out: &Path) -> Result<(), Failure> {
    let results =
        harness::run_compare(cfg, schedulers, RunOptions::default()).map_err(|e| Failure::Runtime(e.to_string()))?;
    for r in &results {
        if let Some(run) = r.runs.iter().find(|run| !run.result.sanity.ok()) {
            return Err(Failure::Runtime(format!(
                "{} {} run {} (seed {}) failed sanity checks: {:?}",
                r.scenario, r.scheduler, run.result.run_index, run.result.seed, run.result.sanity
            )));
        }
    }
    let files = harness::emit_outputs(&results, out).map_err(|e| Failure::Runtime(e.to_string()))?;
    print!("{}", harness::occupancy_table(&results));
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Run { common, scheduler } => {
            let mut cfg = load(&common)?;
            if let Some(s) = scheduler {
                cfg.scheduler = s;
            }
            execute(&cfg, &[cfg.scheduler], &common.out)
        }
        Command::Compare { common } => {
            let cfg = load(&common)?;
            execute(&cfg, &SchedulerKind::ALL, &common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use prospect_grid::scenario::slots::DEFAULT_SLOT_SEED;
use prospect_grid::scenario::{emit_outputs, load_scenario, run_studies, synthetic_slots, Study};
use prospect_grid::Result;

/// Log level is read from PROSPECT_GRID_LOG (e.g. `info`, `debug`).
#[derive(Parser)]
#[command(name = "prospect-grid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Allocation,
    Pricing,
    Ee,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or all studies and write CSV tables plus a manifest.
    Run {
        /// Scenario JSON file, or `paper_defaults` for the bundled one.
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        study: StudyArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the number of random populations per demand level.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// Write a synthetic 24-slot reference-point table.
    GenData {
        #[arg(long)]
        consumers: usize,
        #[arg(long)]
        peak_hour: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SLOT_SEED)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            study,
            out,
            seed,
            trials,
        } => {
            let mut scn = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                scn.seed = seed;
            }
            if let Some(trials) = trials {
                if trials == 0 {
                    return Err(prospect_grid::Error::Config(
                        "--trials must be at least 1".into(),
                    ));
                }
                scn.pricing.sweep.trials = trials;
            }
            let studies: Vec<Study> = match study {
                StudyArg::Allocation => vec![Study::Allocation],
                StudyArg::Pricing => vec![Study::Pricing],
                StudyArg::Ee => vec![Study::Ee],
                StudyArg::All => Study::ALL.to_vec(),
            };
            let outputs = run_studies(&scn, &studies)?;
            for path in emit_outputs(&outputs, &scn, &studies, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Validate { scenario } => {
            let scn = load_scenario(&scenario)?;
            println!(
                "ok: {} consumers, lambda = {}, alpha = {}, cost = {}χ² + {}χ + {}",
                scn.reference_points.len(),
                scn.lambda,
                scn.alpha,
                scn.cost.a,
                scn.cost.b,
                scn.cost.c
            );
        }
        Command::GenData {
            consumers,
            peak_hour,
            out,
            seed,
        } => {
            let table = synthetic_slots(consumers, peak_hour, seed)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| prospect_grid::Error::Io {
                    path: dir.to_path_buf(),
                    source: e,
                })?;
            }
            std::fs::write(&out, table.to_csv_string()).map_err(|e| prospect_grid::Error::Io {
                path: out.clone(),
                source: e,
            })?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROSPECT_GRID_LOG", "warn"))
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

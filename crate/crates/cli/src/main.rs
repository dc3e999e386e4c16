//! `orbitauth`: propagate passes, export reference maps and run the
//! challenge-response Monte Carlo experiments from the command line.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 1 on runtime errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orbitauth::experiment::{
    load_config, propagation_csv, run_scenario, run_scenario_preset, PresetName, RunManifest,
    RunRequest,
};
use orbitauth::Error;

#[derive(Debug, Parser)]
#[command(
    name = "orbitauth",
    version,
    about = "LEO satellite trajectory authentication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the legitimate orbit over its visibility window and print
    /// ECI state plus station geometry as CSV.
    Propagate {
        #[arg(long)]
        config: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the channel characteristic map and export it as JSON.
    Ccm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the DEP sweep for a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Run one of the built-in case-study scenarios.
    Preset {
        /// scenario-1, scenario-2 or scenario-3
        name: String,
        /// Spoofer altitude in km.
        #[arg(long, default_value_t = 1200.0)]
        trudy_altitude_km: f64,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Comma-separated challenge sizes.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
    n: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

fn write_output(path: &Path, contents: &str) -> orbitauth::Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn configure_threads(threads: Option<usize>) {
    if let Some(threads) = threads {
        // a second initialisation only happens in-process (tests); keep the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn report(manifest: &RunManifest) {
    for (n, dep) in manifest.n_values.iter().zip(&manifest.min_dep) {
        println!("N = {n:>4}  min DEP = {dep:.4}");
    }
    for path in &manifest.outputs {
        println!("wrote {}", path.display());
    }
}

fn run(cli: Cli) -> orbitauth::Result<()> {
    match cli.command {
        Command::Propagate { config, out } => {
            let csv = propagation_csv(&load_config(&config)?)?;
            match out {
                Some(path) => write_output(&path, &csv)?,
                None => {
                    let mut stdout = io::stdout().lock();
                    match stdout.write_all(csv.as_bytes()) {
                        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                        other => other.map_err(|source| Error::Io {
                            path: PathBuf::from("<stdout>"),
                            source,
                        })?,
                    }
                }
            }
        }
        Command::Ccm { config, out } => {
            let scenario = load_config(&config)?;
            scenario.materialize()?.ccm.write_json(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Run { config, sweep } => {
            configure_threads(sweep.threads);
            let scenario = load_config(&config)?;
            let manifest = run_scenario(
                &scenario,
                &RunRequest {
                    n_values: &sweep.n,
                    trials: sweep.trials,
                    seed: sweep.seed,
                    out_dir: &sweep.out,
                    preset: None,
                },
            )?;
            report(&manifest);
        }
        Command::Preset {
            name,
            trudy_altitude_km,
            sweep,
        } => {
            configure_threads(sweep.threads);
            let preset: PresetName = name.parse()?;
            let manifest = run_scenario_preset(
                preset,
                trudy_altitude_km * 1e3,
                &sweep.n,
                sweep.trials,
                sweep.seed,
                &sweep.out,
            )?;
            report(&manifest);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

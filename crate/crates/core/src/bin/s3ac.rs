use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use s3ac::experiments::{self as ex, ExperimentConfig};
use s3ac::Error;

#[derive(Parser)]
#[command(
    name = "s3ac",
    version,
    about = "Allen-Cahn flows on the 3-sphere from the Clifford torus"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the torus-symmetric and ground-state profiles.
    Stationary,
    /// Morse indices and the unstable basis.
    Spectrum,
    /// One flow from the torus solution in the configured direction.
    Flow,
    /// Bisect for the threshold between the two constant limits.
    Sweep,
    /// Forward limits over a grid of the orbit of directions.
    Orbit,
    /// The finite-dimensional example.
    Toy,
    /// Classify a stored snapshot.
    Inspect { snapshot: PathBuf },
}

fn print(v: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializes"));
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            e => e,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.output_dir = o;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match cli.cmd {
        Cmd::Stationary => print(&ex::cmd_stationary(&cfg)?),
        Cmd::Spectrum => print(&ex::cmd_spectrum(&cfg)?),
        Cmd::Flow => {
            for r in ex::cmd_flow(&cfg)? {
                let t = r.terminal();
                println!(
                    "eps {}: {:?} after t = {:.3}, kinds {:?}, terminal area {:.5}, y {:?}, crossings {}",
                    r.eps,
                    r.log.stop,
                    r.final_state.time,
                    r.kind_sequence(),
                    t.area_proxy,
                    t.equator_normal,
                    r.crossings
                );
            }
        }
        Cmd::Sweep => {
            for r in ex::cmd_sweep(&cfg)? {
                println!(
                    "eps {}: threshold s = {:.9} (width {:.2e}), monotone {}, center plateau {:.3} (need {:.3})",
                    r.eps, r.threshold, r.width, r.monotone, r.center.longest_plateau, r.plateau_required
                );
            }
        }
        Cmd::Orbit => {
            for r in ex::cmd_orbit(&cfg)? {
                println!(
                    "eps {}: {} runs, all sphere {}, rho {:.3e}, tau {:.3e}, odd {:.3e}",
                    r.eps,
                    r.records.len(),
                    r.all_sphere,
                    r.rho_deviation,
                    r.tau_deviation,
                    r.odd_deviation
                );
            }
        }
        Cmd::Toy => print(&ex::cmd_toy(&cfg)?),
        Cmd::Inspect { snapshot } => print(&ex::inspect(&snapshot, &cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use cfmimo_cli::{cmd_fit, cmd_oracle, cmd_run, cmd_synth_dataset, exit, CliConfig, CliError, Profile, SynthOptions, WORKERS_ENV};
use clap::{Parser, Subcommand};

/// Cell-free massive MIMO uplink power-control simulator.
#[derive(Debug, Parser)]
#[command(name = "cfmimo", version)]
struct Cli {
    /// TOML configuration; overlays the profile when both are given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in base configuration.
    #[arg(long, value_enum, global = true)]
    profile: Option<Profile>,
    /// Overrides the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte-Carlo drops (default: all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a campaign and write results, summary and CDF files.
    Run {
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the solvers with an exhaustive grid search on small instances.
    Oracle,
    /// Fit a path-loss law to a measured dataset.
    Fit {
        dataset: PathBuf,
        /// Reference distance in metres (default: shortest link).
        #[arg(long)]
        reference_distance: Option<f64>,
    },
    /// Write a dataset drawn from the configured channel model.
    SynthDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        aps: usize,
        #[arg(long, default_value_t = 16)]
        ues: usize,
        #[arg(long, default_value_t = 1)]
        freqs: usize,
        /// Rayleigh fading per frequency instead of constant magnitude.
        #[arg(long)]
        rayleigh: bool,
    },
    /// Print the effective configuration as TOML.
    DefaultConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = CliConfig::load(cli.profile, cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::Run { out } => {
            let workers = cli
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let report = cmd_run(&cfg, &out, workers)?;
            for f in &report.failures {
                eprintln!("warning: drop {} failed: {}", f.drop_id, f.message);
            }
            eprintln!("{} rows, {} files written to {}", report.rows, report.files.len(), out.display());
        }
        Command::Oracle => {
            let report = cmd_oracle(&cfg)?;
            print!("{}", report.render());
            if !report.passed() {
                let failed = report
                    .rows
                    .iter()
                    .filter(|r| !(report.se_pass(r) && report.ee_pass(r)))
                    .count();
                return Err(CliError::OracleFailed {
                    failed,
                    total: report.rows.len(),
                });
            }
        }
        Command::Fit {
            dataset,
            reference_distance,
        } => {
            let fit = cmd_fit(&dataset, reference_distance)?;
            let m = fit.model;
            println!("# fitted on {} links", fit.links_used);
            println!("intercept = {}", m.intercept);
            println!("slope = {}", m.slope);
            println!("reference_distance = {}", m.reference_distance);
            println!("shadow_sigma = {}", m.shadow_sigma);
        }
        Command::SynthDataset {
            out,
            aps,
            ues,
            freqs,
            rayleigh,
        } => {
            let opts = SynthOptions {
                num_aps: aps,
                num_ues: ues,
                num_freqs: freqs,
                rayleigh,
                seed: cfg.seed,
            };
            cmd_synth_dataset(&cfg, &opts, &out)?;
        }
        Command::DefaultConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmshm::MethodKind;
use dmshm_cli::{cmd_run, cmd_simulate, CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "dmshm", version, about = "Continual learning for streaming regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method and seed of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run only this method (dmshm, dmshm_no_dms, dmshm_no_hint, finetune).
        #[arg(long)]
        method: Option<MethodKind>,
        /// Output directory, replacing `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of runs executed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write a synthetic preset stream as CSV.
    Simulate {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            method,
            out,
            jobs,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(&Overrides { seed, method, out });
            let reports = cmd_run(&cfg, jobs)?;
            for r in &reports {
                println!("{}\tseed {}\tFE {:.6}\tPE {:.6}", r.method.kind, r.seed, r.fe, r.pe);
            }
            println!("wrote {}", cfg.out_dir.join("summary.csv").display());
        }
        Command::Simulate { preset, seed, out } => {
            let cfg = cmd_simulate(&preset, seed, &out)?;
            println!(
                "wrote {} ({} periods of {} samples; target column y0)",
                out.display(),
                cfg.periods,
                cfg.samples_per_period
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use revsim_harness::experiments::{ErasureSweep, Fig3, Fig4, Oracle, TrmRefocus};
use revsim_harness::output::{self, Meta};
use revsim_harness::{Experiment, ExperimentKind, HarnessError, Result};

#[derive(Parser)]
#[command(name = "revsim", version, about = "Seeded reversible-computing experiment sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum rate against user count.
    Fig3(RunArgs),
    /// Robustness to CSI noise and subcarrier subsampling.
    Fig4(RunArgs),
    /// RPN, greedy and random against the exhaustive optimum.
    Oracle(RunArgs),
    /// Time-reversal mirror refocusing on the lattice gas.
    Trm(RunArgs),
    /// Erased-bit counts and lattice backscatter retention.
    Erasure(RunArgs),
    /// Regenerate rows of a finished run and compare them byte for byte.
    Verify {
        #[arg(long)]
        out: PathBuf,
        /// 0-based data row; all rows when omitted.
        #[arg(long)]
        row: Option<usize>,
    },
    /// Print an experiment's default config as JSON.
    DefaultConfig {
        #[arg(value_enum)]
        experiment: ExperimentKind,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; must not already hold results.
    #[arg(long)]
    out: PathBuf,
}

fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn run<E: Experiment>(args: &RunArgs) -> Result<Meta> {
    let config: E::Config = load(args.config.as_deref())?;
    output::run_to_dir::<E>(&config, args.seed, &args.out)
}

fn print_default<C: Serialize + Default>() -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&C::default())?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let meta = match &cli.command {
        Command::Fig3(a) => run::<Fig3>(a)?,
        Command::Fig4(a) => run::<Fig4>(a)?,
        Command::Oracle(a) => run::<Oracle>(a)?,
        Command::Trm(a) => run::<TrmRefocus>(a)?,
        Command::Erasure(a) => run::<ErasureSweep>(a)?,
        Command::Verify { out, row } => {
            let n = output::verify(out, *row)?;
            println!("{n} row(s) regenerate bit-identically");
            return Ok(());
        }
        Command::DefaultConfig { experiment } => {
            return match experiment {
                ExperimentKind::Fig3 => print_default::<<Fig3 as Experiment>::Config>(),
                ExperimentKind::Fig4 => print_default::<<Fig4 as Experiment>::Config>(),
                ExperimentKind::Oracle => print_default::<<Oracle as Experiment>::Config>(),
                ExperimentKind::Trm => print_default::<<TrmRefocus as Experiment>::Config>(),
                ExperimentKind::Erasure => print_default::<<ErasureSweep as Experiment>::Config>(),
            };
        }
    };
    println!("{}: {} rows, config {}", meta.experiment, meta.rows, &meta.config_hash[..12]);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("revsim: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Batch runner: each subcommand reads an experiment config, runs it and
//! writes CSV/JSON tables into the output directory.
//!
//! Exit codes: 0 success, 1 i/o error, 2 config error, 3 numeric failure.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;
use experiments::Ctx;

#[derive(Parser)]
#[command(name = "histsim", version, about = "History-state experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the config.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Clock purity, echo averages and majorization on dense history states.
    History(Common),
    /// Parallel, sequential and direct two-time correlator estimates.
    EstimateF(Common),
    /// Parallel, sequential and direct Loschmidt averages.
    Loschmidt(Common),
    /// System-time entanglement against its echo and fluctuation bounds.
    Entanglement(Common),
    /// Free-fermion sweep over field strength, clock size and step.
    FfSweep(Common),
    /// Variational diagonalization of the Aubry-Andre chain.
    VhdTrain(Common),
    /// Gate-count tables for sequential, clock and diagonalized circuits.
    DepthReport(Common),
    /// Shot scaling of the sampled estimators.
    ProtocolBench(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::History(c) => ("history", c),
            Command::EstimateF(c) => ("estimate-f", c),
            Command::Loschmidt(c) => ("loschmidt", c),
            Command::Entanglement(c) => ("entanglement", c),
            Command::FfSweep(c) => ("ff-sweep", c),
            Command::VhdTrain(c) => ("vhd-train", c),
            Command::DepthReport(c) => ("depth-report", c),
            Command::ProtocolBench(c) => ("protocol-bench", c),
        }
    }
}

fn run(cmd: &Command) -> Result<Vec<PathBuf>, CliError> {
    let (name, common) = cmd.parts();
    let cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::empty(),
    };
    cfg.check_kind(name)?;
    if let Some(cap) = cfg.dense_cap {
        histsim::qcore::set_dense_cap(cap);
    }
    if let Some(k) = common.threads.or(cfg.threads) {
        if k == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    std::fs::create_dir_all(&common.out)?;
    let ctx = Ctx { out: common.out.clone(), seed: common.seed.or(cfg.seed).unwrap_or(0) };
    match cmd {
        Command::History(_) => experiments::run_history(&cfg, &ctx),
        Command::EstimateF(_) => experiments::run_estimate_f(&cfg, &ctx),
        Command::Loschmidt(_) => experiments::run_loschmidt(&cfg, &ctx),
        Command::Entanglement(_) => experiments::run_entanglement(&cfg, &ctx),
        Command::FfSweep(_) => experiments::run_ff_sweep(&cfg, &ctx),
        Command::VhdTrain(_) => experiments::run_vhd(&cfg, &ctx),
        Command::DepthReport(_) => experiments::run_depth(&cfg, &ctx),
        Command::ProtocolBench(_) => experiments::run_protocol_bench(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("histsim: {e}");
            e.exit_code()
        }
    }
}

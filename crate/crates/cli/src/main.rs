//! `infoflow`: all-pairs Granger information-flow analysis from the command line.

mod config;
mod pipeline;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{CommonArgs, RunConfig, SourceArgs};
use pipeline::LoadedData;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "infoflow", version, about = "Lead-lag information flow between asset return series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze a price file.
    Analyze {
        /// Wide price table: `date,<ticker>,...`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic panel from a spec and analyze it.
    Synth {
        /// Synthetic spec (TOML).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Analyze the original ordering and a shuffled surrogate side by side.
    ShuffleTest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn run_one(command: &str, cfg: &RunConfig, data: &LoadedData, shuffle: bool, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let panel = pipeline::prepare(&data.panel, shuffle, cfg.master_seed);
    let analysis = pipeline::analyze(&panel, cfg)?;
    let manifest = report::Manifest::new(command, cfg, data, shuffle);
    let files = report::render(&manifest, &analysis, data)?;
    report::write_all(dir, &files)
}

fn execute(command: &str, cfg: &RunConfig, shuffle_test: bool) -> Result<(), CliError> {
    let data = pipeline::load(&cfg.source)?;
    for d in &data.dropped {
        eprintln!("warning: dropped ticker {} (missing or non-positive price on {})", d.ticker, d.first_bad_date);
    }
    if !shuffle_test {
        run_one(command, cfg, &data, cfg.shuffle, &cfg.out)?;
        return Ok(());
    }
    let written = run_one(command, cfg, &data, false, &cfg.out.join("original"))?;
    if let Err(e) = run_one(command, cfg, &data, true, &cfg.out.join("shuffled")) {
        report::remove_all(&written);
        return Err(e);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common, source, shuffle_test) = match cli.command {
        Command::Analyze { input, common } => {
            ("analyze", common, SourceArgs { input, ..Default::default() }, false)
        }
        Command::Synth { spec, common } => {
            ("synth", common, SourceArgs { spec, want_synth: true, ..Default::default() }, false)
        }
        Command::ShuffleTest { input, spec, common } => {
            ("shuffle-test", common, SourceArgs { input, spec, want_synth: false }, true)
        }
    };
    let cfg = config::resolve(&common, &source)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(name, &cfg, shuffle_test))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("infoflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

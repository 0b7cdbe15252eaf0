//! Command-line front end for output embedding learning.

pub mod bench;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use oel::{ErrorKind, OelError};

use crate::commands::Run;
use crate::config::Config;

#[derive(Parser, Debug)]
#[command(
    name = "oel",
    version,
    about = "Structured prediction with learned output embeddings"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Root seed for all random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Fit or tune the plain regressor only, without an embedding.
    #[arg(long, global = true)]
    pub iokr_only: bool,
    /// Reuse one regressor fit across grid points that share it.
    #[arg(long, global = true)]
    pub share_krr: bool,
    /// Override a configuration key (`key=value`, repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Do not print summaries to standard output (artifacts are still written).
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Fit a model and write a bundle.
    Fit,
    /// Rank candidates for test inputs with a saved bundle.
    Predict,
    /// Score a rankings file against test outputs.
    Evaluate,
    /// Hyperparameter search.
    Tune,
    /// Time decoding with and without the embedding.
    BenchDecode,
    /// Generate a synthetic dataset and its config.
    Synth,
    /// List the recognized configuration keys.
    Keys,
}

/// Exit status for an error.
pub fn exit_code(e: &OelError) -> i32 {
    match e.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn execute(cli: Cli) -> oel::Result<()> {
    if let Command::Keys = cli.command {
        let width = config::KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, doc) in config::KEYS {
            println!("{k:width$}  {doc}");
        }
        return Ok(());
    }
    let mut cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.set_override(o)?;
    }
    if let Some(s) = cli.seed {
        cfg.set_override(&format!("seed={s}"))?;
    }
    if let Some(t) = cli.threads {
        cfg.set_override(&format!("threads={t}"))?;
    }
    let threads = cfg.usize_or("threads", 0)?;
    if threads > 0 {
        // Fails only if the pool is already built, e.g. by an earlier call in-process.
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::debug!("thread pool not reconfigured: {e}");
        }
    }
    let mut run = Run::new(cfg, cli.out.clone())?;
    run.quiet = cli.quiet;
    match cli.command {
        Command::Fit => run.fit(cli.iokr_only),
        Command::Predict => run.predict(),
        Command::Evaluate => run.evaluate(),
        Command::Tune => run.tune(cli.iokr_only, cli.share_krr),
        Command::BenchDecode => run.bench(),
        Command::Synth => run.synth(),
        Command::Keys => Ok(()),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            log::debug!("{e:?}");
            exit_code(&e)
        }
    }
}

//! The `sysvar` command line.
//!
//! Exit codes: 0 success, 1 file system error, 2 invalid input, 3 empty risk
//! set (the artifact is still written), 4 solver capacity or internal solver
//! failure.

pub mod commands;
pub mod formats;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;
use tracing::{info, Level};

use commands::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sysvar_core::Error),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use sysvar_core::Error as E;
        match self {
            CliError::Core(E::Validation(_) | E::Domain(_)) | CliError::Input(_) => 2,
            CliError::Core(E::Capacity(_) | E::Solver { .. }) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

/// Capital risk sets for Eisenberg-Noe networks.
#[derive(Debug, Parser, Serialize)]
#[command(name = "sysvar", author, version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads; SYSVAR_THREADS takes precedence when set
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    /// Where to write the run manifest; defaults to manifest.json next to
    /// the first artifact
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a core-periphery liability network
    GenNetwork(GenNetworkArgs),
    /// Draw correlated heavy-tailed cash-flow scenarios
    SampleShocks(SampleShocksArgs),
    /// Compute clearing vectors
    Clear(ClearArgs),
    /// List every clearing vector by default pattern
    Enumerate(EnumerateArgs),
    /// Solve a weighted-sum or distance scalarization
    Scalarize(ScalarizeArgs),
    /// Approximate the sample-average risk set on a grid
    Saa(SaaArgs),
    /// Hausdorff distance to a reference sample over growing sample sizes
    Converge(ConvergeArgs),
    /// Network statistics
    Stats(StatsArgs),
    /// Staircase boundary of a two-group set for plotting
    Plotdata(PlotdataArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenNetwork(_) => "gen-network",
            Command::SampleShocks(_) => "sample-shocks",
            Command::Clear(_) => "clear",
            Command::Enumerate(_) => "enumerate",
            Command::Scalarize(_) => "scalarize",
            Command::Saa(_) => "saa",
            Command::Converge(_) => "converge",
            Command::Stats(_) => "stats",
            Command::Plotdata(_) => "plotdata",
        }
    }

    fn execute(&self) -> Result<Outcome, CliError> {
        match self {
            Command::GenNetwork(a) => gen_network(a),
            Command::SampleShocks(a) => sample(a),
            Command::Clear(a) => clear(a),
            Command::Enumerate(a) => enumerate(a),
            Command::Scalarize(a) => scalarize(a),
            Command::Saa(a) => saa(a),
            Command::Converge(a) => converge(a),
            Command::Stats(a) => stats(a),
            Command::Plotdata(a) => plotdata(a),
        }
    }
}

fn thread_count(flag: Option<u16>) -> Result<Option<usize>, CliError> {
    match std::env::var("SYSVAR_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(CliError::Input(format!("SYSVAR_THREADS must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(flag.map(usize::from)),
    }
}

fn init_logging(level: &str) -> Result<(), CliError> {
    let level: Level = level.parse().map_err(|_| CliError::Input(format!("unknown log level {level:?}")))?;
    // a second run in the same process keeps the first subscriber
    let _ = tracing_subscriber::fmt().json().with_writer(std::io::stderr).with_max_level(level).try_init();
    Ok(())
}

fn manifest_path(cli: &Cli, outcome: &Outcome) -> Option<PathBuf> {
    if let Some(p) = &cli.manifest {
        return Some(p.clone());
    }
    let first = &outcome.files.first()?.0;
    let dir = first.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Some(dir.join("manifest.json"))
}

fn execute(cli: &Cli, started: Instant) -> Result<i32, CliError> {
    init_logging(&cli.log_level)?;
    let threads = thread_count(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Input(format!("cannot start {threads:?} worker threads: {e}")))?;
    info!(event = "start", subcommand = cli.command.name(), threads = pool.current_num_threads());
    let outcome = pool.install(|| cli.command.execute())?;

    let mut records = Vec::new();
    for (path, bytes) in &outcome.files {
        output::write_atomic(path, bytes)?;
        records.push(output::ArtifactRecord { path: path.clone(), sha256: output::sha256_hex(bytes) });
    }
    let code = match &outcome.infeasible {
        Some(msg) => {
            eprintln!("sysvar: {msg}");
            3
        }
        None => 0,
    };
    if let Some(path) = manifest_path(cli, &outcome) {
        let hash = output::sha256_hex(&formats::to_json(&cli.command));
        let wall = started.elapsed().as_secs_f64();
        output::write_atomic(&path, &output::manifest_bytes(cli, hash, wall, code, records))?;
    }
    info!(event = "finish", subcommand = cli.command.name(), exit_code = code, seconds = started.elapsed().as_secs_f64());
    Ok(code)
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let started = Instant::now();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&cli, started) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sysvar: {e}");
            e.exit_code()
        }
    }
}

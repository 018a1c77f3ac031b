mod args;
mod commands;
mod io;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, RunRecord};

const DEFAULT_OUT: &str = "cmax_out";

/// Bad flags or inputs caught after parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn execute(command: Command, threads: Option<usize>, out: PathBuf) -> Result<()> {
    if threads == Some(0) {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    pool.install(|| {
        let (command, out) = match command {
            Command::Run(r) => {
                let text = std::fs::read_to_string(&r.config).with_context(|| format!("reading {}", r.config.display()))?;
                let rec: RunRecord = serde_json::from_str(&text)
                    .map_err(|e| UsageError(format!("{} is not a run record: {e}", r.config.display())))?;
                return execute(rec.command, threads.or(rec.threads), out_override(&out).unwrap_or(rec.out));
            }
            c => (c, out),
        };
        let command = commands::dispatch(command, &out)?;
        io::write_json(
            &out.join("run.json"),
            &RunRecord {
                version: env!("CARGO_PKG_VERSION").into(),
                threads,
                out: std::path::absolute(&out)?,
                command,
            },
        )
    })
}

/// `run` only moves the outputs when `--out` or the env var says so.
fn out_override(out: &PathBuf) -> Option<PathBuf> {
    (out.as_os_str() != DEFAULT_OUT).then(|| out.clone())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let out = cli.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match execute(cli.command, cli.threads, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! `dccast-sim`: experiment runner for forwarding-tree transfer scheduling.

mod config;
mod runner;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Settings};

#[derive(Debug, Parser)]
#[command(name = "dccast-sim", version, about = "Simulate P2MP transfer scheduling on a slotted timeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (scheme, copies, seed) cell and write one CSV row per cell.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Scheme or comma-separated schemes.
        #[arg(long)]
        scheme: Option<String>,
        /// Destination counts, e.g. `6` or `1..6`.
        #[arg(long)]
        copies: Option<String>,
        /// Seeds, e.g. `1,2,3` or `1..5`.
        #[arg(long)]
        seeds: Option<String>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the traffic of one cell as CSV (first value of copies and seeds).
    Workload {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        copies: Option<String>,
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Run the built-in invariant and oracle checks.
    Verify,
}

enum Failure {
    Config(String),
    Invariant(String),
}

fn settings(config: Option<&PathBuf>, overrides: &[(&str, &Option<String>)]) -> Result<Settings, ConfigError> {
    let mut s = match config {
        Some(path) => Settings::read(path)?,
        None => Settings::default(),
    };
    for (key, value) in overrides {
        if let Some(v) = value {
            s.set(key, v.clone());
        }
    }
    Ok(s)
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Config(format!("out: {}: {e}", p.display()))),
        None => io::stdout().write_all(bytes).map_err(|e| Failure::Config(format!("stdout: {e}"))),
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    let config_err = |e: ConfigError| Failure::Config(e.to_string());
    match command {
        Command::Run { config, scheme, copies, seeds, out } => {
            let s = settings(Some(&config), &[("scheme", &scheme), ("copies", &copies), ("seeds", &seeds)])
                .map_err(config_err)?;
            let mut cfg = s.resolve().map_err(config_err)?;
            if out.is_some() {
                cfg.out = out;
            }
            let rows = runner::run(&cfg).map_err(|e| match e.exit_code() {
                1 => Failure::Config(e.to_string()),
                _ => Failure::Invariant(e.to_string()),
            })?;
            let mut buf = Vec::new();
            dccast::metrics::write_csv(&rows, &mut buf).map_err(|e| Failure::Config(format!("out: {e}")))?;
            write_output(cfg.out.as_ref(), &buf)
        }
        Command::Workload { config, dump, copies, seeds } => {
            let mut s = settings(config.as_ref(), &[("copies", &copies), ("seeds", &seeds)]).map_err(config_err)?;
            if s.get("scheme").is_none() {
                s.set("scheme", "DCCAST");
            }
            let cfg = s.resolve().map_err(config_err)?;
            let requests = runner::cell_traffic(&cfg, cfg.copies[0], cfg.seeds[0]).map_err(config_err)?;
            let mut buf = Vec::new();
            dccast::workload::write_csv(&requests, &mut buf).map_err(|e| Failure::Config(format!("dump: {e}")))?;
            write_output(Some(&dump), &buf)
        }
        Command::Verify => {
            let checks = verify::run_all();
            let mut failed = 0;
            for c in &checks {
                match &c.failure {
                    None => println!("ok    {}", c.name),
                    Some(why) => {
                        failed += 1;
                        println!("FAIL  {}: {why}", c.name);
                    }
                }
            }
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Err(Failure::Invariant(format!("{failed} checks failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("invariant violation: {m}");
            ExitCode::from(2)
        }
    }
}

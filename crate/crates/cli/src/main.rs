//! `esdr`: command-line front end for the ESDR Floquet simulator.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{config_err, CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "esdr", version, about = "Floquet simulation of electron-spin double resonance in NV centers")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Floquet truncation order; overrides `[sweep] n_max`.
    #[arg(long, global = true)]
    n_max: Option<usize>,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Leave-probability spectrum over the MW and sweep axes.
    Spectrum,
    /// Resonance positions and anticrossing gaps.
    Resonances,
    /// Time-domain propagator against Floquet on the standard panel.
    Verify,
    /// Truncation convergence at the configured operating point.
    Converge,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::FileNotFound(path.clone()));
            }
            RunConfig::parse(&std::fs::read_to_string(path)?)?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = cli.n_max {
        if n == 0 {
            return Err(config_err("--n-max must be >= 1"));
        }
        cfg.n_max = n;
        if matches!(cli.command, Command::Converge) {
            cfg.converge.n_list.retain(|&k| k < n);
            cfg.converge.n_list.push(n);
        }
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| config_err(format!("--threads: {e}")))?;
    let outputs = pool.install(|| match cli.command {
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Resonances => commands::resonances(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Converge => commands::converge(&cfg),
    })?;
    let written = outputs.write_to(&cfg.out_dir)?;
    for line in &outputs.summary {
        println!("{line}");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

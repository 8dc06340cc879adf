use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, ValueEnum};

use hr_cli::{execute, Command};
use hr_core::config::parse_config_with_overrides;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Integrate and write monitor, probe and snapshot files
    Simulate,
    /// Evaluate the dissipativity constants
    Constants,
    /// Integrate and check the envelope and absorbing-ball bounds
    Verify,
    /// Homogeneous equilibria and their linear stability
    Steady,
    /// Observed convergence orders on the built-in test problems
    Convergence,
    /// Simulate every cell of the [sweep] grid
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Constants => Command::Constants,
            Cmd::Verify => Command::Verify,
            Cmd::Steady => Command::Steady,
            Cmd::Convergence => Command::Convergence,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

/// Diffusive Hindmarsh-Rose solver and bound checker.
///
/// Exit status: 0 when every check passed, 1 when a check failed, 2 on
/// errors.
#[derive(Debug, Parser)]
#[command(name = "hr", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,

    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides [output] dir)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for random initial data (overrides [run] seed)
    #[arg(long)]
    seed: Option<u64>,

    /// `section.key=value`, applied before validation; repeatable
    #[arg(long = "override", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("{} reported failed checks", Command::from(cli.command).label());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> Result<bool> {
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut overrides = Vec::new();
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{o}` is not section.key=value"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = cli.seed {
        overrides.push(("run.seed".into(), seed.to_string()));
    }
    if let Some(out) = &cli.out {
        overrides.push(("output.dir".into(), out.display().to_string()));
    }
    let spec = parse_config_with_overrides(&text, &overrides)
        .with_context(|| format!("in {}", cli.config.display()))?;
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    execute(cli.command.into(), &spec, &base)
}

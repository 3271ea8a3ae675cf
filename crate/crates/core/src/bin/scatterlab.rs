use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use scatterlab::cli::{run, Command, RunConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Catalog,
    Scatter,
    Resonance,
    Kernels,
    Wiener,
    Decay,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Catalog => Command::Catalog,
            Cmd::Scatter => Command::Scatter,
            Cmd::Resonance => Command::Resonance,
            Cmd::Kernels => Command::Kernels,
            Cmd::Wiener => Command::Wiener,
            Cmd::Decay => Command::Decay,
        }
    }
}

/// Scattering data, zero-energy resonances and dispersive decay for
/// one-dimensional Schrödinger operators.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    command: Cmd,
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parent directory for the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `dotted.key=value`, applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = Command::from(args.command);
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p),
        None if command == Command::Catalog => Ok(RunConfig::default()),
        None => {
            eprintln!("error: `{}` needs --config", command.name());
            return ExitCode::from(2);
        }
    }
    .and_then(|c| c.with_overrides(&args.overrides));
    let outcome = cfg.and_then(|c| run(command, &c, args.out.as_deref()));
    match outcome {
        Ok(o) => {
            print!("{}", o.listing);
            if o.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

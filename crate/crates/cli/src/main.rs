use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levywave::commands::{self, Command};
use levywave::config::RunConfig;
use levywave::Error;

#[derive(Parser, Debug)]
#[command(
    name = "levywave",
    version,
    about = "Damped stochastic wave equation with Levy noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (TOML).
    #[arg(short, long, global = true, default_value = "levywave.toml")]
    config: PathBuf,

    /// Overrides `noise.seed`.
    #[arg(long, global = true, env = "LEVYWAVE_SEED")]
    seed: Option<u64>,

    /// Overrides `output.directory`.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Simulate one path and write the trajectory.
    Simulate,
    /// Report the stability parameters and their feasibility.
    Stability,
    /// Ensemble energy decay against the exponential envelope.
    Decay,
    /// Shared-noise coupling of two initial states.
    Couple,
    /// Long-run moments from two initial states.
    Moments,
    /// Picard iteration on the small-jump system.
    Picard,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Stability => Command::Stability,
            Cmd::Decay => Command::Decay,
            Cmd::Couple => Command::Couple,
            Cmd::Moments => Command::Moments,
            Cmd::Picard => Command::Picard,
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;
const EXIT_IO: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BlowUp { .. } | Error::EnsembleBlowUp { .. } => EXIT_BLOWUP,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("LEVYWAVE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("LEVYWAVE_THREADS: expected a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("LEVYWAVE_THREADS: must be at least 1".into());
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("LEVYWAVE_THREADS: {e}"))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<String, Error> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", cli.config.display()))))?;
    let mut config = RunConfig::from_toml_str(&text)?;
    if let Some(seed) = cli.seed {
        config.noise.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.directory = out.clone();
    }
    let output = commands::run(cli.command.into(), &config)?;
    for f in &output.files {
        log::info!("wrote {}", f.display());
    }
    Ok(output.summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

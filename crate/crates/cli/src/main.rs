//! `homodyne`: simulate pulsed homodyne acquisitions, reconstruct states,
//! and characterize the detector.
//!
//! Every output file starts with a provenance header from which the run can
//! be replayed: `homodyne <command> --config <file>`.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{preset, Command, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "homodyne",
    version,
    about = "Pulsed balanced homodyne detection and state tomography"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Settings file of key = value lines, or any output file of an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// coherent-paper, vacuum or single-photon.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override any setting (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the command's settings with their defaults and exit.
    #[arg(long, global = true)]
    list_keys: bool,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Simulate a phase-scanned acquisition.
    Simulate(SimulateArgs),
    /// Reconstruct Wigner function and density matrix from an acquisition.
    Reconstruct(ReconstructArgs),
    /// Noise-versus-LO-power sweep, SNR and subtraction figures.
    Characterize(CharacterizeArgs),
    /// Welch spectrum of a detector trace.
    Spectrum(SpectrumArgs),
    /// Exact Wigner function of an analytic state.
    Wigner(WignerArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    pulses: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Acquisition CSV.
    input: Option<String>,
    /// estimate or scan.
    #[arg(long)]
    phases: Option<String>,
    /// none, fit, or re[,im].
    #[arg(long)]
    ref_alpha: Option<String>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    dim: Option<u64>,
}

#[derive(Args, Debug)]
struct CharacterizeArgs {
    /// Sweep CSV to fit instead of simulating one.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    snr_at: Option<f64>,
    #[arg(long)]
    subtraction_at: Option<f64>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Trace CSV to analyse instead of simulating one.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    lo_photons: Option<f64>,
}

#[derive(Args, Debug)]
struct WignerArgs {
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    fock_n: Option<u64>,
}

fn flags(sub: &Sub) -> (Command, Vec<(&'static str, String)>) {
    fn push<T: ToString>(v: &mut Vec<(&'static str, String)>, key: &'static str, value: &Option<T>) {
        if let Some(x) = value {
            v.push((key, x.to_string()));
        }
    }
    let mut v = Vec::new();
    let command = match sub {
        Sub::Simulate(a) => {
            push(&mut v, "state", &a.state);
            push(&mut v, "pulses", &a.pulses);
            push(&mut v, "alpha", &a.alpha);
            Command::Simulate
        }
        Sub::Reconstruct(a) => {
            push(&mut v, "input", &a.input);
            push(&mut v, "phases", &a.phases);
            push(&mut v, "ref_alpha", &a.ref_alpha);
            push(&mut v, "cutoff", &a.cutoff);
            push(&mut v, "dim", &a.dim);
            Command::Reconstruct
        }
        Sub::Characterize(a) => {
            push(&mut v, "input", &a.input);
            push(&mut v, "snr_at", &a.snr_at);
            push(&mut v, "subtraction_at", &a.subtraction_at);
            Command::Characterize
        }
        Sub::Spectrum(a) => {
            push(&mut v, "input", &a.input);
            push(&mut v, "lo_photons", &a.lo_photons);
            Command::Spectrum
        }
        Sub::Wigner(a) => {
            push(&mut v, "state", &a.state);
            push(&mut v, "alpha", &a.alpha);
            push(&mut v, "fock_n", &a.fock_n);
            Command::Wigner
        }
    };
    (command, v)
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let (command, named) = flags(&cli.command);
    let mut cfg = RunConfig::new(command);
    if let Some(name) = &cli.preset {
        for (k, v) in preset(name, command)? {
            cfg.set(k, v)?;
        }
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for pair in &cli.set {
        cfg.apply_pair(pair)?;
    }
    for (k, v) in named {
        cfg.set(k, &v)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())
            .map_err(|_| CliError::Config(format!("{} takes no seed", command.name())))?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if cli.list_keys {
        return Ok(RunConfig::describe(flags(&cli.command).0));
    }
    let cfg = resolve(cli)?;
    match cfg.command {
        Command::Simulate => commands::simulate(&cfg, &cli.out),
        Command::Reconstruct => commands::reconstruct(&cfg, &cli.out),
        Command::Characterize => commands::characterize(&cfg, &cli.out),
        Command::Spectrum => commands::spectrum(&cfg, &cli.out),
        Command::Wigner => commands::wigner(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("homodyne: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

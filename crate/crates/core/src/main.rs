use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dplane::config::RunConfig;
use dplane::run::{execute, Command};
use dplane::{Error, Result};

#[derive(Parser)]
#[command(name = "dplane", version, about = "d-plane transforms, beam-hardening artifacts and streak prediction")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Also write 16-bit PGM previews of every data file.
    #[arg(long, global = true)]
    quicklook: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Sinogram of the configured scene.
    Forward,
    /// Filtered back-projection of `input` or of the scene's sinogram.
    Fbp,
    /// Polychromatic measurement, metal term and its reconstruction.
    Beamharden,
    /// Common tangent flats and their intersection report for every pair.
    Atlas,
    /// Directional decay probes on `input` or on the artifact image.
    Probe,
    /// Conormal orders of squared and cross-multiplied sinograms.
    ProductCheck,
    /// The two-disk figure: four panels, atlas and streak contrasts.
    ReproduceFig1,
    /// Built-in invariant suite.
    Selfcheck,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Forward => Command::Forward,
            Sub::Fbp => Command::Fbp,
            Sub::Beamharden => Command::Beamharden,
            Sub::Atlas => Command::Atlas,
            Sub::Probe => Command::Probe,
            Sub::ProductCheck => Command::ProductCheck,
            Sub::ReproduceFig1 => Command::ReproduceFig1,
            Sub::Selfcheck => Command::Selfcheck,
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::config(e.to_string()))?;
    let command = Command::from(cli.command);
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if matches!(command, Command::ReproduceFig1 | Command::Selfcheck) => RunConfig::default(),
        None => return Err(Error::config(format!("{} needs --config", command.name()))),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(command.name()));
    let manifest = execute(command, &cfg, &out, cli.quicklook)?;
    log::info!("{} wrote {} files to {}", command.name(), manifest.files.len(), out.display());
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: checks failed, see the output directory");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

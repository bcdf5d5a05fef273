use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use homog::config::{ExperimentConfig, Preset};
use homog::pipeline::{ExitStatus, Pipeline, Stage};

#[derive(Parser)]
#[command(name = "homog", version, about = "Homogenization experiments for periodic stable-like jump processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed base (overrides `run.seed_base`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "HOMOG_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check kernel assumptions and drift centering.
    Validate(ConfigArg),
    /// Estimate the invariant measure of the cell process.
    Invariant(ConfigArg),
    /// Solve the corrector equation.
    Corrector(ConfigArg),
    /// Assemble the homogenized triplet.
    Homogenize(ConfigArg),
    /// Compare `X^ε` with the homogenized limit.
    Verify(ConfigArg),
    /// Run every stage, reusing artifacts.
    All(ConfigArg),
    /// Expand a preset and run every stage.
    Example {
        /// su18, sde_diffeo, variable_order or onedim.
        preset: String,
        /// Optional config supplying numerics and run settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

fn run(cli: Cli) -> homog::Result<ExitStatus> {
    let (stage, config) = match cli.command {
        Command::Validate(c) => (Stage::Validate, ExperimentConfig::load(&c.config)?),
        Command::Invariant(c) => (Stage::Invariant, ExperimentConfig::load(&c.config)?),
        Command::Corrector(c) => (Stage::Corrector, ExperimentConfig::load(&c.config)?),
        Command::Homogenize(c) => (Stage::Homogenize, ExperimentConfig::load(&c.config)?),
        Command::Verify(c) => (Stage::Verify, ExperimentConfig::load(&c.config)?),
        Command::All(c) => (Stage::All, ExperimentConfig::load(&c.config)?),
        Command::Example { preset, config } => {
            let preset = Preset::parse(&preset)?;
            let mut c = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::from_preset(preset),
            };
            c.preset = preset;
            c.model = None;
            (Stage::All, c.expand())
        }
    };
    let pipeline = Pipeline::new(config, &cli.out, cli.seed)?;
    pipeline.write_config()?;
    let start = std::time::Instant::now();
    let status = pipeline.run(stage)?;
    eprintln!(
        "homog {}: exit {} ({:.1} s, config_hash={}, seed_base={})",
        stage.name(),
        status.code(),
        start.elapsed().as_secs_f64(),
        pipeline.config_hash(),
        pipeline.seed_base()
    );
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("homog: cannot configure {k} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(s) => ExitCode::from(s.code() as u8),
        Err(e) => {
            eprintln!("homog: {e}");
            ExitCode::from(ExitStatus::from_error(&e).code() as u8)
        }
    }
}

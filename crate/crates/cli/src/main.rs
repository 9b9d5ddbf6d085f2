//! `nlglrt`: generate scenes, train the sample classifier and evaluate the
//! covariance-change detector from one TOML configuration.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlglrt::evaluation::Mode;

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "nlglrt", version, about = "Covariance-change detection with a DNN sample editor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the configured scene and write it as CSV plus a JSON sidecar.
    Generate(Common),
    /// Train the classifier on the dedicated training scene.
    Train(Common),
    /// Run the detector over the evaluation seeds and write the report.
    Evaluate(EvalArgs),
    /// Generate, train and evaluate in one go.
    All(EvalArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; omitted fields take setup (a) defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (defaults depend on the subcommand).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated modes, overriding the config.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Model file for the classifier modes.
    #[arg(long)]
    model: Option<PathBuf>,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(cfg: &mut RunConfig, args: &EvalArgs) -> Result<Vec<Mode>, CliError> {
    if let Some(modes) = &args.modes {
        cfg.evaluation.modes = modes.clone();
    }
    if let Some(seeds) = &args.seeds {
        cfg.evaluation.seeds = seeds.clone();
    }
    cfg.validate().map_err(CliError::config)?;
    cfg.modes().map_err(CliError::config)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("NLGLRT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("NLGLRT_THREADS must be a positive integer (got '{value}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Generate(common) => {
            let cfg = load(&common)?;
            let out = common.out.unwrap_or_else(|| cfg.output_dir.join("scene"));
            commands::generate(&cfg, &out)
        }
        Command::Train(common) => {
            let cfg = load(&common)?;
            let out = common.out.unwrap_or_else(|| cfg.output_dir.clone());
            commands::train(&cfg, &out).map(|_| ())
        }
        Command::Evaluate(args) => {
            let mut cfg = load(&args.common)?;
            let modes = apply_overrides(&mut cfg, &args)?;
            let model = args.model.clone().unwrap_or_else(|| cfg.output_dir.join(commands::MODEL_FILE));
            let out = args.common.out.clone().unwrap_or_else(|| cfg.output_dir.join("report"));
            commands::evaluate(&cfg, &modes, &model, &out)
        }
        Command::All(args) => {
            let mut cfg = load(&args.common)?;
            let modes = apply_overrides(&mut cfg, &args)?;
            let root = args.common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            commands::generate(&cfg, &root.join("scene"))?;
            let model = match &args.model {
                Some(path) => path.clone(),
                None if cfg.classifier.enabled => commands::train(&cfg, &root)?,
                None => root.join(commands::MODEL_FILE),
            };
            commands::evaluate(&cfg, &modes, &model, &root.join("report"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

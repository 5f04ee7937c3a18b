//! `gdclass`: batch front end for the genetic-disorder classification toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gdclass_core::runner::{self, RunConfig};
use gdclass_core::Error;

/// Overrides `output_dir` from the configuration file.
const OUTPUT_DIR_ENV: &str = "GDCLASS_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "gdclass", version, about = "Prepare, train, evaluate and report tabular classifiers")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Replaces the split seed and every model seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split, impute, engineer and rank features; write the prepared files.
    Prepare,
    /// Fit the configured algorithm and save a model artifact.
    Train,
    /// Score the artifact on the prepared test split or on `--input`.
    Evaluate {
        /// Raw or prepared CSV to evaluate instead of the prepared test split.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Merge evaluation records into comparison tables.
    Report {
        /// Evaluation JSON files; defaults to every file under `<output_dir>/evaluations`.
        files: Vec<PathBuf>,
        /// Destination folder; defaults to `<output_dir>/report`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <PATH> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        cfg.output_dir = PathBuf::from(dir);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Prepare => {
            let cfg = load_config(cli)?;
            let out = runner::prepare(&cfg)?;
            println!(
                "prepared {} train / {} test rows ({} dropped), {} features -> {}",
                out.train_rows,
                out.test_rows,
                out.dropped_rows,
                out.selected.len(),
                out.dir.display()
            );
        }
        Command::Train => {
            let cfg = load_config(cli)?;
            let artifact = runner::train(&cfg)?;
            println!(
                "trained {} on {} classes (training accuracy {:.4}) -> {}",
                artifact.algorithm,
                artifact.classes.len(),
                artifact.train_accuracy,
                cfg.artifact_path().display()
            );
        }
        Command::Evaluate { input } => {
            let cfg = load_config(cli)?;
            let report = runner::evaluate(&cfg, input.as_deref())?;
            println!(
                "{} / {}: accuracy {:.4} over {} rows -> {}",
                report.algorithm,
                report.task,
                report.accuracy,
                report.rows,
                cfg.evaluation_path().display()
            );
        }
        Command::Report { files, out } => {
            let cfg = if cli.config.is_some() { Some(load_config(cli)?) } else { None };
            let base = match (&cfg, std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty())) {
                (Some(cfg), _) => Some(cfg.output_dir.clone()),
                (None, Some(dir)) => Some(PathBuf::from(dir)),
                (None, None) => None,
            };
            let files = if files.is_empty() {
                let base = base.as_ref().ok_or_else(|| Error::Config("give evaluation files or --config".into()))?;
                runner::evaluation_files(base)?
            } else {
                files.clone()
            };
            let out_dir = match (out, &base) {
                (Some(dir), _) => dir.clone(),
                (None, Some(base)) => base.join("report"),
                (None, None) => return Err(Error::Config("give --out or --config".into())),
            };
            let written = runner::report(&files, &out_dir)?;
            println!("merged {} evaluation(s) into {} file(s) under {}", files.len(), written.len(), out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

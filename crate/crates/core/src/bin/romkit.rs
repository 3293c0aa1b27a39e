use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use romkit::pipeline::{self, PipelineConfig};
use romkit::{InterpolantKind, RomError};

#[derive(Parser)]
#[command(name = "romkit", about = "Snapshot ROM pipeline on chunked tall matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON pipeline configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    chunk_rows: Option<usize>,
    /// Right-singular-vector interpolant: linear or pchip
    #[arg(long, global = true)]
    interp: Option<InterpolantKind>,
    /// Number of candidate thresholds for calibration
    #[arg(long, global = true)]
    candidates: Option<usize>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate training and testing column files for a toy problem
    Toygen,
    /// Assemble training columns into a chunked snapshot matrix
    Assemble,
    /// Tall-and-skinny SVD of the snapshot matrix
    Decompose,
    /// Choose the variation threshold against the testing columns
    Calibrate,
    /// Evaluate the calibrated model at the prediction sites
    Predict,
    /// Compare predictions with truth and response-surface baselines
    Validate,
}

fn config_from(cli: &Cli) -> Result<PipelineConfig, RomError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(n) = cli.chunk_rows {
        config.chunk_rows = n;
    }
    if let Some(kind) = cli.interp {
        config.interp = kind;
    }
    if let Some(n) = cli.candidates {
        config.n_candidates = n;
    }
    if let Some(n) = cli.threads {
        config.threads = n;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), RomError> {
    let config = config_from(cli)?;
    match cli.command {
        Command::Toygen => {
            let files = pipeline::cmd_toygen(&config)?;
            println!("wrote {} column files", files.len());
        }
        Command::Assemble => {
            let manifest = pipeline::cmd_assemble(&config)?;
            println!("wrote {}", manifest.display());
        }
        Command::Decompose => {
            for path in pipeline::cmd_decompose(&config)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Calibrate => {
            let report = pipeline::cmd_calibrate(&config)?;
            println!("tau_bar = {}", report.chosen_tau_bar);
        }
        Command::Predict => {
            let files = pipeline::cmd_predict(&config)?;
            println!("wrote {} predictions", files.len());
        }
        Command::Validate => {
            let rows = pipeline::cmd_validate(&config)?;
            println!("validated {} rows", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code(), e);
            ExitCode::FAILURE
        }
    }
}

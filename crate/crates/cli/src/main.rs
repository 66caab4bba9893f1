//! `omnidet`: fisheye view synthesis, detection back-projection, fusion and
//! evaluation from the command line.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage or configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "omnidet",
    version,
    about = "Person detection post-processing for ceiling-mounted fisheye cameras"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Flags win over the config file, which
/// wins over built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Pipeline config file (key=value)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fisheye camera config file
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// View grid file (key=value); defaults to the 128-view sweep
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render every virtual view of the grid from a fisheye image
    Views(commands::ViewsArgs),
    /// Map per-view detection files into the fisheye frame and pool them
    Backproject(commands::BackprojectArgs),
    /// Fuse pooled detections with NMS or Soft-NMS, or run a parameter sweep
    Fuse(commands::FuseArgs),
    /// Evaluate detections against ground truth (one image or a manifest)
    Eval(commands::EvalArgs),
    /// Run views, detections, back-projection, fusion and evaluation end to end
    Pipeline(commands::PipelineArgs),
    /// Generate a synthetic dataset with ground truth and raw detections
    Synth(commands::SynthArgs),
    /// Convert detector JSON output to detection lines
    ConvertDetections(commands::ConvertArgs),
    /// Export or inspect lookup tables
    #[command(subcommand)]
    Lut(commands::LutCommand),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

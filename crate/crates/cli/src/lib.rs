//! Command-line front end and preview HTTP server.

pub mod commands;
pub mod server;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "voxaug", version, about = "Volumetric augmentation pipeline for breast MRI segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reorient, split and resample every image and mask of a manifest.
    Preprocess(PreprocessArgs),
    /// Build an augmented training set.
    Augment(AugmentArgs),
    /// Clean up a ground-truth mask.
    Curate(CurateArgs),
    /// Keep the breast component of a predicted mask.
    Postprocess(PostprocessArgs),
    /// Dice scores or inter-observer agreement as CSV.
    Evaluate(EvaluateArgs),
    /// STAPLE consensus of several masks.
    Consensus(ConsensusArgs),
    /// Friedman and Dunn tests on an evaluation CSV.
    Stats(StatsArgs),
    /// Serve the preview API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Uniform scale in (0, 1] applied before splitting.
    #[arg(long)]
    pub prescale: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON document with AugmentationConfig fields; defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the planned outputs without writing anything.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub prescale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip per-slice removal of disconnected regions.
    #[arg(long)]
    pub no_disconnected: bool,
    /// Skip the inferior fat cut.
    #[arg(long)]
    pub no_fat_cut: bool,
    /// Skip lateral boundary trimming.
    #[arg(long)]
    pub no_lateral_trim: bool,
    /// Concavity window of the fat cut (odd).
    #[arg(long, default_value_t = 3)]
    pub fat_window: usize,
    /// Inferior lies at high row indices.
    #[arg(long)]
    pub inferior_high: bool,
    /// Posterior lies at low column indices.
    #[arg(long)]
    pub posterior_low: bool,
    /// The chest side lies at high lateral slice indices.
    #[arg(long)]
    pub chest_high: bool,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Components must exceed this many pixels to be preferred.
    #[arg(long, default_value_t = 100)]
    pub min_area: usize,
    /// Treat high x indices as left.
    #[arg(long)]
    pub left_high: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct EvaluateInput {
    /// CSV with columns scan,method,prediction,truth.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// CSV with columns scan,observer,mask.
    #[arg(long)]
    pub observers: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: EvaluateInput,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConsensusArgs {
    /// Rater masks.
    #[arg(required = true, num_args = 2..)]
    pub masks: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the posterior probability volume.
    #[arg(long)]
    pub posterior: Option<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    pub init_pq: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Evaluation CSV with columns scan,method,dsc.
    #[arg(long)]
    pub scores: PathBuf,
    /// Pairwise significance table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Full report; printed to stdout when omitted.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub no_tie_correction: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    /// Directory that config exports are written into.
    #[arg(long)]
    pub workspace: PathBuf,
    /// Config whose style backend is used for style previews.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Runs one parsed command; the return value is the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Preprocess(a) => commands::preprocess(&a),
        Command::Augment(a) => commands::augment(&a),
        Command::Curate(a) => commands::curate(&a).map(|_| 0),
        Command::Postprocess(a) => commands::postprocess(&a).map(|_| 0),
        Command::Evaluate(a) => commands::evaluate(&a).map(|_| 0),
        Command::Consensus(a) => commands::consensus(&a).map(|_| 0),
        Command::Stats(a) => commands::stats(&a).map(|_| 0),
        Command::Serve(a) => server::serve(&a).map(|_| 0),
    }
}

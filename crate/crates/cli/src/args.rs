use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Rigid protein–protein docking.
///
/// Log verbosity is controlled by the RUST_LOG environment variable.
#[derive(Debug, Parser)]
#[command(name = "rigidock", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dock a ligand onto a receptor with a trained model.
    Dock(DockArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Evaluate a model (or the ground truth) on a dataset split.
    Eval(EvalArgs),
    /// Generate a synthetic docking dataset.
    GenSynthetic(GenArgs),
    /// Dump the residue graph and its features as JSON.
    Features(FeaturesArgs),
    /// Check the model's equivariance and role-swap guarantees numerically.
    CheckEquivariance(CheckArgs),
}

#[derive(Debug, Args)]
pub struct DockArgs {
    #[arg(long)]
    pub ligand: PathBuf,
    #[arg(long)]
    pub receptor: PathBuf,
    /// Model checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out_pdb: PathBuf,
    #[arg(long)]
    pub out_transform: PathBuf,
    /// Comma-separated chain identifiers of the ligand (default: all).
    #[arg(long, value_delimiter = ',')]
    pub chains_ligand: Option<Vec<char>>,
    #[arg(long, value_delimiter = ',')]
    pub chains_receptor: Option<Vec<char>>,
    /// Write every atom record of the ligand file, rigidly moved, instead
    /// of CA atoms only.
    #[arg(long)]
    pub copy_full_atoms: bool,
    /// Also write both keypoint sets as JSON.
    #[arg(long)]
    pub out_keypoints: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory with pairs/ and splits.json.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the checkpoint, loss history and resolved config.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with (a subset of) the training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base configuration: default, fine-tune or toy.
    #[arg(long, default_value = "default")]
    pub preset: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Model checkpoint; required unless --oracle is given.
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    pub model: Option<PathBuf>,
    /// Use the ground-truth transforms instead of a model.
    #[arg(long)]
    pub oracle: bool,
    /// Report CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pairs evaluated in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub num_pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub pdb: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub chains: Option<Vec<char>>,
    /// Neighbours per residue.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Output path; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Model checkpoint; a freshly initialized model if omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Ligand and receptor PDBs; a synthetic pair if omitted.
    #[arg(long, requires = "receptor")]
    pub ligand: Option<PathBuf>,
    #[arg(long, requires = "ligand")]
    pub receptor: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random motions to try.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Add uniform noise of this size to every parameter first, so that
    /// zero-initialized parts of a fresh model are exercised too.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    /// Largest relative deviation accepted.
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
}

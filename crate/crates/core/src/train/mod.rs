//! Training, evaluation and synthetic data.

mod dataset;
mod eval;
mod metrics;
mod optim;
mod synth;
mod trainer;

pub use dataset::{complex_json, load_pair, write_pair, write_splits, Dataset, PairData, Splits};
pub use eval::{
    eval_perturbation, evaluate, evaluate_model, EvalInput, EvalOptions, EvalReport, PairResult,
    Summary,
};
pub use metrics::{
    crmsd, interface_residues, irmsd, ligand_rmsd, mean_std, median, INTERFACE_CUTOFF,
};
pub use optim::Adam;
pub use synth::{
    backbone_triad, gen_synthetic, generate_pair, make_splits, pair_id, random_blob,
    satisfies_constraints, write_synthetic, SynthConfig, SyntheticPair, CA_C_BOND, CA_N_BOND,
    MAX_ATTEMPTS, MAX_INTERSECTION, MIN_CA_SEPARATION, MIN_CONTACTS, N_CA_C_ANGLE_DEG,
};
pub use trainer::{
    loss_csv, pair_loss, prepare_pair, train, training_example, validation_score, PreparedPair, StepRecord,
    TrainOutcome, TrainingExample,
};

pub use crate::rigid::random_se3;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iegmn::ModelConfig;
use crate::losses::{LossWeights, DEFAULT_TAU};
use crate::rigid::DEFAULT_T_MAX;

/// Everything that controls a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub loss: LossWeights,
    pub lr: f64,
    pub weight_decay: f64,
    /// Epochs without an accepted improvement before stopping.
    pub patience: usize,
    /// A validation score is accepted as the new best only if it is below
    /// `improvement × best`.
    pub improvement: f64,
    pub max_epochs: usize,
    /// Seeds model initialization; the data order, role swaps and
    /// augmentations are drawn from a stream derived from it.
    pub seed: u64,
    /// Translation range (Å) of the training augmentation and of the
    /// validation perturbations.
    pub t_max: f64,
    /// Contact distance (Å) defining pocket points.
    pub pocket_cutoff: f64,
    /// Randomly swap ligand and receptor roles at every step.
    pub swap_roles: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            loss: LossWeights::default(),
            lr: 2e-4,
            weight_decay: 0.0,
            patience: 30,
            improvement: 0.98,
            max_epochs: 10_000,
            seed: 0,
            t_max: DEFAULT_T_MAX,
            pocket_cutoff: DEFAULT_TAU,
            swap_roles: true,
        }
    }
}

impl TrainConfig {
    /// Preset for fine-tuning on small curated sets.
    pub fn fine_tune() -> Self {
        Self {
            lr: 1e-4,
            patience: 150,
            ..Self::default()
        }
    }

    /// Small model and faster learning rate for datasets of tens of pairs,
    /// where the full-size model memorizes the training pairs.
    pub fn toy() -> Self {
        Self {
            model: ModelConfig {
                layers: 3,
                hidden_dim: 16,
                embed_dim: 16,
                heads: 10,
                ..ModelConfig::default()
            },
            lr: 1e-3,
            max_epochs: 200,
            ..Self::default()
        }
    }

    pub const PRESETS: [&'static str; 3] = ["default", "fine-tune", "toy"];

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "fine-tune" => Ok(Self::fine_tune()),
            "toy" => Ok(Self::toy()),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected one of {:?})",
                Self::PRESETS
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let positive = [
            ("lr", self.lr >= 0.0),
            ("weight_decay", self.weight_decay >= 0.0),
            ("improvement", self.improvement > 0.0 && self.improvement <= 1.0),
            ("t_max", self.t_max >= 0.0),
            ("pocket_cutoff", self.pocket_cutoff > 0.0),
            ("loss.sigma", self.loss.sigma > 0.0),
        ];
        for (name, ok) in positive {
            if !ok {
                return Err(Error::Config(format!("invalid {name}")));
            }
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let d = TrainConfig::default();
        assert_eq!((d.lr, d.patience, d.improvement), (2e-4, 30, 0.98));
        let f = TrainConfig::preset("fine-tune").unwrap();
        assert_eq!((f.lr, f.patience), (1e-4, 150));
        assert!(TrainConfig::preset("fast").is_err());
        TrainConfig::toy().validate().unwrap();
        d.validate().unwrap();
    }

    #[test]
    fn json_partial_and_unknown() {
        let c: TrainConfig = serde_json::from_str(r#"{"lr": 0.01, "model": {"layers": 2}}"#).unwrap();
        assert_eq!(c.lr, 0.01);
        assert_eq!(c.model.layers, 2);
        assert_eq!(c.patience, 30);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"learning_rate": 1}"#).is_err());
    }
}

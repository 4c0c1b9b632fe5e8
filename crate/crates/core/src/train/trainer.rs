//! The training loop.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dataset::{Dataset, PairData};
use super::eval::eval_perturbation;
use super::metrics::{ligand_rmsd, median};
use super::optim::Adam;
use super::TrainConfig;
use crate::autodiff::Tape;
use crate::dock::{dock_on_tape, predict_dock};
use crate::error::{Error, Result};
use crate::iegmn::Model;
use crate::linalg::Vec3;
use crate::losses::{pocket_points, total_loss, LossTerms, LossWeights, PocketPoints};
use crate::params::Bound;
use crate::protein::{build_graph, ProteinGraph};
use crate::rigid::{random_se3_with, RigidTransform};
use crate::tensor::Tensor;

/// A pair with graphs built once. The ligand graph is in its input pose,
/// the receptor graph in the complex frame.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub id: String,
    pub ligand: ProteinGraph,
    pub receptor: ProteinGraph,
    pub truth: RigidTransform,
    /// Pocket points of the bound complex (complex frame).
    pub pockets: PocketPoints,
}

pub fn prepare_pair(pair: &PairData, k: usize, tau: f64) -> Result<PreparedPair> {
    let ligand = build_graph(&pair.ligand, k)?;
    let receptor = build_graph(&pair.receptor, k)?;
    let bound: Vec<Vec3> = pair.truth.apply_all(&ligand.coords);
    let pockets = pocket_points(&bound, &receptor.coords, tau)?;
    Ok(PreparedPair {
        id: pair.id.clone(),
        ligand,
        receptor,
        truth: pair.truth.clone(),
        pockets,
    })
}

/// One optimizer step's input: `moving` is docked onto `fixed`, whose
/// coordinates are already in the complex frame.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub moving: ProteinGraph,
    pub fixed: ProteinGraph,
    /// Bound-pose coordinates of the moving protein.
    pub moving_true: Vec<Vec3>,
    /// Pocket points with the moving side expressed in the moving input
    /// frame.
    pub pockets: PocketPoints,
}

/// Assigns roles (`swap` docks the receptor onto the bound ligand) and
/// moves the moving protein by `augment`.
pub fn training_example(p: &PreparedPair, swap: bool, augment: &RigidTransform) -> TrainingExample {
    let bound_ligand = p.ligand.transformed(&p.truth.r, &p.truth.t);
    let (complex_pose, fixed) = if swap {
        (p.receptor.clone(), bound_ligand)
    } else {
        (bound_ligand, p.receptor.clone())
    };
    TrainingExample {
        moving: complex_pose.transformed(&augment.r, &augment.t),
        moving_true: complex_pose.coords.clone(),
        fixed,
        pockets: p.pockets.moved(augment, &RigidTransform::identity()),
    }
}

/// Loss terms of one example on a tape.
pub fn pair_loss<'t>(
    model: &Model,
    bp: &Bound<'t, '_>,
    tape: &'t Tape,
    ex: &TrainingExample,
    weights: &LossWeights,
) -> Result<LossTerms<'t>> {
    let out = dock_on_tape(model, bp, tape, &ex.moving, &ex.fixed)?;
    let x = tape.constant(Tensor::from_points(&ex.moving.coords));
    let pred = out.transform.apply(x)?;
    total_loss(
        pred,
        tape.constant(Tensor::from_points(&ex.moving_true)),
        tape.constant(Tensor::from_points(&ex.fixed.coords)),
        out.y_ligand,
        out.y_receptor,
        &ex.pockets,
        weights,
    )
}

/// Median Ligand RMSD over `pairs`: each ligand is moved by its evaluation
/// perturbation, docked, and compared to its bound pose with the receptor
/// fixed. A failed prediction counts as the unmoved input.
pub fn validation_score(model: &Model, pairs: &[PreparedPair], seed: u64, t_max: f64) -> f64 {
    let scores: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let pert = eval_perturbation(seed, i, t_max);
            let input = p.ligand.transformed(&pert.r, &pert.t);
            let truth = p.truth.apply_all(&p.ligand.coords);
            let pred = match predict_dock(model, &input, &p.receptor) {
                Ok(d) => d.transform.apply_all(&input.coords),
                Err(e) => {
                    log::warn!("{}: prediction failed ({e}); using input pose", p.id);
                    input.coords.clone()
                }
            };
            ligand_rmsd(&pred, &truth).unwrap_or(f64::INFINITY)
        })
        .collect();
    median(&scores)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub pair_id: String,
    pub swapped: bool,
    pub mse: f64,
    pub ot: f64,
    pub intersection: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best accepted validation score.
    pub best: Model,
    pub best_score: f64,
    pub best_epoch: usize,
    /// Validation score after every epoch.
    pub val_scores: Vec<f64>,
    pub history: Vec<StepRecord>,
    pub epochs_run: usize,
    /// Steps skipped because the forward pass failed numerically.
    pub skipped_steps: usize,
    pub checkpoint: Option<PathBuf>,
}

fn prepare_all(pairs: &[&PairData], config: &TrainConfig) -> Result<Vec<PreparedPair>> {
    let mut out = Vec::new();
    let mut no_contact = 0;
    for p in pairs {
        match prepare_pair(p, config.model.knn, config.pocket_cutoff) {
            Ok(pp) => out.push(pp),
            Err(Error::NoContact { .. }) => {
                log::warn!("{}: no residue pair within {} Å; skipped", p.id, config.pocket_cutoff);
                no_contact += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() && no_contact > 0 {
        return Err(Error::NoContact {
            tau: config.pocket_cutoff,
        });
    }
    Ok(out)
}

/// Trains on the `train` split with early stopping on the `val` split.
/// With `out_dir`, the best model is written to `out_dir/best.ckpt` each
/// time it is accepted.
pub fn train(config: &TrainConfig, data: &Dataset, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    config.validate()?;
    let train_pairs = data.split("train")?;
    let val_pairs = data.split("val")?;
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(Error::Dataset("training needs nonempty train and val splits".into()));
    }
    let train_set = prepare_all(&train_pairs, config)?;
    let val_set = prepare_all(&val_pairs, config)?;
    if val_set.is_empty() {
        return Err(Error::NoContact {
            tau: config.pocket_cutoff,
        });
    }

    let mut model = Model::new(config.model.clone(), config.seed)?;
    let mut adam = Adam::new(&model.params, config.lr, config.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5851_f42d_4c95_7f2d);
    let val_seed = config.seed.wrapping_add(1);
    let ckpt_path = out_dir.map(|d| d.join("best.ckpt"));
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d)?;
    }

    let mut best = model.clone();
    let mut best_score = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut val_scores = Vec::new();
    let mut history = Vec::new();
    let mut skipped = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs_run = 0;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        order.shuffle(&mut rng);
        for &i in &order {
            let p = &train_set[i];
            let swap = config.swap_roles && rng.gen_bool(0.5);
            let aug = random_se3_with(&mut rng, config.t_max);
            let ex = training_example(p, swap, &aug);
            let tape = Tape::new();
            let bp = model.params.bind(&tape, true);
            let terms = match pair_loss(&model, &bp, &tape, &ex, &config.loss) {
                Ok(t) if t.total.item()?.is_finite() => t,
                Ok(_) => {
                    log::warn!("{}: non-finite loss; step skipped", p.id);
                    skipped += 1;
                    continue;
                }
                Err(e @ (Error::DegenerateKabsch(_) | Error::NonFinite(_))) => {
                    log::warn!("{}: {e}; step skipped", p.id);
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let [mse, ot, intersection, total] = terms.values();
            let grads = bp.gradients(&tape.backward(terms.total)?);
            drop(bp);
            adam.step(&mut model.params, &grads);
            history.push(StepRecord {
                step: history.len() + 1,
                epoch,
                pair_id: p.id.clone(),
                swapped: swap,
                mse,
                ot,
                intersection,
                total,
            });
        }

        let score = validation_score(&model, &val_set, val_seed, config.t_max);
        val_scores.push(score);
        if score < config.improvement * best_score {
            log::info!("epoch {epoch}: validation {score:.4} Å (new best)");
            best_score = score;
            best_epoch = epoch;
            best = model.clone();
            since_best = 0;
            if let Some(path) = &ckpt_path {
                best.save(path)?;
            }
        } else {
            since_best += 1;
            log::info!("epoch {epoch}: validation {score:.4} Å");
            if since_best >= config.patience {
                log::info!("no improvement for {since_best} epochs; stopping");
                break;
            }
        }
    }

    Ok(TrainOutcome {
        best,
        best_score,
        best_epoch,
        val_scores,
        history,
        epochs_run,
        skipped_steps: skipped,
        checkpoint: ckpt_path.filter(|_| best_epoch > 0),
    })
}

/// Writes the per-step loss history as CSV.
pub fn loss_csv(history: &[StepRecord]) -> String {
    let mut s = String::from("step,mse,ot,intersection,total\n");
    for r in history {
        s.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            r.step, r.mse, r.ot, r.intersection, r.total
        ));
    }
    s
}

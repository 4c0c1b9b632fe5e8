//! Docking evaluation: CRMSD and IRMSD over a set of pairs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dataset::PairData;
use super::metrics::{crmsd, irmsd, mean_std, median, INTERFACE_CUTOFF};
use crate::dock::predict_dock;
use crate::error::Result;
use crate::iegmn::Model;
use crate::linalg::Vec3;
use crate::protein::{build_graph, ProteinGraph};
use crate::rigid::{random_se3_with, RigidTransform, DEFAULT_T_MAX};

/// Perturbation applied to the ligand of the `index`-th evaluated pair.
pub fn eval_perturbation(seed: u64, index: usize, t_max: f64) -> RigidTransform {
    let mixed = seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    random_se3_with(&mut ChaCha8Rng::seed_from_u64(mixed), t_max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(default)]
pub struct EvalOptions {
    pub seed: u64,
    pub t_max: f64,
    pub knn: usize,
    pub cutoff: f64,
    /// Worker threads; values below 2 run sequentially.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            t_max: DEFAULT_T_MAX,
            knn: crate::protein::DEFAULT_K,
            cutoff: INTERFACE_CUTOFF,
            jobs: 1,
        }
    }
}

/// What a docking method sees for one pair. `perturbation` and `pair` are
/// exposed so reference methods can be built from the ground truth.
pub struct EvalInput<'a> {
    pub pair: &'a PairData,
    pub perturbation: &'a RigidTransform,
    /// Perturbed ligand.
    pub ligand: &'a ProteinGraph,
    pub receptor: &'a ProteinGraph,
}

impl EvalInput<'_> {
    /// The transform that places the perturbed ligand exactly.
    pub fn oracle(&self) -> RigidTransform {
        self.pair.truth.compose(&self.perturbation.inverse())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub pair_id: String,
    pub crmsd: f64,
    pub irmsd: f64,
    /// `ok`, or a description of what failed.
    pub status: String,
}

impl PairResult {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(xs: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
        let (mean, std) = mean_std(&v);
        Self {
            median: median(&v),
            mean,
            std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub pairs: Vec<PairResult>,
    pub crmsd: Summary,
    pub irmsd: Summary,
    pub failures: usize,
}

impl EvalReport {
    fn new(pairs: Vec<PairResult>) -> Self {
        Self {
            crmsd: Summary::of(pairs.iter().map(|p| p.crmsd)),
            irmsd: Summary::of(pairs.iter().map(|p| p.irmsd)),
            failures: pairs.iter().filter(|p| !p.ok()).count(),
            pairs,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pair_id,crmsd,irmsd,status\n");
        for p in &self.pairs {
            let status = p.status.replace([',', '\n'], ";");
            s.push_str(&format!("{},{:.6},{:.6},{}\n", p.pair_id, p.crmsd, p.irmsd, status));
        }
        s
    }
}

fn concat(a: &[Vec3], b: &[Vec3]) -> Vec<Vec3> {
    a.iter().chain(b).copied().collect()
}

fn evaluate_one<F>(pair: &PairData, index: usize, opts: &EvalOptions, dock: &F) -> PairResult
where
    F: Fn(&EvalInput) -> Result<RigidTransform>,
{
    let failed = |msg: String| PairResult {
        pair_id: pair.id.clone(),
        crmsd: f64::NAN,
        irmsd: f64::NAN,
        status: format!("error: {msg}"),
    };
    let (ligand, receptor) = match (
        build_graph(&pair.ligand, opts.knn),
        build_graph(&pair.receptor, opts.knn),
    ) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(e), _) | (_, Err(e)) => return failed(e.to_string()),
    };
    let pert = eval_perturbation(opts.seed, index, opts.t_max);
    let moved = ligand.transformed(&pert.r, &pert.t);
    let input = EvalInput {
        pair,
        perturbation: &pert,
        ligand: &moved,
        receptor: &receptor,
    };
    let (pred, mut status) = match dock(&input) {
        Ok(t) => (t.apply_all(&moved.coords), "ok".to_string()),
        Err(e) => (moved.coords.clone(), format!("failed: {e}; input pose used")),
    };
    let truth = pair.truth.apply_all(&ligand.coords);
    let c = crmsd(&concat(&pred, &receptor.coords), &concat(&truth, &receptor.coords));
    let i = irmsd(&pred, &receptor.coords, &truth, &receptor.coords, opts.cutoff);
    let value = |r: Result<f64>, status: &mut String| {
        r.unwrap_or_else(|e| {
            if status == "ok" {
                *status = format!("error: {e}");
            }
            f64::NAN
        })
    };
    PairResult {
        pair_id: pair.id.clone(),
        crmsd: value(c, &mut status),
        irmsd: value(i, &mut status),
        status,
    }
}

/// Evaluates `dock` on every pair. Each ligand is first moved by
/// [`eval_perturbation`]; a failed prediction is replaced by the unmoved
/// input. Results are in input order regardless of `jobs`.
pub fn evaluate<F>(pairs: &[&PairData], opts: &EvalOptions, dock: F) -> EvalReport
where
    F: Fn(&EvalInput) -> Result<RigidTransform> + Sync,
{
    let results: Vec<PairResult> = if opts.jobs < 2 || pairs.len() < 2 {
        pairs
            .iter()
            .enumerate()
            .map(|(i, p)| evaluate_one(p, i, opts, &dock))
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<PairResult>>> = Mutex::new(vec![None; pairs.len()]);
        std::thread::scope(|s| {
            for _ in 0..opts.jobs.min(pairs.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= pairs.len() {
                        break;
                    }
                    let r = evaluate_one(pairs[i], i, opts, &dock);
                    slots.lock().expect("no panics while holding the lock")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("workers joined")
            .into_iter()
            .map(|r| r.expect("every slot filled"))
            .collect()
    };
    EvalReport::new(results)
}

pub fn evaluate_model(model: &Model, pairs: &[&PairData], opts: &EvalOptions) -> EvalReport {
    evaluate(pairs, opts, |input| {
        predict_dock(model, input.ligand, input.receptor).map(|d| d.transform)
    })
}

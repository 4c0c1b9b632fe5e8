#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidock::autodiff::{Tape, Var};
use rigidock::params::Bound;
use rigidock::protein::{build_graph, ProteinGraph, Residue, ResidueSet, ResidueType, RESIDUE_NAMES};
use rigidock::train::{backbone_triad, random_blob};
use rigidock::{Model, ModelConfig, Result};

pub fn random_residues(rng: &mut ChaCha8Rng, n: usize, chain: char) -> ResidueSet {
    let cas = random_blob(rng, n).unwrap();
    let residues = cas
        .iter()
        .enumerate()
        .map(|(i, ca)| {
            let (n_atom, c_atom) = backbone_triad(rng, ca);
            let name = RESIDUE_NAMES[rng.gen_range(0..20)];
            Residue {
                name: name.to_string(),
                kind: ResidueType::from_name(name),
                chain,
                seq: format!("{:>4} ", i + 1),
                ca: *ca,
                n: n_atom,
                c: c_atom,
            }
        })
        .collect();
    ResidueSet::new(residues)
}

/// Two random proteins, the second offset so they sit side by side.
pub fn random_pair(seed: u64, n1: usize, n2: usize) -> (ProteinGraph, ProteinGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_residues(&mut rng, n1, 'A');
    let b = random_residues(&mut rng, n2, 'B').translated(&[12.0, -3.0, 5.0]);
    (build_graph(&a, 10).unwrap(), build_graph(&b, 10).unwrap())
}

pub fn small_config(layers: usize) -> ModelConfig {
    ModelConfig {
        hidden_dim: 8,
        embed_dim: 4,
        layers,
        heads: 4,
        ..ModelConfig::default()
    }
}

/// A model whose coordinate heads are non-zero, so coordinates actually move.
pub fn perturbed(config: ModelConfig, seed: u64) -> Model {
    let mut m = Model::new(config, seed).unwrap();
    m.perturb(0.05, seed + 1000);
    m
}

/// Central-difference check of parameter gradients on `samples` randomly
/// chosen parameter entries; returns the worst `|a − n| / (|a| + |n| + 1e-8)`
/// over entries whose gradient is not negligible.
pub fn param_grad_check<F>(model: &Model, f: F, samples: usize, seed: u64) -> f64
where
    F: for<'t> Fn(&Model, &Bound<'t, '_>, &'t Tape) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let bp = model.params.bind(&tape, true);
    let out = f(model, &bp, &tape).unwrap();
    let grads = bp.gradients(&tape.backward(out).unwrap());
    drop(bp);

    let eval = |m: &Model| {
        let tape = Tape::new();
        let bp = m.params.bind(&tape, false);
        f(m, &bp, &tape).unwrap().item().unwrap()
    };
    let sizes: Vec<usize> = model.params.iter().map(|(_, t)| t.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let ti = rng.gen_range(0..sizes.len());
        let e = rng.gen_range(0..sizes[ti]);
        let mut work = model.clone();
        let orig = work.params.tensors_mut().nth(ti).unwrap().data()[e];
        work.params.tensors_mut().nth(ti).unwrap().data_mut()[e] = orig + step;
        let plus = eval(&work);
        work.params.tensors_mut().nth(ti).unwrap().data_mut()[e] = orig - step;
        let minus = eval(&work);
        let numeric = (plus - minus) / (2.0 * step);
        let a = grads[ti].data()[e];
        if a.abs().max(numeric.abs()) < 1e-7 {
            continue;
        }
        worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs() + 1e-8));
    }
    worst
}

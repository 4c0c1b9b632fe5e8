mod common;

use common::{param_grad_check, perturbed, random_pair, small_config};
use rigidock::autodiff::{Tape, Var};
use rigidock::params::Bound;
use rigidock::protein::ProteinGraph;
use rigidock::tensor::Tensor;
use rigidock::{check_pairwise_equivariance, Model, ModelConfig, Result};

#[test]
fn pairwise_equivariance_random_depths() {
    for seed in 0..6u64 {
        let layers = 2 + (seed as usize % 7);
        let model = perturbed(small_config(layers), seed);
        let (g1, g2) = random_pair(seed, 9, 7);
        let r = check_pairwise_equivariance(&model, &g1, &g2, seed + 50).unwrap();
        assert!(r.max_relative() <= 1e-6, "seed {seed}: {r:?}");
        assert!(r.scale > 1.0);
    }
}

#[test]
fn identity_motion_gives_zero_deviation() {
    let model = perturbed(small_config(3), 1);
    let (g1, g2) = random_pair(1, 8, 8);
    let [z1, h1, z2, h2] = model.embed_pair(&g1, &g2).unwrap();
    let [a, b, c, d] = model.embed_pair(&g1, &g2).unwrap();
    assert_eq!((z1, h1, z2, h2), (a, b, c, d));
}

#[test]
fn translations_move_coordinates_and_keep_features() {
    let model = perturbed(small_config(3), 2);
    let (g1, g2) = random_pair(2, 10, 6);
    let [z1, h1, z2, h2] = model.embed_pair(&g1, &g2).unwrap();
    let (o1, o2) = ([3.0, -40.0, 7.5], [-12.0, 0.25, 90.0]);
    let [z1m, h1m, z2m, h2m] = model.embed_pair(&g1.translated(&o1), &g2.translated(&o2)).unwrap();
    assert!(h1.max_abs_diff(&h1m) <= 1e-10 && h2.max_abs_diff(&h2m) <= 1e-10);
    let shifted = |z: &Tensor, o: [f64; 3]| {
        Tensor::from_points(&z.points().iter().map(|p| [p[0] + o[0], p[1] + o[1], p[2] + o[2]]).collect::<Vec<_>>())
    };
    assert!(shifted(&z1, o1).max_abs_diff(&z1m) <= 1e-9);
    assert!(shifted(&z2, o2).max_abs_diff(&z2m) <= 1e-9);
}

#[test]
fn coordinate_leak_into_cross_messages_is_detected() {
    let mut cfg = small_config(3);
    cfg.cross_uses_coords = true;
    let model = perturbed(cfg, 3);
    let (g1, g2) = random_pair(3, 8, 8);
    let r = check_pairwise_equivariance(&model, &g1, &g2, 9).unwrap();
    assert!(r.max_relative() > 1e-3, "{r:?}");
}

#[test]
fn swapping_inputs_swaps_outputs() {
    let model = perturbed(small_config(4), 4);
    let (g1, g2) = random_pair(4, 9, 6);
    let [z1, h1, z2, h2] = model.embed_pair(&g1, &g2).unwrap();
    let [w2, k2, w1, k1] = model.embed_pair(&g2, &g1).unwrap();
    assert!(z1.max_abs_diff(&w1) <= 1e-12 && z2.max_abs_diff(&w2) <= 1e-12);
    assert!(h1.max_abs_diff(&k1) <= 1e-12 && h2.max_abs_diff(&k2) <= 1e-12);
}

fn permute_graph(g: &ProteinGraph, order: &[usize]) -> ProteinGraph {
    // order[new] = old
    let mut inv = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        inv[old] = new;
    }
    let mut edges: Vec<(usize, usize, [f64; 27])> = g
        .src
        .iter()
        .zip(&g.dst)
        .zip(&g.edge_features)
        .map(|((&s, &d), f)| (inv[s], inv[d], *f))
        .collect();
    edges.sort_by_key(|e| (e.1, e.0));
    ProteinGraph {
        coords: order.iter().map(|&i| g.coords[i]).collect(),
        types: order.iter().map(|&i| g.types[i]).collect(),
        surface: order.iter().map(|&i| g.surface[i]).collect(),
        src: edges.iter().map(|e| e.0).collect(),
        dst: edges.iter().map(|e| e.1).collect(),
        edge_features: edges.iter().map(|e| e.2).collect(),
        k: g.k,
    }
}

#[test]
fn node_permutation_is_equivariant() {
    let model = perturbed(small_config(3), 5);
    let (g1, g2) = random_pair(5, 9, 7);
    let order: Vec<usize> = vec![4, 0, 8, 2, 6, 1, 3, 7, 5];
    let [z1, h1, z2, h2] = model.embed_pair(&g1, &g2).unwrap();
    let [pz1, ph1, pz2, ph2] = model.embed_pair(&permute_graph(&g1, &order), &g2).unwrap();
    for (new, &old) in order.iter().enumerate() {
        for c in 0..3 {
            assert!((pz1.get(new, c) - z1.get(old, c)).abs() <= 1e-10);
        }
        for c in 0..h1.cols() {
            assert!((ph1.get(new, c) - h1.get(old, c)).abs() <= 1e-10);
        }
    }
    assert!(pz2.max_abs_diff(&z2) <= 1e-10 && ph2.max_abs_diff(&h2) <= 1e-10);
}

#[test]
fn cross_attention_rows_sum_to_one() {
    let model = perturbed(small_config(2), 6);
    let (g1, g2) = random_pair(6, 9, 5);
    let tape = Tape::new();
    let bp = model.params.bind(&tape, false);
    let (s1, s2) = model.forward(&bp, &tape, &g1, &g2).unwrap();
    for layer in 0..2 {
        let a = model.cross_attention(&bp, layer, s1.h, s2.h).unwrap().value();
        assert_eq!(a.dims(), (9, 5));
        for r in 0..9 {
            let s: f64 = a.row(r).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_layer_with_full_skip_and_zero_coordinate_head_keeps_input() {
    let cfg = ModelConfig {
        eta: 1.0,
        ..small_config(1)
    };
    let model = Model::new(cfg, 7).unwrap();
    let (g1, g2) = random_pair(7, 8, 6);
    let [z1, _, z2, _] = model.embed_pair(&g1, &g2).unwrap();
    assert_eq!(z1, Tensor::from_points(&g1.coords));
    assert_eq!(z2, Tensor::from_points(&g2.coords));
}

#[test]
fn isolated_node_keeps_skip_combination() {
    // One layer, η = 0.25: with no neighbours the update is η x0 + (1 − η) x = x.
    let model = perturbed(small_config(1), 8);
    let (mut g1, g2) = random_pair(8, 6, 6);
    let keep: Vec<usize> = (0..g1.src.len()).filter(|&e| g1.dst[e] != 0).collect();
    g1.src = keep.iter().map(|&e| g1.src[e]).collect();
    g1.edge_features = keep.iter().map(|&e| g1.edge_features[e]).collect();
    g1.dst = keep.iter().map(|&e| g1.dst[e]).collect();
    let [z1, h1, _, _] = model.embed_pair(&g1, &g2).unwrap();
    for c in 0..3 {
        assert!((z1.get(0, c) - g1.coords[0][c]).abs() <= 1e-12);
    }
    assert!(h1.data().iter().all(|x| x.is_finite()));
}

fn weighted_outputs<'t>(
    model: &Model,
    bp: &Bound<'t, '_>,
    tape: &'t Tape,
    g1: &ProteinGraph,
    g2: &ProteinGraph,
) -> Result<Var<'t>> {
    let (s1, s2) = model.forward(bp, tape, g1, g2)?;
    let w = |v: Var<'t>| -> Result<Var<'t>> {
        let (r, c) = v.dims();
        let data = (0..r * c).map(|i| ((i * 31) % 17) as f64 / 17.0 - 0.5).collect();
        Ok(v.mul(tape.constant(Tensor::matrix(r, c, data)?))?.sum())
    };
    w(s1.z)?.add(w(s1.h)?)?.add(w(s2.z)?)?.add(w(s2.h)?)
}

#[test]
fn gradients_through_two_layers() {
    let model = perturbed(small_config(2), 9);
    let (g1, g2) = random_pair(9, 6, 5);
    let err = param_grad_check(
        &model,
        |m, bp, tape| weighted_outputs(m, bp, tape, &g1, &g2),
        150,
        1,
    );
    assert!(err <= 1e-4, "{err:e}");
}

#[test]
fn shared_layers_reuse_parameters() {
    let mut cfg = small_config(4);
    cfg.share_layers = true;
    let shared = Model::new(cfg.clone(), 0).unwrap();
    cfg.share_layers = false;
    let separate = Model::new(cfg, 0).unwrap();
    assert!(shared.params.num_scalars() < separate.params.num_scalars());
    assert!(shared.params.names().all(|n| !n.starts_with("iegmn.layer2")));
    let (g1, g2) = random_pair(10, 7, 7);
    let mut m = shared;
    m.perturb(0.05, 3);
    let r = check_pairwise_equivariance(&m, &g1, &g2, 3).unwrap();
    assert!(r.max_relative() <= 1e-6);
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidock::linalg::Vec3;
use rigidock::protein::{
    build_graph, parse_pdb, surface_feature, surface_features, ProteinGraph, ResidueSet,
    EDGE_FEATURE_DIM,
};
use rigidock::rigid::random_se3_with;
use rigidock::train::{gen_synthetic, SynthConfig};

const FIXTURE: &str = include_str!("data/fixture20.pdb");
const RECEPTOR: &str = include_str!("data/receptor30.pdb");

/// Whitespace-split reader for the fixture's well-separated columns.
fn naive_ca(text: &str) -> Vec<(String, i32, Vec3)> {
    text.lines()
        .filter(|l| l.starts_with("ATOM"))
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .filter(|f| f[2] == "CA")
        .map(|f| {
            let p = [f[6].parse().unwrap(), f[7].parse().unwrap(), f[8].parse().unwrap()];
            (f[3].to_string(), f[5].parse().unwrap(), p)
        })
        .collect()
}

fn fixture_proteins() -> Vec<ResidueSet> {
    let mut out = vec![parse_pdb(FIXTURE, None).unwrap(), parse_pdb(RECEPTOR, None).unwrap()];
    for p in gen_synthetic(4, 99, &SynthConfig::default()).unwrap() {
        out.push(p.data.ligand);
        out.push(p.data.receptor);
    }
    assert_eq!(out.len(), 10);
    out
}

#[test]
fn fixture_matches_independent_reader() {
    let rs = parse_pdb(FIXTURE, None).unwrap();
    let naive = naive_ca(FIXTURE);
    assert_eq!(rs.len(), 20);
    assert_eq!(naive.len(), 20);
    for (r, (name, seq, ca)) in rs.residues.iter().zip(&naive) {
        assert_eq!(&r.name, name);
        assert_eq!(r.seq.trim().parse::<i32>().unwrap(), *seq);
        assert_eq!(r.ca, *ca);
        assert_eq!(r.chain, 'A');
    }
    // The water record is not a residue with a backbone.
    assert_eq!(parse_pdb(RECEPTOR, None).unwrap().len(), 30);
}

#[test]
fn features_invariant_under_rigid_motion() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for rs in fixture_proteins() {
        let g = build_graph(&rs, 10).unwrap();
        for _ in 0..3 {
            let t = random_se3_with(&mut rng, 100.0);
            let h = build_graph(&rs.transformed(&t.r, &t.t), 10).unwrap();
            assert_eq!(g.src, h.src);
            assert_eq!(g.dst, h.dst);
            assert_eq!(g.types, h.types);
            let mut worst: f64 = 0.0;
            for (a, b) in g.surface.iter().zip(&h.surface) {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - y).abs());
                }
            }
            for (a, b) in g.edge_features.iter().zip(&h.edge_features) {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - y).abs());
                }
            }
            assert!(worst <= 1e-8, "feature change {worst:e}");
        }
    }
}

fn edge_map(g: &ProteinGraph, relabel: &[usize]) -> Vec<((usize, usize), [f64; EDGE_FEATURE_DIM])> {
    let mut v: Vec<_> = g
        .src
        .iter()
        .zip(&g.dst)
        .zip(&g.edge_features)
        .map(|((&s, &d), f)| ((relabel[s], relabel[d]), *f))
        .collect();
    v.sort_by_key(|e| e.0);
    v
}

#[test]
fn graph_is_permutation_equivariant() {
    let rs = parse_pdb(RECEPTOR, None).unwrap();
    let n = rs.len();
    let order: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let g = build_graph(&rs, 10).unwrap();
    let h = build_graph(&rs.permuted(&order), 10).unwrap();
    // Node i of the permuted set is node order[i] of the original.
    let identity: Vec<usize> = (0..n).collect();
    let a = edge_map(&g, &identity);
    let b = edge_map(&h, &order);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
        assert!(x.1.iter().zip(&y.1).all(|(p, q)| (p - q).abs() < 1e-12));
    }
    for i in 0..n {
        assert_eq!(h.surface[i], g.surface[order[i]]);
    }
}

#[test]
fn graph_degree_and_small_inputs() {
    let rs = parse_pdb(FIXTURE, None).unwrap();
    let g = build_graph(&rs, 10).unwrap();
    assert_eq!(g.num_edges(), 20 * 10);
    let small = ResidueSet::new(rs.residues[..4].to_vec());
    let g = build_graph(&small, 10).unwrap();
    assert_eq!(g.k, 3);
    assert_eq!(g.num_edges(), 12);
    assert!(build_graph(&ResidueSet::new(rs.residues[..1].to_vec()), 10).is_err());
}

fn arc(alpha: f64, n: usize) -> Vec<Vec3> {
    // n unit-distance neighbours spread evenly over an arc of angle alpha.
    (0..n)
        .map(|j| {
            let th = -alpha / 2.0 + alpha * (j as f64 + 0.5) / n as f64;
            [th.cos(), th.sin(), 0.0]
        })
        .collect()
}

#[test]
fn surface_feature_closed_form() {
    use std::f64::consts::PI;
    for alpha in [PI / 2.0, PI, 1.5 * PI] {
        let expected = 2.0 * (alpha / 2.0).sin() / alpha;
        for lambda in [1.0, 30.0] {
            let rho = surface_feature(&[0.0; 3], &arc(alpha, 200), lambda).unwrap();
            assert!((rho - expected).abs() < 0.02, "α={alpha}: {rho} vs {expected}");
        }
    }
    for n in [3, 6, 12] {
        let rho = surface_feature(&[0.0; 3], &arc(2.0 * PI, n), 5.0).unwrap();
        assert!(rho <= 1e-10, "{n}-gon: {rho:e}");
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let m = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
    let var: f64 = ra.iter().map(|x| (x - m) * (x - m)).sum();
    cov / var
}

#[test]
fn surface_feature_tracks_depth_in_unit_disk() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pts: Vec<Vec3> = (0..500)
        .map(|_| {
            let r: f64 = rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            [r * th.cos(), r * th.sin(), 0.0]
        })
        .collect();
    let depth: Vec<f64> = pts.iter().map(|p| 1.0 - (p[0] * p[0] + p[1] * p[1]).sqrt()).collect();
    let all: Vec<Vec<usize>> = (0..500).map(|i| (0..500).filter(|&j| j != i).collect()).collect();
    let rho: Vec<f64> = surface_features(&pts, &all, &[0.05])
        .unwrap()
        .into_iter()
        .map(|r| r[0])
        .collect();
    let s = spearman(&rho, &depth);
    assert!(s < -0.5, "Spearman {s}");
}

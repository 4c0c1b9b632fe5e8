mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rigidock::linalg::{self, Vec3};
use rigidock::losses::emd_solve;
use rigidock::protein::{build_graph, parse_pdb, write_backbone_pdb};
use rigidock::rigid::{kabsch, superimposed_rmsd, RigidTransform};

fn point() -> impl Strategy<Value = Vec3> {
    [-20.0..20.0f64, -20.0..20.0f64, -20.0..20.0f64]
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    ([-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64], point())
        .prop_filter("non-zero quaternion", |(q, _)| q.iter().map(|x| x * x).sum::<f64>() > 0.01)
        .prop_map(|(q, t)| {
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            RigidTransform::new(linalg::quat_to_mat(q.map(|x| x / n)), t)
        })
}

fn spread(points: &[Vec3]) -> f64 {
    let c = linalg::centroid(points);
    points.iter().map(|p| linalg::dist2(p, &c)).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_with_inverse_is_identity(a in transform(), b in transform(), x in point()) {
        prop_assert!(a.compose(&a.inverse()).max_abs_diff(&RigidTransform::identity()) <= 1e-12);
        let lhs = a.compose(&b).apply(&x);
        let rhs = a.apply(&b.apply(&x));
        prop_assert!(linalg::dist2(&lhs, &rhs).sqrt() <= 1e-10);
        prop_assert!(a.rotation_error() <= 1e-12);
    }

    #[test]
    fn kabsch_recovers_any_motion(
        pts in prop::collection::vec(point(), 4..30),
        t in transform(),
    ) {
        prop_assume!(spread(&pts) > 1.0);
        let moved = t.apply_all(&pts);
        match kabsch(&pts, &moved) {
            Ok(found) => {
                prop_assert!((linalg::det(&found.r) - 1.0).abs() <= 1e-10);
                let err = superimposed_rmsd(&found.apply_all(&pts), &moved).unwrap();
                prop_assert!(err <= 1e-8);
                for (a, b) in found.apply_all(&pts).iter().zip(&moved) {
                    prop_assert!(linalg::dist2(a, b).sqrt() <= 1e-7);
                }
            }
            // Nearly collinear draws may be rejected but never accepted wrongly.
            Err(e) => prop_assert!(matches!(e, rigidock::Error::DegenerateKabsch(_))),
        }
    }

    #[test]
    fn emd_plans_are_feasible_and_beat_assignments(
        n in 1usize..7,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let plan = emd_solve(&cost, n, n).unwrap();
        for s in plan.row_sums().into_iter().chain(plan.col_sums()) {
            prop_assert!((s - 1.0 / n as f64).abs() <= 1e-12);
        }
        prop_assert!(plan.plan.iter().all(|&x| x >= 0.0));
        // Any permutation is a feasible plan with cost mean(C[i, σ(i)]).
        let identity: f64 = (0..n).map(|i| cost[i * n + i]).sum::<f64>() / n as f64;
        let shifted: f64 = (0..n).map(|i| cost[i * n + (i + 1) % n]).sum::<f64>() / n as f64;
        prop_assert!(plan.objective <= identity.min(shifted) + 1e-12);
    }

    #[test]
    fn backbone_pdb_round_trip(seed in any::<u64>(), n in 2usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = common::random_residues(&mut rng, n, 'C');
        let back = parse_pdb(&write_backbone_pdb(&rs), None).unwrap();
        prop_assert_eq!(back.len(), n);
        for (a, b) in rs.residues.iter().zip(&back.residues) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.seq.trim(), b.seq.trim());
            for (p, q) in [(a.n, b.n), (a.ca, b.ca), (a.c, b.c)] {
                for i in 0..3 {
                    prop_assert!((p[i] - q[i]).abs() <= 5e-4 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn graph_features_ignore_translation(seed in any::<u64>(), offset in point()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = common::random_residues(&mut rng, 15, 'A');
        let g = build_graph(&rs, 6).unwrap();
        let h = build_graph(&rs.translated(&offset), 6).unwrap();
        prop_assert_eq!(&g.src, &h.src);
        prop_assert_eq!(&g.dst, &h.dst);
        for (a, b) in g.edge_features.iter().flatten().zip(h.edge_features.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}

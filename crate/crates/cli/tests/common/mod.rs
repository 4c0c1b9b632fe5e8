#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rigidock::{Model, ModelConfig};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rigidock"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn rigidock")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "rigidock {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// A default-size model with every parameter nudged off its initial value,
/// so zero-initialized blocks take part.
pub fn write_model(dir: &Path, seed: u64) -> PathBuf {
    let mut model = Model::new(ModelConfig::default(), seed).unwrap();
    model.perturb(0.05, seed + 1);
    let path = dir.join(format!("model{seed}.ckpt"));
    model.save(&path).unwrap();
    path
}

/// CA coordinates read straight from fixed PDB columns.
pub fn ca_coords(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter(|l| l.starts_with("ATOM") && l.get(12..16).map(str::trim) == Some("CA"))
        .map(|l| {
            let f = |a: usize, b: usize| l[a..b].trim().parse::<f64>().unwrap();
            [f(30, 38), f(38, 46), f(46, 54)]
        })
        .collect()
}

/// (residue name, chain, residue number) of every CA record.
pub fn ca_labels(text: &str) -> Vec<(String, String, String)> {
    text.lines()
        .filter(|l| l.starts_with("ATOM") && l.get(12..16).map(str::trim) == Some("CA"))
        .map(|l| (l[17..20].to_string(), l[21..22].to_string(), l[22..27].trim().to_string()))
        .collect()
}

/// `(R, t)` from a transform JSON file.
pub fn read_transform(path: &Path) -> ([[f64; 3]; 3], [f64; 3]) {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let r: [[f64; 3]; 3] = serde_json::from_value(v["R"].clone()).unwrap();
    let t: [f64; 3] = serde_json::from_value(v["t"].clone()).unwrap();
    (r, t)
}

pub fn apply(r: &[[f64; 3]; 3], t: &[f64; 3], p: &[f64; 3]) -> [f64; 3] {
    let mut q = *t;
    for i in 0..3 {
        for j in 0..3 {
            q[i] += r[i][j] * p[j];
        }
    }
    q
}

pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

pub fn max_pairwise_distance_change(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            worst = worst.max((dist(&a[i], &a[j]) - dist(&b[i], &b[j])).abs());
        }
    }
    worst
}

pub struct DockRun {
    pub pdb: String,
    pub transform: PathBuf,
    pub pdb_bytes: Vec<u8>,
    pub transform_bytes: Vec<u8>,
}

pub fn dock(dir: &Path, tag: &str, ligand: &Path, receptor: &Path, model: &Path) -> DockRun {
    let pdb = dir.join(format!("{tag}.pdb"));
    let transform = dir.join(format!("{tag}.json"));
    run_ok(&[
        "dock",
        "--ligand",
        s(ligand),
        "--receptor",
        s(receptor),
        "--model",
        s(model),
        "--out-pdb",
        s(&pdb),
        "--out-transform",
        s(&transform),
    ]);
    let pdb_bytes = std::fs::read(&pdb).unwrap();
    DockRun {
        pdb: String::from_utf8(pdb_bytes.clone()).unwrap(),
        transform_bytes: std::fs::read(&transform).unwrap(),
        transform,
        pdb_bytes,
    }
}

/// Docks the 20-residue fixture onto the receptor fixture and checks the
/// CLI contract; returns the worst deviation of each kind.
pub struct CliCheck {
    pub deterministic: bool,
    pub round_trip: f64,
    pub rigidity: f64,
    pub labels_preserved: bool,
    pub pre_rotated: f64,
}

pub fn check_dock_contract(dir: &Path, model: &Path, seed: u64) -> CliCheck {
    let lig = fixture("fixture20.pdb");
    let rec = fixture("receptor30.pdb");
    let a = dock(dir, "a", &lig, &rec, model);
    let b = dock(dir, "b", &lig, &rec, model);
    let deterministic = a.pdb_bytes == b.pdb_bytes && a.transform_bytes == b.transform_bytes;

    let lig_text = std::fs::read_to_string(&lig).unwrap();
    let input = ca_coords(&lig_text);
    let output = ca_coords(&a.pdb);
    assert_eq!(input.len(), output.len());
    let (r, t) = read_transform(&a.transform);
    let round_trip = input
        .iter()
        .zip(&output)
        .map(|(p, q)| dist(&apply(&r, &t, p), q))
        .fold(0.0, f64::max);
    let rigidity = max_pairwise_distance_change(&input, &output);
    let labels_preserved = ca_labels(&lig_text) == ca_labels(&a.pdb);

    // Both inputs moved by independent rigid motions, written back to PDB.
    let rec_text = std::fs::read_to_string(&rec).unwrap();
    let m_l = rigidock::random_se3(seed + 10);
    let m_r = rigidock::random_se3(seed + 11);
    let lig_moved = dir.join("lig_moved.pdb");
    let rec_moved = dir.join("rec_moved.pdb");
    std::fs::write(
        &lig_moved,
        rigidock::protein::transform_pdb_text(&lig_text, &m_l.r, &m_l.t).unwrap(),
    )
    .unwrap();
    std::fs::write(
        &rec_moved,
        rigidock::protein::transform_pdb_text(&rec_text, &m_r.r, &m_r.t).unwrap(),
    )
    .unwrap();
    let c = dock(dir, "c", &lig_moved, &rec_moved, model);
    let complex_a: Vec<[f64; 3]> = output.iter().chain(&ca_coords(&rec_text)).copied().collect();
    let rec_moved_text = std::fs::read_to_string(&rec_moved).unwrap();
    let complex_c: Vec<[f64; 3]> = ca_coords(&c.pdb)
        .iter()
        .chain(&ca_coords(&rec_moved_text))
        .copied()
        .collect();
    let pre_rotated = rigidock::rigid::superimposed_rmsd(&complex_a, &complex_c).unwrap();

    CliCheck {
        deterministic,
        round_trip,
        rigidity,
        labels_preserved,
        pre_rotated,
    }
}

//! Synthetic docking pairs: random compact blobs of pseudo-residues, one
//! docked against a random surface patch of the other.
//!
//! Residues near the interface get residue types determined by their angular
//! sector around the docking axis, identically on both sides, so the binding
//! site and its orientation are recoverable from the inputs. All other
//! residues get random types from the remaining pool.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{write_pair, write_splits, Dataset, PairData, Splits};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::losses::{intersection_loss, pocket_points, DEFAULT_GAMMA, DEFAULT_SIGMA, DEFAULT_TAU};
use crate::protein::{parse_pdb, write_backbone_pdb, Residue, ResidueSet, ResidueType, RESIDUE_NAMES};
use crate::rigid::{random_rotation, random_se3_with, RigidTransform};

pub const MIN_CA_SEPARATION: f64 = 3.8;
pub const CA_N_BOND: f64 = 1.46;
pub const CA_C_BOND: f64 = 1.52;
pub const N_CA_C_ANGLE_DEG: f64 = 110.0;
pub const MIN_CONTACTS: usize = 5;
pub const MAX_INTERSECTION: f64 = 0.1;
pub const MAX_ATTEMPTS: usize = 1000;

/// Residue types marking the three interface sectors.
const SECTOR_TYPES: [&str; 3] = ["TRP", "TYR", "HIS"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Inclusive residue-count range of receptors.
    pub receptor_size: (usize, usize),
    pub ligand_size: (usize, usize),
    /// Range of the number of contact pairs the docked ligand is pushed
    /// towards; the placement stops earlier if the proteins would overlap.
    pub contacts: (usize, usize),
    /// Translation range (Å) of the unbound ligand placement.
    pub t_max: f64,
    /// Residues closer than this (Å) to the partner get sector types.
    pub interface_radius: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            receptor_size: (30, 80),
            ligand_size: (20, 50),
            contacts: (10, 30),
            t_max: 30.0,
            interface_radius: 10.0,
            val_fraction: 0.15,
            test_fraction: 0.15,
        }
    }
}

/// A generated pair with the exact file contents written for it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub data: PairData,
    pub ligand_pdb: String,
    pub receptor_pdb: String,
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = linalg::norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return linalg::scale(&v, 1.0 / n);
        }
    }
}

/// `n` points in a ball sized for protein-like density, pairwise at least
/// [`MIN_CA_SEPARATION`] apart, by dart throwing.
pub fn random_blob<R: Rng>(rng: &mut R, n: usize) -> Result<Vec<Vec3>> {
    let radius = (35.8 * n as f64).cbrt();
    let min2 = MIN_CA_SEPARATION * MIN_CA_SEPARATION;
    let mut pts: Vec<Vec3> = Vec::with_capacity(n);
    let budget = 5000 * n.max(1);
    for _ in 0..budget {
        if pts.len() == n {
            break;
        }
        let p = [
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        ];
        if linalg::norm(&p) > radius {
            continue;
        }
        if pts.iter().all(|q| linalg::dist2(&p, q) >= min2) {
            pts.push(p);
        }
    }
    if pts.len() < n {
        return Err(Error::GenerationFailed(budget));
    }
    Ok(pts)
}

/// Randomly oriented N and C positions around a CA.
pub fn backbone_triad<R: Rng>(rng: &mut R, ca: &Vec3) -> (Vec3, Vec3) {
    let r = random_rotation(rng);
    let ang = N_CA_C_ANGLE_DEG.to_radians();
    let n_dir = linalg::mat_vec(&r, &[1.0, 0.0, 0.0]);
    let c_dir = linalg::mat_vec(&r, &[ang.cos(), ang.sin(), 0.0]);
    (
        linalg::add(ca, &linalg::scale(&n_dir, CA_N_BOND)),
        linalg::add(ca, &linalg::scale(&c_dir, CA_C_BOND)),
    )
}

fn residues<R: Rng>(rng: &mut R, cas: &[Vec3], chain: char) -> Vec<Residue> {
    cas.iter()
        .enumerate()
        .map(|(i, ca)| {
            let (n, c) = backbone_triad(rng, ca);
            Residue {
                name: "GLY".into(),
                kind: ResidueType::from_name("GLY"),
                chain,
                seq: format!("{:>4} ", i + 1),
                ca: *ca,
                n,
                c,
            }
        })
        .collect()
}

fn set_type(r: &mut Residue, name: &str) {
    r.name = name.to_string();
    r.kind = ResidueType::from_name(name);
}

fn orthogonal_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let pick = if axis[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = linalg::normalize(&linalg::cross(axis, &pick));
    (e1, linalg::cross(axis, &e1))
}

/// Types residues near the partner by angular sector around `axis` through
/// `center`; everything else gets a random non-sector type.
fn assign_types<R: Rng>(
    rng: &mut R,
    res: &mut [Residue],
    partner: &[Vec3],
    center: &Vec3,
    axis: &Vec3,
    radius: f64,
) {
    let pool: Vec<&str> = RESIDUE_NAMES[..20]
        .iter()
        .copied()
        .filter(|n| !SECTOR_TYPES.contains(n))
        .collect();
    let (e1, e2) = orthogonal_basis(axis);
    let r2 = radius * radius;
    for r in res.iter_mut() {
        let near = partner.iter().any(|p| linalg::dist2(&r.ca, p) < r2);
        if near {
            let d = linalg::sub(&r.ca, center);
            let phi = linalg::dot(&d, &e2).atan2(linalg::dot(&d, &e1));
            let frac = (phi + std::f64::consts::PI) / std::f64::consts::TAU;
            let sector = ((frac * 3.0) as usize).min(2);
            set_type(r, SECTOR_TYPES[sector]);
        } else {
            set_type(r, pool.choose(rng).expect("non-empty pool"));
        }
    }
}

fn contacts_and_overlap(lig: &[Vec3], rec: &[Vec3]) -> (usize, f64) {
    let tau2 = DEFAULT_TAU * DEFAULT_TAU;
    let contacts = lig
        .iter()
        .map(|a| rec.iter().filter(|b| linalg::dist2(a, b) < tau2).count())
        .sum();
    (contacts, intersection_loss(lig, rec, DEFAULT_GAMMA, DEFAULT_SIGMA))
}

/// Checks the construction constraints on a ligand/receptor in bound pose.
pub fn satisfies_constraints(ligand: &[Vec3], receptor: &[Vec3]) -> bool {
    let (c, ni) = contacts_and_overlap(ligand, receptor);
    c >= MIN_CONTACTS && ni <= MAX_INTERSECTION
}

/// Slides a randomly rotated ligand towards the receptor along a random
/// direction until it makes `target` contacts, stopping at the last
/// position with at least [`MIN_CONTACTS`] contacts if it would start to
/// overlap first. Returns the bound-pose transform and the docking axis.
fn place_ligand<R: Rng>(
    rng: &mut R,
    lig: &[Vec3],
    rec: &[Vec3],
    target: usize,
) -> Option<(RigidTransform, Vec3)> {
    let dir = random_unit(rng);
    let rot = random_rotation(rng);
    let cl = linalg::centroid(lig);
    let cr = linalg::centroid(rec);
    let extent = |pts: &[Vec3], c: &Vec3| {
        pts.iter()
            .map(|p| linalg::dist2(p, c).sqrt())
            .fold(0.0, f64::max)
    };
    let mut s = extent(lig, &cl) + extent(rec, &cr) + DEFAULT_TAU;
    let mut last_valid = None;
    while s > 0.0 {
        let place = linalg::add(&cr, &linalg::scale(&dir, s));
        let t = RigidTransform::new(rot, linalg::sub(&place, &linalg::mat_vec(&rot, &cl)));
        let (contacts, ni) = contacts_and_overlap(&t.apply_all(lig), rec);
        if ni > MAX_INTERSECTION {
            break;
        }
        if contacts >= MIN_CONTACTS {
            last_valid = Some(t);
            if contacts >= target {
                break;
            }
        }
        s -= 0.25;
    }
    last_valid.map(|t| (t, dir))
}

/// One synthetic pair. The receptor stays in the complex frame; the ligand
/// is written in a random unbound pose and `truth` maps it back.
pub fn generate_pair<R: Rng>(rng: &mut R, id: &str, cfg: &SynthConfig) -> Result<SyntheticPair> {
    for _ in 0..MAX_ATTEMPTS {
        let nr = rng.gen_range(cfg.receptor_size.0..=cfg.receptor_size.1);
        let nl = rng.gen_range(cfg.ligand_size.0..=cfg.ligand_size.1);
        let rec_ca = random_blob(rng, nr)?;
        let lig_ca = random_blob(rng, nl)?;
        let target = rng.gen_range(cfg.contacts.0..=cfg.contacts.1);
        let Some((pose, axis)) = place_ligand(rng, &lig_ca, &rec_ca, target) else {
            continue;
        };
        let mut receptor = residues(rng, &rec_ca, 'A');
        let lig_res = residues(rng, &lig_ca, 'B');
        let mut ligand_bound = ResidueSet::new(lig_res).transformed(&pose.r, &pose.t).residues;

        let lig_bound_ca: Vec<Vec3> = ligand_bound.iter().map(|r| r.ca).collect();
        let pockets = pocket_points(&lig_bound_ca, &rec_ca, DEFAULT_TAU)?;
        let center = linalg::centroid(&pockets.p1);
        assign_types(rng, &mut receptor, &lig_bound_ca, &center, &axis, cfg.interface_radius);
        assign_types(rng, &mut ligand_bound, &rec_ca, &center, &axis, cfg.interface_radius);

        let unbound = random_se3_with(rng, cfg.t_max);
        let ligand_pdb =
            write_backbone_pdb(&ResidueSet::new(ligand_bound).transformed(&unbound.r, &unbound.t));
        let receptor_pdb = write_backbone_pdb(&ResidueSet::new(receptor));
        let data = PairData {
            id: id.to_string(),
            ligand: parse_pdb(&ligand_pdb, None)?,
            receptor: parse_pdb(&receptor_pdb, None)?,
            truth: unbound.inverse(),
        };
        // Constraints are enforced on what a reader of the files will see.
        if !satisfies_constraints(&data.ligand_bound().ca_coords(), &data.receptor.ca_coords()) {
            continue;
        }
        return Ok(SyntheticPair {
            data,
            ligand_pdb,
            receptor_pdb,
        });
    }
    Err(Error::GenerationFailed(MAX_ATTEMPTS))
}

pub fn pair_id(i: usize) -> String {
    format!("pair_{i:04}")
}

/// Splits ids in order: train, then validation, then test.
pub fn make_splits(ids: &[String], cfg: &SynthConfig) -> Splits {
    let n = ids.len();
    // Small sets still get one validation and one test pair when possible.
    let count = |frac: f64| {
        let c = ((n as f64) * frac).round() as usize;
        if frac > 0.0 && n >= 3 { c.max(1) } else { c }
    };
    let n_test = count(cfg.test_fraction);
    let n_val = count(cfg.val_fraction);
    let n_train = n.saturating_sub(n_test + n_val);
    Splits {
        train: ids[..n_train].to_vec(),
        val: ids[n_train..(n_train + n_val).min(n)].to_vec(),
        test: ids[(n_train + n_val).min(n)..].to_vec(),
    }
}

/// Generates `num_pairs` pairs deterministically from `seed`.
pub fn gen_synthetic(num_pairs: usize, seed: u64, cfg: &SynthConfig) -> Result<Vec<SyntheticPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_pairs)
        .map(|i| generate_pair(&mut rng, &pair_id(i), cfg))
        .collect()
}

/// Generates a dataset and writes it under `root`.
pub fn write_synthetic(root: &Path, num_pairs: usize, seed: u64, cfg: &SynthConfig) -> Result<Dataset> {
    let pairs = gen_synthetic(num_pairs, seed, cfg)?;
    for p in &pairs {
        write_pair(root, &p.data.id, &p.ligand_pdb, &p.receptor_pdb, &p.data.truth)?;
    }
    let ids: Vec<String> = pairs.iter().map(|p| p.data.id.clone()).collect();
    let splits = make_splits(&ids, cfg);
    write_splits(root, &splits)?;
    Ok(Dataset {
        root: root.to_path_buf(),
        pairs: pairs.into_iter().map(|p| p.data).collect(),
        splits,
    })
}

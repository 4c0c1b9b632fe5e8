//! Docking quality metrics.

use crate::error::{shape_err, Error, Result};
use crate::linalg::{self, Vec3};
use crate::rigid::{rmsd, superimposed_rmsd};

pub const INTERFACE_CUTOFF: f64 = 8.0;

/// Complex RMSD: Kabsch-superimpose the predicted complex onto the true one
/// and take the RMSD over all residues.
pub fn crmsd(pred: &[Vec3], truth: &[Vec3]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(shape_err(
            "crmsd",
            format!("{} predicted vs {} true residues", pred.len(), truth.len()),
        ));
    }
    superimposed_rmsd(pred, truth)
}

/// Indices of residues of `a` within `cutoff` of any residue of `b`.
pub fn interface_residues(a: &[Vec3], b: &[Vec3], cutoff: f64) -> Vec<usize> {
    let c2 = cutoff * cutoff;
    (0..a.len())
        .filter(|&i| b.iter().any(|q| linalg::dist2(&a[i], q) < c2))
        .collect()
}

/// Interface RMSD: like [`crmsd`] restricted to the residues of either
/// protein lying within `cutoff` of the other protein in the true complex.
pub fn irmsd(
    ligand_pred: &[Vec3],
    receptor_pred: &[Vec3],
    ligand_true: &[Vec3],
    receptor_true: &[Vec3],
    cutoff: f64,
) -> Result<f64> {
    if ligand_pred.len() != ligand_true.len() || receptor_pred.len() != receptor_true.len() {
        return Err(shape_err("irmsd", "predicted and true complexes differ in size"));
    }
    let li = interface_residues(ligand_true, receptor_true, cutoff);
    let ri = interface_residues(receptor_true, ligand_true, cutoff);
    if li.is_empty() || ri.is_empty() {
        return Err(Error::EmptyInterface { cutoff });
    }
    let pick = |xs: &[Vec3], idx: &[usize]| idx.iter().map(|&i| xs[i]).collect::<Vec<_>>();
    let mut p = pick(ligand_pred, &li);
    p.extend(pick(receptor_pred, &ri));
    let mut t = pick(ligand_true, &li);
    t.extend(pick(receptor_true, &ri));
    if p.len() < 3 {
        // Too few points to define a superimposition; report plain RMSD.
        return rmsd(&p, &t);
    }
    superimposed_rmsd(&p, &t)
}

/// Ligand RMSD with the receptor held fixed and no superimposition.
pub fn ligand_rmsd(pred: &[Vec3], truth: &[Vec3]) -> Result<f64> {
    rmsd(pred, truth)
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

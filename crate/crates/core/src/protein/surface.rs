//! Surface-awareness node features: the norm of the softmax-weighted mean of
//! neighbor displacement vectors, normalized by the weighted mean distance.
//! Buried points see displacements from all directions that cancel (value
//! near 0); points on a flat surface see a half-space (value near 2/π).

use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};

pub const SURFACE_LAMBDAS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 30.0];

/// ρ for a single point given its neighbors.
pub fn surface_feature(x: &Vec3, neighbors: &[Vec3], lambda: f64) -> Option<f64> {
    if neighbors.is_empty() {
        return None;
    }
    let d2: Vec<f64> = neighbors.iter().map(|p| linalg::dist2(x, p)).collect();
    // Softmax of −d²/λ, shifted by the nearest neighbor for stability.
    let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = d2.iter().map(|d| (-(d - min) / lambda).exp()).collect();
    let z: f64 = w.iter().sum();

    let mut num = [0.0; 3];
    let mut den = 0.0;
    for ((p, &wi), &di) in neighbors.iter().zip(&w).zip(&d2) {
        let wi = wi / z;
        num = linalg::add(&num, &linalg::scale(&linalg::sub(x, p), wi));
        den += wi * di.sqrt();
    }
    if den == 0.0 {
        // Every neighbor coincides with x.
        return Some(0.0);
    }
    Some((linalg::norm(&num) / den).clamp(0.0, 1.0))
}

/// One row of `lambdas.len()` features per point; `neighbors[i]` lists the
/// indices of point `i`'s neighborhood.
pub fn surface_features(
    points: &[Vec3],
    neighbors: &[Vec<usize>],
    lambdas: &[f64],
) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .zip(neighbors)
        .enumerate()
        .map(|(i, (x, nb))| {
            let pts: Vec<Vec3> = nb.iter().map(|&j| points[j]).collect();
            lambdas
                .iter()
                .map(|&l| surface_feature(x, &pts, l).ok_or(Error::IsolatedNode(i)))
                .collect()
        })
        .collect()
}

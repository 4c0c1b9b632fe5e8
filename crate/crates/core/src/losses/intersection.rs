//! Smooth protein surface function and the non-intersection penalty.

use crate::autodiff::Var;
use crate::error::Result;
use crate::linalg::{self, Vec3};

pub const DEFAULT_GAMMA: f64 = 10.0;
pub const DEFAULT_SIGMA: f64 = 25.0;

/// `G(x) = −σ ln Σᵢ exp(−‖x − xᵢ‖²/σ)`, evaluated stably. Points with
/// `G < γ` are inside the cloud.
pub fn surface_g(x: &Vec3, cloud: &[Vec3], sigma: f64) -> f64 {
    let terms: Vec<f64> = cloud.iter().map(|p| -linalg::dist2(x, p) / sigma).collect();
    -sigma * crate::autodiff::logsumexp(&terms)
}

/// Mean hinge `max(0, γ − G)` of each cloud's points against the other
/// cloud's surface, summed over both directions.
pub fn intersection_loss(x1: &[Vec3], x2: &[Vec3], gamma: f64, sigma: f64) -> f64 {
    let side = |pts: &[Vec3], cloud: &[Vec3]| {
        pts.iter()
            .map(|p| (gamma - surface_g(p, cloud, sigma)).max(0.0))
            .sum::<f64>()
            / pts.len().max(1) as f64
    };
    side(x1, x2) + side(x2, x1)
}

/// `G` of every row of `points` against the rows of `cloud`: `m×1`.
pub fn surface_g_tape<'t>(points: Var<'t>, cloud: Var<'t>, sigma: f64) -> Result<Var<'t>> {
    Ok(points
        .sq_dist(cloud)?
        .scale(-1.0 / sigma)
        .logsumexp_rows()
        .scale(-sigma))
}

pub fn intersection_loss_tape<'t>(
    x1: Var<'t>,
    x2: Var<'t>,
    gamma: f64,
    sigma: f64,
) -> Result<Var<'t>> {
    let side = |pts: Var<'t>, cloud: Var<'t>| -> Result<Var<'t>> {
        Ok(surface_g_tape(pts, cloud, sigma)?
            .neg()
            .add_scalar(gamma)
            .relu()
            .mean())
    };
    side(x1, x2)?.add(side(x2, x1)?)
}

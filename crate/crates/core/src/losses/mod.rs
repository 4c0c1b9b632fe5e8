//! Training objectives: ligand coordinate MSE, optimal-transport pocket
//! alignment and the non-intersection penalty.

mod emd;
mod intersection;
mod pocket;

pub use emd::{emd_solve, TransportPlan};
pub use intersection::{
    intersection_loss, intersection_loss_tape, surface_g, surface_g_tape, DEFAULT_GAMMA,
    DEFAULT_SIGMA,
};
pub use pocket::{ot_cost, ot_pocket_loss, pocket_points, PocketPoints, DEFAULT_TAU};

use serde::{Deserialize, Serialize};

use crate::autodiff::Var;
use crate::error::{shape_err, Result};

/// Term weights and surface-function parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub mse: f64,
    pub ot: f64,
    pub intersection: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            mse: 1.0,
            ot: 1.0,
            intersection: 1.0,
            gamma: DEFAULT_GAMMA,
            sigma: DEFAULT_SIGMA,
        }
    }
}

/// `(1/n) Σ ‖x̃ᵢ − xᵢ*‖²` over rows.
pub fn mse_loss<'t>(pred: Var<'t>, truth: Var<'t>) -> Result<Var<'t>> {
    if pred.dims() != truth.dims() {
        return Err(shape_err("mse", format!("{:?} vs {:?}", pred.dims(), truth.dims())));
    }
    let n = pred.dims().0.max(1) as f64;
    Ok(pred.sub(truth)?.row_sq_norm().sum().scale(1.0 / n))
}

/// The individual terms and their weighted sum.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms<'t> {
    pub mse: Var<'t>,
    pub ot: Var<'t>,
    pub intersection: Var<'t>,
    pub total: Var<'t>,
}

impl LossTerms<'_> {
    /// `[mse, ot, intersection, total]` as plain numbers.
    pub fn values(&self) -> [f64; 4] {
        let v = |x: Var<'_>| x.item().unwrap_or(f64::NAN);
        [v(self.mse), v(self.ot), v(self.intersection), v(self.total)]
    }
}

/// Weighted total of the three objectives.
///
/// `ligand_pred` is the transformed ligand, `ligand_true` its bound pose,
/// `receptor` the (fixed) receptor; `y_*` are keypoints and `pockets` the
/// pocket points in the frames the keypoints live in.
#[allow(clippy::too_many_arguments)]
pub fn total_loss<'t>(
    ligand_pred: Var<'t>,
    ligand_true: Var<'t>,
    receptor: Var<'t>,
    y_ligand: Var<'t>,
    y_receptor: Var<'t>,
    pockets: &PocketPoints,
    w: &LossWeights,
) -> Result<LossTerms<'t>> {
    let mse = mse_loss(ligand_pred, ligand_true)?;
    let (ot, _) = ot_pocket_loss(y_ligand, y_receptor, pockets)?;
    let intersection = intersection_loss_tape(ligand_pred, receptor, w.gamma, w.sigma)?;
    let total = mse
        .scale(w.mse)
        .add(ot.scale(w.ot))?
        .add(intersection.scale(w.intersection))?;
    Ok(LossTerms {
        mse,
        ot,
        intersection,
        total,
    })
}

//! Binding-pocket points and the optimal-transport keypoint loss.

use crate::autodiff::Var;
use crate::error::{shape_err, Error, Result};
use crate::linalg::{self, Vec3};
use crate::rigid::RigidTransform;
use crate::tensor::Tensor;

use super::emd::{emd_solve, TransportPlan};

pub const DEFAULT_TAU: f64 = 8.0;

/// Midpoints of cross-protein residue pairs, expressed in each protein's
/// own frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PocketPoints {
    pub p1: Vec<Vec3>,
    pub p2: Vec<Vec3>,
    /// `(i, j)` residue index pairs, row-major over `(i, j)`.
    pub pairs: Vec<(usize, usize)>,
}

impl PocketPoints {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Moves each side with its protein's rigid motion.
    pub fn moved(&self, t1: &RigidTransform, t2: &RigidTransform) -> Self {
        Self {
            p1: t1.apply_all(&self.p1),
            p2: t2.apply_all(&self.p2),
            pairs: self.pairs.clone(),
        }
    }
}

/// All pairs `(i, j)` with `‖x1ᵢ − x2ⱼ‖ < tau`, as midpoints, from bound-pose
/// coordinates.
pub fn pocket_points(x1: &[Vec3], x2: &[Vec3], tau: f64) -> Result<PocketPoints> {
    let mut mids = Vec::new();
    let mut pairs = Vec::new();
    let tau2 = tau * tau;
    for (i, a) in x1.iter().enumerate() {
        for (j, b) in x2.iter().enumerate() {
            if linalg::dist2(a, b) < tau2 {
                mids.push(linalg::scale(&linalg::add(a, b), 0.5));
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoContact { tau });
    }
    Ok(PocketPoints {
        p1: mids.clone(),
        p2: mids,
        pairs,
    })
}

/// `C[s][k] = ‖y1ₖ − p1ₛ‖² + ‖y2ₖ − p2ₛ‖²` as an `S×K` value.
pub fn ot_cost<'t>(y1: Var<'t>, y2: Var<'t>, pockets: &PocketPoints) -> Result<Var<'t>> {
    if pockets.is_empty() {
        return Err(Error::NoContact { tau: DEFAULT_TAU });
    }
    if y1.dims() != y2.dims() || y1.dims().1 != 3 {
        return Err(shape_err("ot_cost", format!("{:?} vs {:?}", y1.dims(), y2.dims())));
    }
    let tape = y1.tape();
    let p1 = tape.constant(Tensor::from_points(&pockets.p1));
    let p2 = tape.constant(Tensor::from_points(&pockets.p2));
    p1.sq_dist(y1)?.add(p2.sq_dist(y2)?)
}

/// `⟨T*, C⟩` with the optimal plan `T*` held constant during differentiation.
pub fn ot_pocket_loss<'t>(
    y1: Var<'t>,
    y2: Var<'t>,
    pockets: &PocketPoints,
) -> Result<(Var<'t>, TransportPlan)> {
    let cost = ot_cost(y1, y2, pockets)?;
    let (s, k) = cost.dims();
    let plan = cost.with_value(|c| emd_solve(c.data(), s, k))?;
    let t = y1.tape().constant(Tensor::matrix(s, k, plan.plan.clone())?);
    Ok((cost.mul(t)?.sum(), plan))
}

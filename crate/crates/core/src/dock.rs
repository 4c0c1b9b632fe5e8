//! Attention keypoints, differentiable Kabsch superimposition and the full
//! docking prediction.

use crate::autodiff::{Tape, Var};
use crate::error::{shape_err, Error, Result};
use crate::iegmn::Model;
use crate::linalg::{self, Vec3};
use crate::params::Bound;
use crate::protein::ProteinGraph;
use crate::rigid::{RigidTransform, DEGENERATE_RATIO};
use crate::tensor::Tensor;

/// Keypoints `Y` (`K×3`) and attention `α` (`n×K`, columns sum to one).
#[derive(Debug, Clone, Copy)]
pub struct Keypoints<'t> {
    pub y: Var<'t>,
    pub attention: Var<'t>,
}

/// `K` attention-weighted averages of the rows of `z`. Head `k` scores node
/// `i` by `hᵢᵀ W′ₖ c / √d`, with `c` the mean of a LeakyReLU-activated
/// linear map of the other protein's features.
pub fn keypoints<'t>(
    model: &Model,
    bp: &Bound<'t, '_>,
    z: Var<'t>,
    h: Var<'t>,
    h_other: Var<'t>,
) -> Result<Keypoints<'t>> {
    let d = model.config.hidden_dim;
    let heads = model.config.heads;
    if heads == 0 {
        return Err(Error::Config("keypoint heads must be at least 1".into()));
    }
    if h.dims().1 != d || h_other.dims().1 != d || z.dims().0 != h.dims().0 {
        return Err(shape_err(
            "keypoints",
            format!("z {:?}, h {:?}, h_other {:?}", z.dims(), h.dims(), h_other.dims()),
        ));
    }
    let c = h_other
        .matmul(bp.get("keypoints.phi.w")?)?
        .add_row(bp.get("keypoints.phi.b")?)?
        .leaky_relu(model.config.leaky_slope)
        .mean_rows();
    let v = bp
        .get("keypoints.heads")?
        .matmul(c.transpose())?
        .reshape(heads, d)?;
    let logits = h.matmul(v.transpose())?.scale(1.0 / (d as f64).sqrt());
    let attention = logits.softmax_cols();
    Ok(Keypoints {
        y: attention.transpose().matmul(z)?,
        attention,
    })
}

/// Rotation (`3×3`) and translation (`1×3`) recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct TapeTransform<'t> {
    pub r: Var<'t>,
    pub t: Var<'t>,
}

impl<'t> TapeTransform<'t> {
    /// Maps the rows of an `n×3` value by `x ↦ R x + t`.
    pub fn apply(&self, x: Var<'t>) -> Result<Var<'t>> {
        x.matmul(self.r.transpose())?.add_row(self.t)
    }

    pub fn value(&self) -> RigidTransform {
        let (r, t) = (self.r.value(), self.t.value());
        let mut out = RigidTransform::identity();
        for i in 0..3 {
            for j in 0..3 {
                out.r[i][j] = r.get(i, j);
            }
            out.t[i] = t.data()[i];
        }
        out
    }
}

/// Differentiable Kabsch: the proper rigid motion best mapping the rows of
/// `y1` onto the rows of `y2`.
pub fn kabsch_tape<'t>(y1: Var<'t>, y2: Var<'t>) -> Result<TapeTransform<'t>> {
    let (k, c) = y1.dims();
    if c != 3 || y2.dims() != (k, 3) || k == 0 {
        return Err(shape_err(
            "kabsch",
            format!("{:?} vs {:?}", y1.dims(), y2.dims()),
        ));
    }
    let tape = y1.tape();
    let mu1 = y1.mean_rows();
    let mu2 = y2.mean_rows();
    let c1 = y1.add_row(mu1.neg())?;
    let c2 = y2.add_row(mu2.neg())?;
    let a = c2.transpose().matmul(c1)?;
    let svd = a.svd3()?;
    let s = svd.s.value();
    let s = [s.data()[0], s.data()[1], s.data()[2]];
    if !(s[1] >= DEGENERATE_RATIO * s[0]) || s[0] == 0.0 {
        return Err(Error::DegenerateKabsch(s));
    }
    let u = crate::autodiff::to_mat3(&svd.u.value());
    let v = crate::autodiff::to_mat3(&svd.v.value());
    let sign = if linalg::det(&linalg::mat_mul(&u, &linalg::transpose(&v))) < 0.0 {
        -1.0
    } else {
        1.0
    };
    let mut diag = Tensor::identity(3);
    diag.set(2, 2, sign);
    let r = svd
        .u
        .matmul(tape.constant(diag))?
        .matmul(svd.v.transpose())?;
    let t = mu2.sub(mu1.matmul(r.transpose())?)?;
    Ok(TapeTransform { r, t })
}

/// Everything the docking head produces for one pair, on a tape.
#[derive(Debug, Clone, Copy)]
pub struct DockOutput<'t> {
    pub transform: TapeTransform<'t>,
    /// Ligand and receptor keypoints in the input frames (`K×3`).
    pub y_ligand: Var<'t>,
    pub y_receptor: Var<'t>,
    pub attn_ligand: Var<'t>,
    pub attn_receptor: Var<'t>,
}

/// Full docking forward pass. Both proteins are centered before entering the
/// network and the offsets are restored on the keypoints, which the
/// translation equivariance of every stage makes exact.
pub fn dock_on_tape<'t>(
    model: &Model,
    bp: &Bound<'t, '_>,
    tape: &'t Tape,
    ligand: &ProteinGraph,
    receptor: &ProteinGraph,
) -> Result<DockOutput<'t>> {
    let cl = ligand.centroid();
    let cr = receptor.centroid();
    let gl = ligand.translated(&linalg::scale(&cl, -1.0));
    let gr = receptor.translated(&linalg::scale(&cr, -1.0));
    let (sl, sr) = model.forward(bp, tape, &gl, &gr)?;
    let kl = keypoints(model, bp, sl.z, sl.h, sr.h)?;
    let kr = keypoints(model, bp, sr.z, sr.h, sl.h)?;
    let yl = kl.y.add_row(tape.constant(Tensor::from_points(&[cl])))?;
    let yr = kr.y.add_row(tape.constant(Tensor::from_points(&[cr])))?;
    Ok(DockOutput {
        transform: kabsch_tape(yl, yr)?,
        y_ligand: yl,
        y_receptor: yr,
        attn_ligand: kl.attention,
        attn_receptor: kr.attention,
    })
}

/// Predicted docking with plain values.
#[derive(Debug, Clone, PartialEq)]
pub struct DockPrediction {
    pub transform: RigidTransform,
    pub keypoints_ligand: Vec<Vec3>,
    pub keypoints_receptor: Vec<Vec3>,
}

/// Rigid transform placing `ligand` against `receptor`.
pub fn predict_dock(
    model: &Model,
    ligand: &ProteinGraph,
    receptor: &ProteinGraph,
) -> Result<DockPrediction> {
    let tape = Tape::new();
    let bp = model.params.bind(&tape, false);
    let out = dock_on_tape(model, &bp, &tape, ligand, receptor)?;
    Ok(DockPrediction {
        transform: out.transform.value(),
        keypoints_ligand: out.y_ligand.value().points(),
        keypoints_receptor: out.y_receptor.value().points(),
    })
}

pub fn apply_transform(t: &RigidTransform, x: &[Vec3]) -> Vec<Vec3> {
    t.apply_all(x)
}

//! Rigid transforms, random SE(3) sampling and plain (non-differentiable)
//! Kabsch superimposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{self, Mat3, Vec3, IDENTITY};

pub const TRANSFORM_CONVENTION: &str = "y = R x + t, Å";

/// Relative threshold on the second singular value below which a keypoint
/// configuration is rejected as degenerate.
pub const DEGENERATE_RATIO: f64 = 1e-9;

/// `x ↦ R x + t` with `R ∈ SO(3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub r: Mat3,
    pub t: Vec3,
}

#[derive(Serialize, Deserialize)]
struct TransformJson {
    #[serde(rename = "R")]
    r: Mat3,
    t: Vec3,
    #[serde(default)]
    convention: Option<String>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(r: Mat3, t: Vec3) -> Self {
        Self { r, t }
    }

    pub fn identity() -> Self {
        Self {
            r: IDENTITY,
            t: [0.0; 3],
        }
    }

    pub fn translation(t: Vec3) -> Self {
        Self { r: IDENTITY, t }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        linalg::add(&linalg::mat_vec(&self.r, x), &self.t)
    }

    pub fn apply_all(&self, xs: &[Vec3]) -> Vec<Vec3> {
        xs.iter().map(|x| self.apply(x)).collect()
    }

    /// `x ↦ Rᵀ (x − t)`.
    pub fn inverse(&self) -> Self {
        let rt = linalg::transpose(&self.r);
        Self {
            r: rt,
            t: linalg::scale(&linalg::mat_vec(&rt, &self.t), -1.0),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            r: linalg::mat_mul(&self.r, &other.r),
            t: self.apply(&other.t),
        }
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from 1.
    pub fn rotation_error(&self) -> f64 {
        let rtr = linalg::mat_mul(&linalg::transpose(&self.r), &self.r);
        let mut err = (linalg::det(&self.r) - 1.0).abs();
        for i in 0..3 {
            for j in 0..3 {
                err = err.max((rtr[i][j] - IDENTITY[i][j]).abs());
            }
        }
        err
    }

    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.r[i][j] - other.r[i][j]).abs());
            }
            d = d.max((self.t[i] - other.t[i]).abs());
        }
        d
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TransformJson {
            r: self.r,
            t: self.t,
            convention: Some(TRANSFORM_CONVENTION.to_string()),
        })
        .expect("transform serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: TransformJson = serde_json::from_value(v.clone())?;
        if j.r.iter().flatten().chain(&j.t).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("transform"));
        }
        Ok(Self { r: j.r, t: j.t })
    }
}

/// Uniformly distributed rotation (Shoemake's unit-quaternion method).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    linalg::quat_to_mat([
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ])
}

/// Uniform rotation and translation components uniform in `[−t_max, t_max]`.
pub fn random_se3_with<R: Rng>(rng: &mut R, t_max: f64) -> RigidTransform {
    let r = random_rotation(rng);
    let t = if t_max > 0.0 {
        [
            rng.gen_range(-t_max..=t_max),
            rng.gen_range(-t_max..=t_max),
            rng.gen_range(-t_max..=t_max),
        ]
    } else {
        [0.0; 3]
    };
    RigidTransform { r, t }
}

pub const DEFAULT_T_MAX: f64 = 30.0;

/// Deterministic random rigid motion for a seed.
pub fn random_se3(seed: u64) -> RigidTransform {
    random_se3_with(&mut ChaCha8Rng::seed_from_u64(seed), DEFAULT_T_MAX)
}

/// Proper rigid transform minimizing `Σ ‖R y1ₖ + t − y2ₖ‖²`.
pub fn kabsch(y1: &[Vec3], y2: &[Vec3]) -> Result<RigidTransform> {
    if y1.len() != y2.len() || y1.is_empty() {
        return Err(shape_err(
            "kabsch",
            format!("{} vs {} points", y1.len(), y2.len()),
        ));
    }
    let (c1, c2) = (linalg::centroid(y1), linalg::centroid(y2));
    // A = Σ (y2 − c2)(y1 − c1)ᵀ
    let mut a = [[0.0; 3]; 3];
    for (p, q) in y1.iter().zip(y2) {
        let (p, q) = (linalg::sub(p, &c1), linalg::sub(q, &c2));
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += q[i] * p[j];
            }
        }
    }
    let svd = linalg::svd3(&a)?;
    if !(svd.s[1] >= DEGENERATE_RATIO * svd.s[0]) || svd.s[0] == 0.0 {
        return Err(Error::DegenerateKabsch(svd.s));
    }
    let uvt = linalg::mat_mul(&svd.u, &linalg::transpose(&svd.v));
    let d = if linalg::det(&uvt) < 0.0 { -1.0 } else { 1.0 };
    let mut u = svd.u;
    for row in u.iter_mut() {
        row[2] *= d;
    }
    let r = linalg::mat_mul(&u, &linalg::transpose(&svd.v));
    let t = linalg::sub(&c2, &linalg::mat_vec(&r, &c1));
    Ok(RigidTransform { r, t })
}

/// Root-mean-square distance between matched point lists.
pub fn rmsd(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(shape_err("rmsd", format!("{} vs {} points", a.len(), b.len())));
    }
    let s: f64 = a.iter().zip(b).map(|(p, q)| linalg::dist2(p, q)).sum();
    Ok((s / a.len() as f64).sqrt())
}

/// RMSD after optimal superimposition of `a` onto `b`.
pub fn superimposed_rmsd(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    let t = kabsch(a, b)?;
    rmsd(&t.apply_all(a), b)
}

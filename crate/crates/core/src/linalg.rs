//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices and a
//! Jacobi-based 3×3 SVD.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

pub fn normalize(a: &Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn det(m: &Mat3) -> f64 {
    dot(&m[0], &cross(&m[1], &m[2]))
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let mut c = [0.0; 3];
    for p in points {
        c = add(&c, p);
    }
    scale(&c, 1.0 / points.len().max(1) as f64)
}

/// Rotation from a unit quaternion `(w, x, y, z)`.
pub fn quat_to_mat(q: [f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Rotation by `angle` radians about a unit `axis`.
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let a = normalize(axis);
    let (s, c) = (angle / 2.0).sin_cos();
    quat_to_mat([c, a[0] * s, a[1] * s, a[2] * s])
}

/// `A = U · diag(S) · Vᵀ` with singular values in descending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd3 {
    pub u: Mat3,
    pub s: Vec3,
    pub v: Mat3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> Mat3 {
        let mut us = self.u;
        for row in us.iter_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x *= self.s[j];
            }
        }
        mat_mul(&us, &transpose(&self.v))
    }
}

const MAX_SWEEPS: usize = 30;

/// SVD of a 3×3 matrix.
///
/// Cyclic Jacobi diagonalization of `AᵀA`, carried out one-sidedly: each
/// rotation is derived from the Gram entries of the current columns of `A·V`
/// and applied to those columns directly, so `AᵀA` is never formed. After
/// convergence the column norms are the singular values and the normalized
/// columns are `U`.
pub fn svd3(a: &Mat3) -> Result<Svd3> {
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("svd3 input"));
    }
    // Column-major working copy: w[j] is column j of A·V.
    let mut w = transpose(a);
    let mut v_cols = IDENTITY;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha = dot(&w[p], &w[p]);
            let beta = dot(&w[q], &w[q]);
            let gamma = dot(&w[p], &w[q]);
            if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for cols in [&mut w, &mut v_cols] {
                let (cp, cq) = (cols[p], cols[q]);
                for i in 0..3 {
                    cols[p][i] = c * cp[i] - s * cq[i];
                    cols[q][i] = s * cp[i] + c * cq[i];
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order = [0usize, 1, 2];
    let norms = [norm(&w[0]), norm(&w[1]), norm(&w[2])];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let v_sorted = [v_cols[order[0]], v_cols[order[1]], v_cols[order[2]]];
    let w_sorted = [w[order[0]], w[order[1]], w[order[2]]];
    let s_top = norms[order[0]];
    let tiny = 1e-12 * s_top.max(f64::MIN_POSITIVE);

    let mut u_cols = [[0.0; 3]; 3];
    let mut s = [0.0; 3];
    for j in 0..3 {
        let nj = norms[order[j]];
        if nj > tiny {
            let mut col = scale(&w_sorted[j], 1.0 / nj);
            // Re-orthogonalize against previously fixed columns.
            for prev in u_cols.iter().take(j) {
                let d = dot(&col, prev);
                col = sub(&col, &scale(prev, d));
            }
            u_cols[j] = normalize(&col);
            s[j] = nj;
        } else {
            u_cols[j] = match j {
                0 => [1.0, 0.0, 0.0],
                1 => any_orthogonal(&u_cols[0]),
                _ => cross(&u_cols[0], &u_cols[1]),
            };
            let proj = dot(&u_cols[j], &w_sorted[j]);
            if proj < 0.0 {
                u_cols[j] = scale(&u_cols[j], -1.0);
            }
            s[j] = proj.abs();
        }
    }

    Ok(Svd3 {
        u: transpose(&u_cols),
        s,
        v: transpose(&v_sorted),
    })
}

fn any_orthogonal(a: &Vec3) -> Vec3 {
    let pick = if a[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    normalize(&cross(a, &pick))
}

//! Per-residue orthonormal frames from backbone geometry.

use super::residue::ResidueSet;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3};

/// Residue basis: `u` points CA→N, `n` is the normal of the (CA→N, CA→C)
/// plane, `v = n × u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub n: Vec3,
    pub u: Vec3,
    pub v: Vec3,
}

impl LocalFrame {
    /// Rows `(n, u, v)`: multiplying a world vector by this expresses it in
    /// the frame.
    pub fn basis(&self) -> Mat3 {
        [self.n, self.u, self.v]
    }

    pub fn project(&self, w: &Vec3) -> Vec3 {
        [
            linalg::dot(&self.n, w),
            linalg::dot(&self.u, w),
            linalg::dot(&self.v, w),
        ]
    }
}

const MIN_CROSS_NORM: f64 = 1e-6;

pub fn frame_from_backbone(ca: &Vec3, n_atom: &Vec3, c_atom: &Vec3) -> Option<LocalFrame> {
    let u = linalg::sub(n_atom, ca);
    let t = linalg::sub(c_atom, ca);
    let (lu, lt) = (linalg::norm(&u), linalg::norm(&t));
    if lu == 0.0 || lt == 0.0 {
        return None;
    }
    let u = linalg::scale(&u, 1.0 / lu);
    let t = linalg::scale(&t, 1.0 / lt);
    let ut = linalg::cross(&u, &t);
    let len = linalg::norm(&ut);
    if !(len > MIN_CROSS_NORM) {
        return None;
    }
    let n = linalg::scale(&ut, 1.0 / len);
    let v = linalg::cross(&n, &u);
    Some(LocalFrame { n, u, v })
}

pub fn local_frames(rs: &ResidueSet) -> Result<Vec<LocalFrame>> {
    rs.residues
        .iter()
        .map(|r| {
            frame_from_backbone(&r.ca, &r.n, &r.c).ok_or_else(|| Error::CollinearBackbone {
                residue: r.label(),
            })
        })
        .collect()
}

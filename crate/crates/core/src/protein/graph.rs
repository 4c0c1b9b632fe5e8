//! k-nearest-neighbor residue graphs with rigid-motion-invariant node and
//! edge features.

use log::info;
use serde::Serialize;

use super::frames::{local_frames, LocalFrame};
use super::residue::{ResidueSet, ResidueType};
use super::surface::{surface_features, SURFACE_LAMBDAS};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};

pub const EDGE_FEATURE_DIM: usize = 27;
pub const NUM_RBF: usize = 15;
pub const NUM_SURFACE: usize = SURFACE_LAMBDAS.len();
pub const DEFAULT_K: usize = 10;

/// RBF length scales 1.5^0 .. 1.5^14 (Å).
pub fn rbf_scales() -> [f64; NUM_RBF] {
    std::array::from_fn(|r| 1.5f64.powi(r as i32))
}

pub fn rbf_features(dist: f64) -> [f64; NUM_RBF] {
    let scales = rbf_scales();
    std::array::from_fn(|r| (-(dist * dist) / (2.0 * scales[r] * scales[r])).exp())
}

/// Residue graph with directed edges `src[e] → dst[e]`.
///
/// Edges are grouped by destination in node order; within a group they are
/// sorted by increasing distance (ties by lower source index).
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinGraph {
    pub coords: Vec<Vec3>,
    pub types: Vec<ResidueType>,
    /// Surface features per node, one per entry of [`SURFACE_LAMBDAS`].
    pub surface: Vec<[f64; NUM_SURFACE]>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub edge_features: Vec<[f64; EDGE_FEATURE_DIM]>,
    /// Neighbors per node actually used, `min(k, n - 1)`.
    pub k: usize,
}

impl ProteinGraph {
    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    pub fn centroid(&self) -> Vec3 {
        linalg::centroid(&self.coords)
    }

    /// Same graph with every coordinate shifted; features are unchanged.
    pub fn translated(&self, offset: &Vec3) -> Self {
        let mut g = self.clone();
        for p in &mut g.coords {
            *p = linalg::add(p, offset);
        }
        g
    }

    /// Same graph with coordinates mapped by `x ↦ R x + t`. Invariant
    /// features are carried over unchanged.
    pub fn transformed(&self, rot: &linalg::Mat3, trans: &Vec3) -> Self {
        let mut g = self.clone();
        for p in &mut g.coords {
            *p = linalg::add(&linalg::mat_vec(rot, p), trans);
        }
        g
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Node<'a> {
            index: usize,
            #[serde(rename = "type")]
            kind: &'a str,
            x: Vec3,
            rho: [f64; NUM_SURFACE],
        }
        #[derive(Serialize)]
        struct Edge<'a> {
            src: usize,
            dst: usize,
            f: &'a [f64],
        }
        let nodes: Vec<Node> = (0..self.num_nodes())
            .map(|i| Node {
                index: i,
                kind: self.types[i].name(),
                x: self.coords[i],
                rho: self.surface[i],
            })
            .collect();
        let edges: Vec<Edge> = (0..self.num_edges())
            .map(|e| Edge {
                src: self.src[e],
                dst: self.dst[e],
                f: &self.edge_features[e],
            })
            .collect();
        serde_json::json!({ "nodes": nodes, "edges": edges })
    }
}

/// Indices of the `k` nearest other points of each point, nearest first.
pub fn knn(points: &[Vec3], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (linalg::dist2(&points[i], &points[j]), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Features of edge `j → i`: position of `j` and orientation of `j`'s frame,
/// both expressed in `i`'s frame, then RBF-expanded distance.
pub fn edge_features(
    xi: &Vec3,
    fi: &LocalFrame,
    xj: &Vec3,
    fj: &LocalFrame,
) -> [f64; EDGE_FEATURE_DIM] {
    let mut f = [0.0; EDGE_FEATURE_DIM];
    let d = linalg::sub(xj, xi);
    for (slot, w) in [d, fj.n, fj.u, fj.v].iter().enumerate() {
        f[slot * 3..slot * 3 + 3].copy_from_slice(&fi.project(w));
    }
    f[12..].copy_from_slice(&rbf_features(linalg::norm(&d)));
    f
}

pub fn build_graph(rs: &ResidueSet, k: usize) -> Result<ProteinGraph> {
    let n = rs.len();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let k_eff = k.min(n - 1);
    if k_eff < k {
        info!("protein has {n} residues; using k = {k_eff} instead of {k}");
    }
    let frames = local_frames(rs)?;
    let coords = rs.ca_coords();
    let neighbors = knn(&coords, k_eff);

    let mut src = Vec::with_capacity(n * k_eff);
    let mut dst = Vec::with_capacity(n * k_eff);
    let mut edge_feats = Vec::with_capacity(n * k_eff);
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            src.push(j);
            dst.push(i);
            edge_feats.push(edge_features(&coords[i], &frames[i], &coords[j], &frames[j]));
        }
    }
    let surface = surface_features(&coords, &neighbors, &SURFACE_LAMBDAS)?
        .into_iter()
        .map(|row| std::array::from_fn(|c| row[c]))
        .collect();

    Ok(ProteinGraph {
        coords,
        types: rs.types(),
        surface,
        src,
        dst,
        edge_features: edge_feats,
        k: k_eff,
    })
}

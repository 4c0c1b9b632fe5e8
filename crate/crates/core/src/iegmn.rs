//! Pairwise-independent SE(3)-equivariant graph matching layers.
//!
//! Nodes are rows throughout: coordinates are `n×3`, features `n×d`. Each
//! layer mixes intra-graph messages (which see coordinates only through
//! squared distances) with cross-graph attention messages (which see
//! features only), so rigid motions of either graph move its own output
//! coordinates and leave every feature untouched.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::linalg::{self, Vec3};
use crate::params::{Bound, ParamStore};
use crate::protein::{ProteinGraph, DEFAULT_K, EDGE_FEATURE_DIM, NUM_RESIDUE_TYPES, NUM_SURFACE};
use crate::rigid::{random_se3_with, RigidTransform};
use crate::tensor::Tensor;

const LN_EPS: f64 = 1e-5;

/// Architecture hyperparameters. Serialized into checkpoints so a model can
/// be rebuilt without any other configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Width `d` of node feature embeddings.
    pub hidden_dim: usize,
    /// Width of the residue-type embedding.
    pub embed_dim: usize,
    pub layers: usize,
    /// Number of keypoints `K`.
    pub heads: usize,
    /// Neighbors per node in the residue graph.
    pub knn: usize,
    pub leaky_slope: f64,
    /// Weight of the original coordinates in each coordinate update.
    pub eta: f64,
    /// Weight of the new features in each feature update.
    pub beta: f64,
    /// Length scale (Å²) of the distance term in intra-graph messages.
    pub sigma_msg: f64,
    pub layer_norm: bool,
    /// Layers after the first reuse one parameter set.
    pub share_layers: bool,
    /// Average instead of summing neighbor contributions to coordinates.
    pub coord_mean: bool,
    /// Deliberately broken variant whose attention logits depend on raw
    /// coordinates. Only for negative-control tests.
    #[doc(hidden)]
    #[serde(skip)]
    pub cross_uses_coords: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            embed_dim: 32,
            layers: 5,
            heads: 50,
            knn: DEFAULT_K,
            leaky_slope: 0.01,
            eta: 0.25,
            beta: 0.5,
            sigma_msg: 30.0,
            layer_norm: true,
            share_layers: false,
            coord_mean: false,
            cross_uses_coords: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.hidden_dim == 0 || self.embed_dim == 0 {
            return bad("hidden_dim and embed_dim must be positive");
        }
        if self.layers == 0 {
            return bad("at least one layer is required");
        }
        if self.heads == 0 {
            return bad("heads must be at least 1");
        }
        if self.knn == 0 {
            return bad("knn must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.eta) || !(0.0..=1.0).contains(&self.beta) {
            return bad("eta and beta must lie in [0, 1]");
        }
        if !(self.sigma_msg > 0.0) {
            return bad("sigma_msg must be positive");
        }
        if !(self.leaky_slope >= 0.0) {
            return bad("leaky_slope must be non-negative");
        }
        Ok(())
    }

    /// Width of the invariant per-node input features: type embedding plus
    /// surface features.
    pub fn node_feature_width(&self) -> usize {
        self.embed_dim + NUM_SURFACE
    }

    fn layer_param_sets(&self) -> usize {
        if self.share_layers {
            self.layers.min(2)
        } else {
            self.layers
        }
    }
}

/// Coordinates and features of one graph after some number of layers.
#[derive(Debug, Clone, Copy)]
pub struct GraphState<'t> {
    pub z: Var<'t>,
    pub h: Var<'t>,
}

/// Per-graph constants recorded once per forward pass.
#[derive(Debug, Clone)]
pub struct EncodedGraph<'t> {
    pub n: usize,
    pub x0: Var<'t>,
    /// Invariant node features `n × node_feature_width`.
    pub feats: Var<'t>,
    pub src: Rc<[usize]>,
    pub dst: Rc<[usize]>,
    pub edge_feats: Var<'t>,
    /// `1/deg(i)` per node (0 for isolated nodes), `n×1`.
    pub inv_deg: Var<'t>,
    pub ones: Var<'t>,
}

/// Learnable model: equivariant layers plus keypoint heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::matrix(rows, cols, data).expect("sized")
}

fn linear<'t>(x: Var<'t>, w: Var<'t>, b: Var<'t>) -> Result<Var<'t>> {
    x.matmul(w)?.add_row(b)
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.hidden_dim;
        let fw = config.node_feature_width();
        let mut p = ParamStore::new();

        p.insert("iegmn.embed.table", glorot(&mut rng, NUM_RESIDUE_TYPES, config.embed_dim));
        p.insert("iegmn.input.w", glorot(&mut rng, fw, d));
        p.insert("iegmn.input.b", Tensor::zeros(1, d));
        for l in 0..config.layer_param_sets() {
            let pre = format!("iegmn.layer{l}");
            let edge_in = 2 * d + 1 + EDGE_FEATURE_DIM;
            p.insert(format!("{pre}.edge.w1"), glorot(&mut rng, edge_in, d));
            p.insert(format!("{pre}.edge.b1"), Tensor::zeros(1, d));
            p.insert(format!("{pre}.edge.w2"), glorot(&mut rng, d, d));
            p.insert(format!("{pre}.edge.b2"), Tensor::zeros(1, d));
            p.insert(format!("{pre}.node.w1"), glorot(&mut rng, 3 * d + fw, d));
            p.insert(format!("{pre}.node.b1"), Tensor::zeros(1, d));
            p.insert(format!("{pre}.node.w2"), glorot(&mut rng, d, d));
            p.insert(format!("{pre}.node.b2"), Tensor::zeros(1, d));
            p.insert(format!("{pre}.coord.w1"), glorot(&mut rng, d, d));
            p.insert(format!("{pre}.coord.b1"), Tensor::zeros(1, d));
            // Zero output layer: a fresh model leaves coordinates unchanged
            // apart from the skip connection.
            p.insert(format!("{pre}.coord.w2"), Tensor::zeros(d, 1));
            p.insert(format!("{pre}.coord.b2"), Tensor::zeros(1, 1));
            p.insert(format!("{pre}.cross.w"), glorot(&mut rng, d, d));
            p.insert(format!("{pre}.attn.q"), glorot(&mut rng, d, d));
            p.insert(format!("{pre}.attn.k"), glorot(&mut rng, d, d));
            if config.layer_norm {
                p.insert(format!("{pre}.ln.gain"), Tensor::filled(1, d, 1.0));
                p.insert(format!("{pre}.ln.bias"), Tensor::zeros(1, d));
            }
        }
        p.insert("keypoints.phi.w", glorot(&mut rng, d, d));
        p.insert("keypoints.phi.b", Tensor::zeros(1, d));
        let heads: Vec<f64> = (0..config.heads)
            .flat_map(|_| glorot(&mut rng, d, d).into_data())
            .collect();
        p.insert(
            "keypoints.heads",
            Tensor::matrix(config.heads * d, d, heads).expect("sized"),
        );
        Ok(Self { config, params: p })
    }

    /// Adds uniform noise in `[−scale, scale]` to every parameter.
    pub fn perturb(&mut self, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in self.params.tensors_mut() {
            for x in t.data_mut() {
                *x += rng.gen_range(-scale..=scale);
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let meta = serde_json::json!({ "model": self.config });
        self.params.to_checkpoint(meta)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let cfg = ckpt
            .metadata
            .get("model")
            .ok_or_else(|| Error::Checkpoint("metadata lacks model configuration".into()))?;
        let config: ModelConfig = serde_json::from_value(cfg.clone())?;
        let mut model = Model::new(config, 0)?;
        model.params.load_from(ckpt)?;
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    fn layer_prefix(&self, l: usize) -> String {
        let idx = if self.config.share_layers { l.min(1) } else { l };
        format!("iegmn.layer{idx}")
    }

    /// Records a graph's constants and its initial state.
    pub fn encode<'t>(
        &self,
        bp: &Bound<'t, '_>,
        tape: &'t Tape,
        g: &ProteinGraph,
    ) -> Result<(EncodedGraph<'t>, GraphState<'t>)> {
        let n = g.num_nodes();
        if n == 0 {
            return Err(Error::TooFewNodes(0));
        }
        let x0 = tape.constant(Tensor::from_points(&g.coords));
        let types: Rc<[usize]> = g.types.iter().map(|t| t.index()).collect();
        let emb = bp.get("iegmn.embed.table")?.gather_rows(types)?;
        let surf = tape.constant(Tensor::from_rows(
            &g.surface.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        )?);
        let feats = Var::concat_cols(&[emb, surf])?;
        let h0 = linear(feats, bp.get("iegmn.input.w")?, bp.get("iegmn.input.b")?)?;

        let mut deg = vec![0usize; n];
        for &i in &g.dst {
            deg[i] += 1;
        }
        let inv: Vec<f64> = deg
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { 1.0 / c as f64 })
            .collect();
        let edge_rows = g.edge_features.iter().flatten().copied().collect();
        let enc = EncodedGraph {
            n,
            x0,
            feats,
            src: g.src.iter().copied().collect(),
            dst: g.dst.iter().copied().collect(),
            edge_feats: tape.constant(Tensor::matrix(g.num_edges(), EDGE_FEATURE_DIM, edge_rows)?),
            inv_deg: tape.constant(Tensor::matrix(n, 1, inv)?),
            ones: tape.constant(Tensor::filled(n, 1, 1.0)),
        };
        Ok((enc, GraphState { z: x0, h: h0 }))
    }

    fn mlp<'t>(&self, bp: &Bound<'t, '_>, pre: &str, x: Var<'t>) -> Result<Var<'t>> {
        let h = linear(x, bp.get(&format!("{pre}.w1"))?, bp.get(&format!("{pre}.b1"))?)?;
        linear(
            h.leaky_relu(self.config.leaky_slope),
            bp.get(&format!("{pre}.w2"))?,
            bp.get(&format!("{pre}.b2"))?,
        )
    }

    /// Cross-graph attention weights `a[i][j]` from nodes of graph 1 to
    /// nodes of graph 2; rows sum to one.
    pub fn cross_attention<'t>(
        &self,
        bp: &Bound<'t, '_>,
        layer: usize,
        h1: Var<'t>,
        h2: Var<'t>,
    ) -> Result<Var<'t>> {
        let pre = self.layer_prefix(layer);
        let q = h1.matmul(bp.get(&format!("{pre}.attn.q"))?)?;
        let k = h2.matmul(bp.get(&format!("{pre}.attn.k"))?)?;
        Ok(q.matmul(k.transpose())?.softmax_rows())
    }

    /// Intra-graph edge messages, returned per edge (`E×d`) together with
    /// the relative coordinate vectors `x_dst − x_src` (`E×3`).
    fn edge_messages<'t>(
        &self,
        bp: &Bound<'t, '_>,
        pre: &str,
        enc: &EncodedGraph<'t>,
        s: GraphState<'t>,
    ) -> Result<(Var<'t>, Var<'t>)> {
        let h_dst = s.h.gather_rows(enc.dst.clone())?;
        let h_src = s.h.gather_rows(enc.src.clone())?;
        let rel = s
            .z
            .gather_rows(enc.dst.clone())?
            .sub(s.z.gather_rows(enc.src.clone())?)?;
        let dist = rel.row_sq_norm().scale(-1.0 / self.config.sigma_msg).exp();
        let input = Var::concat_cols(&[h_dst, h_src, dist, enc.edge_feats])?;
        Ok((self.mlp(bp, &format!("{pre}.edge"), input)?, rel))
    }

    fn update<'t>(
        &self,
        bp: &Bound<'t, '_>,
        pre: &str,
        enc: &EncodedGraph<'t>,
        s: GraphState<'t>,
        msgs: Var<'t>,
        rel: Var<'t>,
        cross: Var<'t>,
    ) -> Result<GraphState<'t>> {
        let cfg = &self.config;
        let agg = msgs.scatter_add_rows(enc.dst.clone(), enc.n)?.mul_col(enc.inv_deg)?;

        let coef = self.mlp(bp, &format!("{pre}.coord"), msgs)?;
        let mut shift = rel.mul_col(coef)?.scatter_add_rows(enc.dst.clone(), enc.n)?;
        if cfg.coord_mean {
            shift = shift.mul_col(enc.inv_deg)?;
        }
        let z = enc
            .x0
            .scale(cfg.eta)
            .add(s.z.scale(1.0 - cfg.eta))?
            .add(shift)?;

        let node_in = Var::concat_cols(&[s.h, agg, cross, enc.feats])?;
        let fresh = self.mlp(bp, &format!("{pre}.node"), node_in)?;
        let mut h = s.h.scale(1.0 - cfg.beta).add(fresh.scale(cfg.beta))?;
        if cfg.layer_norm {
            let gain = enc.ones.matmul(bp.get(&format!("{pre}.ln.gain"))?)?;
            h = h
                .layer_norm_rows(LN_EPS)
                .mul(gain)?
                .add_row(bp.get(&format!("{pre}.ln.bias"))?)?;
        }
        Ok(GraphState { z, h })
    }

    fn cross_messages<'t>(
        &self,
        bp: &Bound<'t, '_>,
        layer: usize,
        s_to: GraphState<'t>,
        s_from: GraphState<'t>,
    ) -> Result<Var<'t>> {
        let pre = self.layer_prefix(layer);
        let mut a = self.cross_attention(bp, layer, s_to.h, s_from.h)?;
        if self.config.cross_uses_coords {
            let leak = s_to.z.matmul(s_from.z.transpose())?.scale(1e-2);
            a = a.add(leak)?;
        }
        a.matmul(s_from.h.matmul(bp.get(&format!("{pre}.cross.w"))?)?)
    }

    /// One layer applied to both graphs; inputs of both are read before
    /// either is updated.
    pub fn layer_forward<'t>(
        &self,
        bp: &Bound<'t, '_>,
        layer: usize,
        g1: (&EncodedGraph<'t>, GraphState<'t>),
        g2: (&EncodedGraph<'t>, GraphState<'t>),
    ) -> Result<(GraphState<'t>, GraphState<'t>)> {
        let pre = self.layer_prefix(layer);
        let (e1, s1) = g1;
        let (e2, s2) = g2;
        let (m1, r1) = self.edge_messages(bp, &pre, e1, s1)?;
        let (m2, r2) = self.edge_messages(bp, &pre, e2, s2)?;
        let c1 = self.cross_messages(bp, layer, s1, s2)?;
        let c2 = self.cross_messages(bp, layer, s2, s1)?;
        Ok((
            self.update(bp, &pre, e1, s1, m1, r1, c1)?,
            self.update(bp, &pre, e2, s2, m2, r2, c2)?,
        ))
    }

    /// Runs all layers on a graph pair.
    pub fn forward<'t>(
        &self,
        bp: &Bound<'t, '_>,
        tape: &'t Tape,
        g1: &ProteinGraph,
        g2: &ProteinGraph,
    ) -> Result<(GraphState<'t>, GraphState<'t>)> {
        let (e1, mut s1) = self.encode(bp, tape, g1)?;
        let (e2, mut s2) = self.encode(bp, tape, g2)?;
        for l in 0..self.config.layers {
            (s1, s2) = self.layer_forward(bp, l, (&e1, s1), (&e2, s2))?;
        }
        Ok((s1, s2))
    }

    /// Forward pass with frozen parameters, returning plain values
    /// `(Z1, H1, Z2, H2)`.
    pub fn embed_pair(&self, g1: &ProteinGraph, g2: &ProteinGraph) -> Result<[Tensor; 4]> {
        let tape = Tape::new();
        let bp = self.params.bind(&tape, false);
        let (s1, s2) = self.forward(&bp, &tape, g1, g2)?;
        Ok([s1.z.value(), s1.h.value(), s2.z.value(), s2.h.value()])
    }
}

/// Deviations measured by [`check_pairwise_equivariance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivarianceReport {
    /// `max |Φ(Q₁X₁+g₁, …).Z₁ − (Q₁Z₁+g₁)|`.
    pub z1: f64,
    pub z2: f64,
    /// Largest change of any output feature.
    pub h: f64,
    /// Largest output coordinate magnitude, for relative tolerances.
    pub scale: f64,
}

impl EquivarianceReport {
    pub fn max_abs(&self) -> f64 {
        self.z1.max(self.z2).max(self.h)
    }

    pub fn max_relative(&self) -> f64 {
        (self.z1.max(self.z2) / self.scale.max(1.0)).max(self.h)
    }
}

fn max_abs_points(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| (0..3).map(move |i| (p[i] - q[i]).abs()))
        .fold(0.0, f64::max)
}

/// Applies independent random rigid motions to both inputs and compares the
/// outputs with the correspondingly moved original outputs.
pub fn check_pairwise_equivariance(
    model: &Model,
    g1: &ProteinGraph,
    g2: &ProteinGraph,
    seed: u64,
) -> Result<EquivarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t1 = random_se3_with(&mut rng, 30.0);
    let t2 = random_se3_with(&mut rng, 30.0);
    compare_under(model, g1, g2, &t1, &t2)
}

pub(crate) fn compare_under(
    model: &Model,
    g1: &ProteinGraph,
    g2: &ProteinGraph,
    t1: &RigidTransform,
    t2: &RigidTransform,
) -> Result<EquivarianceReport> {
    let [z1, h1, z2, h2] = model.embed_pair(g1, g2)?;
    let [z1m, h1m, z2m, h2m] =
        model.embed_pair(&g1.transformed(&t1.r, &t1.t), &g2.transformed(&t2.r, &t2.t))?;
    let scale = z1
        .data()
        .iter()
        .chain(z2.data())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let moved1 = t1.apply_all(&z1.points());
    let moved2 = t2.apply_all(&z2.points());
    Ok(EquivarianceReport {
        z1: max_abs_points(&z1m.points(), &moved1),
        z2: max_abs_points(&z2m.points(), &moved2),
        h: h1.max_abs_diff(&h1m).max(h2.max_abs_diff(&h2m)),
        scale: scale.max(linalg::norm(&t1.t)).max(linalg::norm(&t2.t)),
    })
}

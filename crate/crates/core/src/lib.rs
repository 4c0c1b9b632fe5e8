//! Rigid protein–protein docking with pairwise SE(3)-equivariant graph
//! matching, attention keypoints and differentiable Kabsch superimposition.

pub mod autodiff;
pub mod checkpoint;
pub mod dock;
pub mod error;
pub mod fsutil;
pub mod iegmn;
pub mod linalg;
pub mod losses;
pub mod params;
pub mod protein;
pub mod rigid;
pub mod tensor;
pub mod train;

pub use dock::{predict_dock, DockPrediction};
pub use error::{Error, Result};
pub use iegmn::{check_pairwise_equivariance, Model, ModelConfig};
pub use protein::{build_graph, parse_pdb, ProteinGraph, ResidueSet};
pub use rigid::{kabsch, random_se3, RigidTransform};
pub use tensor::Tensor;

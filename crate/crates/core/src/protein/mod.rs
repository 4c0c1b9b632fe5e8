//! Protein structure input: PDB parsing, residue frames, k-NN graphs and
//! invariant features.

mod frames;
mod graph;
mod pdb;
mod residue;
mod surface;

pub use frames::{frame_from_backbone, local_frames, LocalFrame};
pub use graph::{
    build_graph, edge_features, knn, rbf_features, rbf_scales, ProteinGraph, DEFAULT_K,
    EDGE_FEATURE_DIM, NUM_RBF, NUM_SURFACE,
};
pub use pdb::{parse_pdb, read_pdb, transform_pdb_text, write_backbone_pdb, write_ca_pdb};
pub use residue::{Residue, ResidueSet, ResidueType, NUM_RESIDUE_TYPES, RESIDUE_NAMES};
pub use surface::{surface_feature, surface_features, SURFACE_LAMBDAS};

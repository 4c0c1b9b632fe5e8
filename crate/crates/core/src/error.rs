use thiserror::Error;

/// Errors produced anywhere in the docking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("gradient check requires a scalar output, got shape {0:?}")]
    NonScalar(Vec<usize>),

    #[error("line {line}: {msg}")]
    PdbParse { line: usize, msg: String },

    #[error("zero valid residues ({skipped} residue(s) skipped for missing backbone atoms)")]
    NoResidues { skipped: usize },

    #[error("collinear backbone atoms in residue {residue}")]
    CollinearBackbone { residue: String },

    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("node {0} has no neighbors")]
    IsolatedNode(usize),

    #[error("degenerate keypoint configuration: singular values {0:?}")]
    DegenerateKabsch([f64; 3]),

    #[error("no residue pairs closer than {tau} Å")]
    NoContact { tau: f64 },

    #[error("empty interface under {cutoff} Å cutoff")]
    EmptyInterface { cutoff: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("synthetic generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}

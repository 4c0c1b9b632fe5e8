//! Reverse-mode differentiation for the training path.

mod gradcheck;
mod ops;
mod tape;

pub use gradcheck::{grad_check, GradCheck};
pub use ops::{Svd3Vars, SVD_GAP_CLAMP};
pub(crate) use ops::{logsumexp, to_mat3};
pub use tape::{Gradients, Tape, Var};

//! Numerical Finsler geometry on homogeneous spaces: Minkowski and singular
//! norms, flag curvature in charts, submersions of norms, Chebyshev norms,
//! smoothing of singular norms, and flat splitting subalgebra obstructions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chebyshev;
pub mod error;
pub mod geometry;
pub mod lie;
pub mod norms;
pub mod obstruction;
pub mod presets;
pub mod smoothing;
pub mod submersion;
pub mod util;

pub use error::{Error, Result};
pub use lie::{CartanData, Field, GroupSampler, MatrixLieAlgebra, ReductiveDecomposition, Root};

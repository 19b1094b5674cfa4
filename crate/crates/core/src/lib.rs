//! Hybrid direct-iterative solver for the block KKT systems produced by interior-point
//! optimizers.
//!
//! A block-4×4 system is reduced to a 2×2 saddle-point system, equilibrated, and its (1,1)
//! block is shifted by `γ JᵀJ` so it can be factorized by pivot-free sparse Cholesky. The
//! Schur complement `J H⁻¹ Jᵀ` is then solved by conjugate gradients, with minimal diagonal
//! regularization applied only when factorization or CG needs it.

pub mod dense;
pub mod error;
pub mod generate;
pub mod kkt;
pub mod metrics;
pub mod mtx;
pub mod oracle;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};

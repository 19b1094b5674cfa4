//! Sparse symmetric linear algebra: compressed-column storage, products, fill-reducing
//! ordering, symbolic analysis, pivot-free Cholesky and triangular solves.

mod amd;
mod cholesky;
mod csc;
mod perm;
mod symbolic;

pub use amd::amd_order;
pub use cholesky::{
    default_pivot_floor, factor_solve, numeric_cholesky, numeric_cholesky_shifted,
    NotSpdFailure, NumericCholesky, PIVOT_FLOOR_REL,
};
pub use csc::{spmv, symmetric_spmv, CscMatrix};
pub use perm::Permutation;
pub use symbolic::{symbolic_cholesky, SymbolicFactor};

//! Backward error, relative residual and factor density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kkt::Reduced2x2;
use crate::sparse::{NumericCholesky, SymbolicFactor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `‖Ax̃ − b‖₂ / (‖A‖_∞‖x̃‖₂ + ‖b‖₂)`.
    pub be: f64,
    /// `‖Ax̃ − b‖₂ / ‖b‖₂`.
    pub rr: f64,
    pub a_norm_inf: f64,
    pub rhs_norm: f64,
    pub solution_norm: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Computes BE and RR given the product `A x̃`. When `b = 0` and `x̃ = 0` both are 0; when
/// only `b = 0`, RR is infinite unless the residual vanishes.
pub fn error_report_from_product(
    ax: &[f64],
    x: &[f64],
    b: &[f64],
    a_norm_inf: f64,
) -> Result<ErrorReport> {
    if ax.len() != b.len() {
        return Err(Error::dims("A x", b.len(), ax.len()));
    }
    let residual: Vec<f64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
    let res = norm2(&residual);
    let (x_norm, b_norm) = (norm2(x), norm2(b));
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    Ok(ErrorReport {
        be: ratio(res, a_norm_inf * x_norm + b_norm),
        rr: ratio(res, b_norm),
        a_norm_inf,
        rhs_norm: b_norm,
        solution_norm: x_norm,
    })
}

/// BE and RR for an operator given as a closure.
pub fn error_report<F>(apply: F, x: &[f64], b: &[f64], a_norm_inf: f64) -> Result<ErrorReport>
where
    F: FnOnce(&[f64]) -> Result<Vec<f64>>,
{
    let ax = apply(x)?;
    error_report_from_product(&ax, x, b, a_norm_inf)
}

/// Factorization density of `H_δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    /// `nnz_fac / n_x`.
    pub rho_c: f64,
    /// Multiplications to apply `H_δ` as an operator: `nnz(H̃) + 2·nnz(J) + n_x`.
    pub nnz_op: usize,
    /// Multiplications for the two triangular solves: `2·nnz(L)`.
    pub nnz_fac: usize,
    /// `nnz_fac / nnz_op`.
    pub ratio: f64,
}

/// `nnz(H̃)` counts the full symmetric matrix, not only its stored lower triangle.
pub fn density_report(red: &Reduced2x2, factor: &NumericCholesky) -> DensityReport {
    density_from_symbolic(red, factor.symbolic())
}

/// Same as [`density_report`]; only the pattern of `L` is needed.
pub fn density_from_symbolic(red: &Reduced2x2, symbolic: &SymbolicFactor) -> DensityReport {
    let n_x = red.n_x();
    let nnz_op = red.h_tilde.symmetric_nnz() + 2 * red.j.nnz() + n_x;
    let nnz_fac = 2 * symbolic.factor_nnz();
    DensityReport {
        rho_c: if n_x == 0 { 0.0 } else { nnz_fac as f64 / n_x as f64 },
        nnz_op,
        nnz_fac,
        ratio: if nnz_op == 0 { 0.0 } else { nnz_fac as f64 / nnz_op as f64 },
    }
}

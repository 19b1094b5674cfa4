//! Dense brute-force references for small systems. Everything here is O(n³) and meant for
//! tests, generator self-checks and property checks, never for the solve path.

use crate::dense::{
    dense_cholesky, dense_rank, dense_solve, dense_solve_matrix, dense_sym_eig, null_space_basis,
    project, DenseMatrix, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::kkt::{BlockKkt4x4, FullSolution, Reduced2x2};

/// Dense `H̃ + γ JᵀJ + δ₁ I`.
pub fn h_gamma_dense(red: &Reduced2x2, gamma: f64, delta1: f64) -> Result<DenseMatrix> {
    let h = DenseMatrix::from_symmetric_lower(&red.h_tilde);
    let j = DenseMatrix::from_csc(&red.j);
    let jtj = j.transpose().matmul(&j)?;
    let shifted = h.add_scaled(gamma, &jtj)?;
    shifted.add_scaled(delta1, &DenseMatrix::identity(red.n_x()))
}

/// Dense `J H_δ⁻¹ Jᵀ + δ₂ I` for `H_δ = H_γ + δ₁ I`, symmetrized.
pub fn schur_dense(red: &Reduced2x2, gamma: f64, delta1: f64, delta2: f64) -> Result<DenseMatrix> {
    let hd = h_gamma_dense(red, gamma, delta1)?;
    if dense_cholesky(&hd)?.is_none() {
        return Err(Error::NotPositiveDefinite {
            column: 0,
            pivot: f64::NAN,
        });
    }
    let j = DenseMatrix::from_csc(&red.j);
    let x = dense_solve_matrix(&hd, &j.transpose())?;
    let s = j.matmul(&x)?;
    let m = s.nrows();
    Ok(DenseMatrix::from_fn(m, m, |a, b| {
        0.5 * (s[(a, b)] + s[(b, a)]) + if a == b { delta2 } else { 0.0 }
    }))
}

/// Ascending eigenvalues of `γ J H_γ⁻¹ Jᵀ`. Fails when `H_γ` is not positive definite.
pub fn schur_spectrum(red: &Reduced2x2, gamma: f64) -> Result<Vec<f64>> {
    let s = schur_dense(red, gamma, 0.0, 0.0)?;
    Ok(dense_sym_eig(&s)?.into_iter().map(|l| gamma * l).collect())
}

/// Ascending eigenvalues of `H̃`.
pub fn h_tilde_spectrum(red: &Reduced2x2) -> Result<Vec<f64>> {
    dense_sym_eig(&DenseMatrix::from_symmetric_lower(&red.h_tilde))
}

/// Smallest eigenvalue of `JᵀJ` above `RANK_TOL · λ_max(JᵀJ)`.
pub fn lambda_min_star_jtj(red: &Reduced2x2) -> Result<Option<f64>> {
    let j = DenseMatrix::from_csc(&red.j);
    let eig = dense_sym_eig(&j.transpose().matmul(&j)?)?;
    let lmax = eig.last().copied().unwrap_or(0.0);
    Ok(eig.into_iter().find(|&l| l > RANK_TOL * lmax))
}

/// `max(0, −λ_min(H̃) / λ*_min(JᵀJ))`.
pub fn gamma_min(red: &Reduced2x2) -> Result<f64> {
    let lmin = h_tilde_spectrum(red)?.first().copied().unwrap_or(0.0);
    match lambda_min_star_jtj(red)? {
        Some(ls) => Ok((-lmin / ls).max(0.0)),
        None if lmin >= 0.0 => Ok(0.0),
        None => Ok(f64::INFINITY),
    }
}

/// Rows of `a` forming a maximal linearly independent set, chosen greedily in order.
pub fn independent_rows(a: &DenseMatrix) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::new();
    for r in 0..a.nrows() {
        let mut trial = keep.clone();
        trial.push(r);
        let cols: Vec<usize> = (0..a.ncols()).collect();
        if dense_rank(&a.submatrix(&trial, &cols), RANK_TOL) == trial.len() {
            keep = trial;
        }
    }
    keep
}

/// Smallest eigenvalue of `H̃` restricted to `null(J)`, or `None` when `null(J) = {0}`.
pub fn nullspace_min_eig(red: &Reduced2x2) -> Result<Option<f64>> {
    let j = DenseMatrix::from_csc(&red.j);
    let rows = independent_rows(&j);
    let cols: Vec<usize> = (0..j.ncols()).collect();
    let z = null_space_basis(&j.submatrix(&rows, &cols))?;
    if z.ncols() == 0 {
        return Ok(None);
    }
    let h = DenseMatrix::from_symmetric_lower(&red.h_tilde);
    Ok(dense_sym_eig(&project(&h, &z)?)?.first().copied())
}

/// `λ_max / λ_min` of a symmetric matrix; infinite when it is not positive definite.
pub fn spd_condition_number(a: &DenseMatrix) -> Result<f64> {
    let eig = dense_sym_eig(a)?;
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

/// Dense solution of the block-4×4 system.
pub fn dense_solve_kkt(sys: &BlockKkt4x4) -> Result<FullSolution> {
    let x = dense_solve(&sys.to_dense(), &sys.rhs())?;
    FullSolution::from_stacked(&x, sys.n_x(), sys.m_c(), sys.m_d())
}

/// Dense solution `(Δx, Δy)` of the 2×2 system.
pub fn dense_solve_reduced(red: &Reduced2x2) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = dense_solve(&red.to_dense(), &red.rhs())?;
    let dy = x.split_off(red.n_x());
    Ok((x, dy))
}

/// `2 ((√κ − 1)/(√κ + 1))^k`, the CG error-reduction bound in the energy norm.
pub fn cg_error_bound(kappa: f64, k: usize) -> f64 {
    let s = kappa.sqrt();
    2.0 * ((s - 1.0) / (s + 1.0)).powi(k as i32)
}

/// `‖v‖_A = sqrt(vᵀ A v)`.
pub fn energy_norm(a: &DenseMatrix, v: &[f64]) -> Result<f64> {
    let av = a.mul_vec(v)?;
    Ok(av.iter().zip(v).map(|(x, y)| x * y).sum::<f64>().max(0.0).sqrt())
}

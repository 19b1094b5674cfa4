//! Conjugate gradients with curvature monitoring.

use crate::kkt::Reduced2x2;
use crate::sparse::{CscMatrix, NumericCholesky};

/// A symmetric linear operator `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `S v = J H_δ⁻¹ Jᵀ v + δ₂ v`.
#[derive(Debug, Clone, Copy)]
pub struct SchurOperator<'a> {
    pub factor: &'a NumericCholesky,
    pub j: &'a CscMatrix,
    pub delta2_active: f64,
}

impl<'a> SchurOperator<'a> {
    pub fn new(factor: &'a NumericCholesky, j: &'a CscMatrix, delta2_active: f64) -> Self {
        assert_eq!(factor.n(), j.ncols(), "factor and J disagree on n_x");
        Self {
            factor,
            j,
            delta2_active,
        }
    }

    pub fn from_reduced(factor: &'a NumericCholesky, red: &'a Reduced2x2, delta2: f64) -> Self {
        Self::new(factor, &red.j, delta2)
    }
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.j.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.j.ncols()];
        self.j.mul_vec_transpose_acc(x, 1.0, &mut t);
        let u = self.factor.solve(&t).expect("dimensions checked at construction");
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.delta2_active * xi;
        }
        self.j.mul_vec_acc(&u, 1.0, y);
    }
}

impl LinearOperator for crate::dense::DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub small_quadratic_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    /// `pᵀAp` fell below the curvature threshold; the iterate is the last one accepted.
    SmallCurvature,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub status: CgStatus,
    /// `‖b - A x‖ / ‖b‖` from the recursively updated residual.
    pub relative_residual: f64,
}

impl CgResult {
    pub fn small_quadratic_detected(&self) -> bool {
        self.status == CgStatus::SmallCurvature
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients from `x₀ = 0`. `observer` sees `(k, x_k)` after every update.
///
/// The iteration stops when `‖r_k‖ <= tol·‖b‖`, after `max_iter` updates, or when
/// `pᵀAp <= 0` or `pᵀAp <= threshold · ρ_max · pᵀp`, where `ρ_max` is the largest Rayleigh
/// quotient seen so far. Measuring curvature against `ρ_max` makes the test invariant to
/// the scale of `A`.
pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[f64],
    opts: &CgOptions,
    mut observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> CgResult {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side length");
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return CgResult {
            x,
            iterations: 0,
            status: CgStatus::Converged,
            relative_residual: 0.0,
        };
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut q = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut rho_max = 0.0f64;

    for k in 0..opts.max_iter {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        let pp = dot(&p, &p);
        rho_max = rho_max.max(pq / pp);
        if !(pq > 0.0) || pq <= opts.small_quadratic_threshold * rho_max * pp {
            log::debug!("CG: small curvature {pq:e} at iteration {k}");
            return CgResult {
                x,
                iterations: k,
                status: CgStatus::SmallCurvature,
                relative_residual: rr.sqrt() / b_norm,
            };
        }
        let alpha = rr / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if let Some(obs) = observer.as_mut() {
            obs(k + 1, &x);
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= opts.tol * b_norm {
            return CgResult {
                x,
                iterations: k + 1,
                status: CgStatus::Converged,
                relative_residual: rr_new.sqrt() / b_norm,
            };
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    CgResult {
        x,
        iterations: opts.max_iter,
        status: CgStatus::MaxIterations,
        relative_residual: rr.sqrt() / b_norm,
    }
}

/// Runs CG on the Schur operator with the solver's tolerances.
pub fn cg_schur(
    op: &SchurOperator<'_>,
    rhs: &[f64],
    cfg: &super::SolverConfig,
    observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> CgResult {
    let opts = CgOptions {
        tol: cfg.cg_tol,
        max_iter: cfg.cg_max_iter,
        small_quadratic_threshold: cfg.small_quadratic_threshold,
    };
    conjugate_gradient(op, rhs, &opts, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    fn opts() -> CgOptions {
        CgOptions {
            tol: 1e-12,
            max_iter: 100,
            small_quadratic_threshold: 1e-12,
        }
    }

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let a = DenseMatrix::identity(3);
        let res = conjugate_gradient(&a, &[0.0; 3], &opts(), None);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.x, vec![0.0; 3]);
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = DenseMatrix::identity(4);
        let res = conjugate_gradient(&a, &[1.0, 2.0, 3.0, 4.0], &opts(), None);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.status, CgStatus::Converged);
        assert_eq!(res.x, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn distinct_eigenvalues_bound_iterations() {
        let a = DenseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 1.0, 2.0]);
        let res = conjugate_gradient(&a, &[1.0; 5], &opts(), None);
        assert!(res.iterations <= 3, "{}", res.iterations);
        assert!((res.x[2] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_inconsistent_system_reports_small_curvature() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.0]);
        let res = conjugate_gradient(&a, &[1.0, 1.0], &opts(), None);
        assert_eq!(res.status, CgStatus::SmallCurvature);
    }

    #[test]
    fn observer_sees_every_iterate() {
        let a = DenseMatrix::from_diagonal(&[1.0, 4.0, 9.0]);
        let mut seen = Vec::new();
        let mut obs = |k: usize, x: &[f64]| seen.push((k, x.to_vec()));
        let res = conjugate_gradient(&a, &[1.0; 3], &opts(), Some(&mut obs));
        assert_eq!(seen.len(), res.iterations);
        assert_eq!(seen.last().unwrap().1, res.x);
    }
}

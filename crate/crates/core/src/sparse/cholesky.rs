use std::sync::Arc;

use super::{CscMatrix, SymbolicFactor};
use crate::error::{Error, Result};

/// Relative pivot floor: a pivot candidate at or below `PIVOT_FLOOR_REL · max|a_ii|` is
/// treated as a failed (non positive definite) factorization.
pub const PIVOT_FLOOR_REL: f64 = 1e-13;

/// Numeric factor `P A Pᵀ = L Lᵀ`, values aligned with the shared symbolic pattern.
#[derive(Debug, Clone)]
pub struct NumericCholesky {
    symbolic: Arc<SymbolicFactor>,
    l_values: Vec<f64>,
}

/// A pivot candidate fell to or below the floor. This is an expected outcome for indefinite
/// or nearly singular input, not an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotSpdFailure {
    /// Column of `P A Pᵀ` where elimination stopped.
    pub column: usize,
    /// The same column in the original (unpermuted) numbering.
    pub original_column: usize,
    pub pivot: f64,
    pub pivot_floor: f64,
}

impl std::fmt::Display for NotSpdFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "pivot {:e} <= floor {:e} at column {}",
            self.pivot, self.pivot_floor, self.column
        )
    }
}

impl NumericCholesky {
    #[inline]
    pub fn symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.symbolic
    }

    #[inline]
    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.symbolic.n()
    }

    /// `L` as a lower-triangular compressed-column matrix (in permuted numbering).
    pub fn l_matrix(&self) -> CscMatrix {
        let n = self.n();
        CscMatrix::from_parts_unchecked(
            n,
            n,
            self.symbolic.l_col_ptr().to_vec(),
            self.symbolic.l_row_idx().to_vec(),
            self.l_values.clone(),
        )
    }

    /// Solves `A x = b`: permute, forward solve with `L`, backward solve with `Lᵀ`, unpermute.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n() {
            return Err(Error::dims("factor solve", self.n(), b.len()));
        }
        let mut y = self.symbolic.ordering().apply(b);
        self.solve_permuted_in_place(&mut y);
        Ok(self.symbolic.ordering().apply_inverse(&y))
    }

    fn solve_permuted_in_place(&self, y: &mut [f64]) {
        let cp = self.symbolic.l_col_ptr();
        let ri = self.symbolic.l_row_idx();
        let lv = &self.l_values;
        let n = self.n();
        for j in 0..n {
            let start = cp[j];
            y[j] /= lv[start];
            let yj = y[j];
            for p in start + 1..cp[j + 1] {
                y[ri[p]] -= lv[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let start = cp[j];
            let mut s = y[j];
            for p in start + 1..cp[j + 1] {
                s -= lv[p] * y[ri[p]];
            }
            y[j] = s / lv[start];
        }
    }
}

/// Default absolute pivot floor for a lower-triangle matrix: `1e-13 · max|a_ii|`.
pub fn default_pivot_floor(a_lower: &CscMatrix) -> f64 {
    PIVOT_FLOOR_REL * a_lower.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()))
}

/// Left-looking simplicial Cholesky of `A` (lower-triangle storage) on a precomputed
/// symbolic pattern. No pivoting takes place.
pub fn numeric_cholesky(
    a_lower: &CscMatrix,
    symbolic: &Arc<SymbolicFactor>,
    pivot_floor: f64,
) -> Result<std::result::Result<NumericCholesky, NotSpdFailure>> {
    numeric_cholesky_shifted(a_lower, symbolic, 0.0, pivot_floor)
}

/// Factorizes `A + shift·I` without materializing the shifted matrix.
pub fn numeric_cholesky_shifted(
    a_lower: &CscMatrix,
    symbolic: &Arc<SymbolicFactor>,
    shift: f64,
    pivot_floor: f64,
) -> Result<std::result::Result<NumericCholesky, NotSpdFailure>> {
    if !symbolic.matches(a_lower) {
        return Err(Error::PatternMismatch);
    }
    let n = symbolic.n();
    let cp = symbolic.l_col_ptr();
    let ri = symbolic.l_row_idx();
    let a_values = a_lower.values();

    let mut lv = vec![0.0; ri.len()];
    let mut x = vec![0.0; n];
    // Columns k < j waiting to update column j, as singly linked lists keyed by row.
    let mut head = vec![usize::MAX; n];
    let mut next = vec![usize::MAX; n];
    let mut pos = vec![0usize; n];

    for j in 0..n {
        let (rows, src) = symbolic.permuted_column(j);
        for (&r, &s) in rows.iter().zip(src) {
            x[r] += a_values[s];
        }
        x[j] += shift;

        let mut k = head[j];
        while k != usize::MAX {
            let following = next[k];
            let p = pos[k];
            let ljk = lv[p];
            for q in p..cp[k + 1] {
                x[ri[q]] -= lv[q] * ljk;
            }
            pos[k] = p + 1;
            if p + 1 < cp[k + 1] {
                let r = ri[p + 1];
                next[k] = head[r];
                head[r] = k;
            }
            k = following;
        }

        let d = x[j];
        if !(d > pivot_floor) || !d.is_finite() {
            return Ok(Err(NotSpdFailure {
                column: j,
                original_column: symbolic.ordering().perm()[j],
                pivot: d,
                pivot_floor,
            }));
        }
        let ljj = d.sqrt();
        let start = cp[j];
        lv[start] = ljj;
        x[j] = 0.0;
        for q in start + 1..cp[j + 1] {
            let r = ri[q];
            lv[q] = x[r] / ljj;
            x[r] = 0.0;
        }
        pos[j] = start + 1;
        if start + 1 < cp[j + 1] {
            let r = ri[start + 1];
            next[j] = head[r];
            head[r] = j;
        }
    }

    Ok(Ok(NumericCholesky {
        symbolic: Arc::clone(symbolic),
        l_values: lv,
    }))
}

/// Solves `A x = b` with a computed factor.
pub fn factor_solve(factor: &NumericCholesky, b: &[f64]) -> Result<Vec<f64>> {
    factor.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{symbolic_cholesky, Permutation};

    fn analyse(a: &CscMatrix) -> Arc<SymbolicFactor> {
        Arc::new(symbolic_cholesky(a, &Permutation::identity(a.ncols())).unwrap())
    }

    #[test]
    fn diagonal_factor() {
        let a = CscMatrix::from_diagonal(&[4.0, 9.0]);
        let f = numeric_cholesky(&a, &analyse(&a), 0.0).unwrap().unwrap();
        assert_eq!(f.l_values(), &[2.0, 3.0]);
    }

    #[test]
    fn indefinite_two_by_two_fails_at_column_one() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        let failure = numeric_cholesky(&a, &analyse(&a), default_pivot_floor(&a))
            .unwrap()
            .unwrap_err();
        assert_eq!(failure.column, 1);
        assert_eq!(failure.pivot, -3.0);
    }

    #[test]
    fn shift_rescues_indefinite_matrix() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        // eigenvalues -1 and 3
        let s = analyse(&a);
        assert!(numeric_cholesky_shifted(&a, &s, 0.99, 1e-13).unwrap().is_err());
        assert!(numeric_cholesky_shifted(&a, &s, 1.01, 1e-13).unwrap().is_ok());
    }

    #[test]
    fn pattern_mismatch_is_a_hard_error() {
        let a = CscMatrix::from_diagonal(&[1.0, 1.0]);
        let b = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 0.5), (1, 1, 1.0)]).unwrap();
        assert!(matches!(
            numeric_cholesky(&b, &analyse(&a), 0.0),
            Err(Error::PatternMismatch)
        ));
    }

    #[test]
    fn solves() {
        let i = CscMatrix::identity(3);
        let f = numeric_cholesky(&i, &analyse(&i), 0.0).unwrap().unwrap();
        assert_eq!(factor_solve(&f, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let d = CscMatrix::from_diagonal(&[2.0, 4.0]);
        let f = numeric_cholesky(&d, &analyse(&d), 0.0).unwrap().unwrap();
        let x = factor_solve(&f, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(factor_solve(&f, &[1.0]).is_err());
    }
}

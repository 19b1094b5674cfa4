use super::{CscMatrix, Permutation};
use crate::error::{Error, Result};

/// Pattern-only Cholesky analysis of `P A Pᵀ`: the elimination tree and the exact nonzero
/// pattern of `L`. Computed once per sparsity pattern and shared by every numeric
/// factorization of a matrix with that pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicFactor {
    n: usize,
    ordering: Permutation,
    etree: Vec<Option<usize>>,
    col_counts: Vec<usize>,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    // Lower-triangle pattern of A this analysis was built from.
    basis_col_ptr: Vec<usize>,
    basis_row_idx: Vec<usize>,
    // Permuted lower triangle of A, column by column: (row in P A Pᵀ, index into A's values).
    pa_col_ptr: Vec<usize>,
    pa_rows: Vec<usize>,
    pa_src: Vec<usize>,
}

impl SymbolicFactor {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn ordering(&self) -> &Permutation {
        &self.ordering
    }

    /// Parent of each column in the elimination tree; `None` for roots.
    #[inline]
    pub fn etree(&self) -> &[Option<usize>] {
        &self.etree
    }

    /// Nonzeros per column of `L`, diagonal included.
    #[inline]
    pub fn col_counts(&self) -> &[usize] {
        &self.col_counts
    }

    #[inline]
    pub fn l_col_ptr(&self) -> &[usize] {
        &self.l_col_ptr
    }

    #[inline]
    pub fn l_row_idx(&self) -> &[usize] {
        &self.l_row_idx
    }

    /// `nnz(L)`, diagonal included.
    #[inline]
    pub fn factor_nnz(&self) -> usize {
        self.l_row_idx.len()
    }

    /// Whether `a_lower` has exactly the lower-triangle pattern this analysis was built from.
    pub fn matches(&self, a_lower: &CscMatrix) -> bool {
        a_lower.nrows() == self.n
            && a_lower.ncols() == self.n
            && a_lower.col_ptr() == self.basis_col_ptr.as_slice()
            && a_lower.row_idx() == self.basis_row_idx.as_slice()
    }

    pub(crate) fn permuted_column(&self, j: usize) -> (&[usize], &[usize]) {
        let range = self.pa_col_ptr[j]..self.pa_col_ptr[j + 1];
        (&self.pa_rows[range.clone()], &self.pa_src[range])
    }
}

/// Elimination tree and `L` pattern of `P A Pᵀ`.
///
/// Only the lower triangle of `pattern` is read (a structurally symmetric matrix is fully
/// described by it); numeric factorizations must later supply a lower-triangle matrix with
/// exactly that pattern.
pub fn symbolic_cholesky(pattern: &CscMatrix, ordering: &Permutation) -> Result<SymbolicFactor> {
    if !pattern.is_square() {
        return Err(Error::NotSquare {
            nrows: pattern.nrows(),
            ncols: pattern.ncols(),
        });
    }
    let n = pattern.ncols();
    if ordering.len() != n {
        return Err(Error::dims("ordering length", n, ordering.len()));
    }
    let lower = if pattern.is_lower_triangular() {
        pattern.clone()
    } else {
        pattern.lower_triangle()
    };
    let pinv = ordering.inverse();

    // Permuted lower triangle, with a back-pointer into A's value array.
    let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(lower.nnz());
    for j in 0..n {
        for p in lower.col_ptr()[j]..lower.col_ptr()[j + 1] {
            let i = lower.row_idx()[p];
            let (pi, pj) = (pinv[i], pinv[j]);
            entries.push((pi.min(pj), pi.max(pj), p));
        }
    }
    entries.sort_unstable();
    let mut pa_col_ptr = vec![0usize; n + 1];
    for &(c, _, _) in &entries {
        pa_col_ptr[c + 1] += 1;
    }
    for j in 0..n {
        pa_col_ptr[j + 1] += pa_col_ptr[j];
    }
    let pa_rows: Vec<usize> = entries.iter().map(|e| e.1).collect();
    let pa_src: Vec<usize> = entries.iter().map(|e| e.2).collect();

    // Strict upper part of column k of P A Pᵀ = strict lower part of row k.
    let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(c, r, _) in &entries {
        if r != c {
            upper[r].push(c);
        }
    }

    let mut etree = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for &start in &upper[k] {
            let mut i = start;
            loop {
                let next = ancestor[i];
                ancestor[i] = Some(k);
                match next {
                    None => {
                        etree[i] = Some(k);
                        break;
                    }
                    Some(a) if a == k => break,
                    Some(a) => i = a,
                }
            }
        }
    }

    // Row k of L is the set of etree nodes reachable from upper[k] before reaching k.
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut flag = vec![usize::MAX; n];
    for k in 0..n {
        flag[k] = k;
        for &start in &upper[k] {
            let mut i = start;
            while flag[i] != k {
                columns[i].push(k);
                flag[i] = k;
                i = etree[i].expect("upper entries lie below k in the etree");
            }
        }
        columns[k].insert(0, k);
    }
    // Rows were appended in increasing k, except the diagonal inserted first.
    let col_counts: Vec<usize> = columns.iter().map(Vec::len).collect();
    let mut l_col_ptr = Vec::with_capacity(n + 1);
    l_col_ptr.push(0);
    let mut l_row_idx = Vec::with_capacity(col_counts.iter().sum());
    for col in &columns {
        l_row_idx.extend_from_slice(col);
        l_col_ptr.push(l_row_idx.len());
    }

    Ok(SymbolicFactor {
        n,
        ordering: ordering.clone(),
        etree,
        col_counts,
        l_col_ptr,
        l_row_idx,
        basis_col_ptr: lower.col_ptr().to_vec(),
        basis_row_idx: lower.row_idx().to_vec(),
        pa_col_ptr,
        pa_rows,
        pa_src,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> CscMatrix {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i + 1 < n {
                trip.push((i + 1, i, -1.0));
            }
        }
        CscMatrix::from_triplets(n, n, &trip).unwrap()
    }

    #[test]
    fn tridiagonal_has_no_fill() {
        let a = tridiagonal(5);
        let s = symbolic_cholesky(&a, &Permutation::identity(5)).unwrap();
        assert_eq!(s.col_counts(), &[2, 2, 2, 2, 1]);
        assert_eq!(s.etree(), &[Some(1), Some(2), Some(3), Some(4), None]);
        assert_eq!(s.l_row_idx(), &[0, 1, 1, 2, 2, 3, 3, 4, 4]);
    }

    #[test]
    fn arrow_first_fills_completely() {
        let n = 6;
        let mut trip = vec![];
        for i in 0..n {
            trip.push((i, i, 10.0));
            if i > 0 {
                trip.push((i, 0, 1.0));
            }
        }
        let a = CscMatrix::from_triplets(n, n, &trip).unwrap();
        let s = symbolic_cholesky(&a, &Permutation::identity(n)).unwrap();
        assert_eq!(s.col_counts(), &[6, 5, 4, 3, 2, 1]);
    }

    #[test]
    fn full_storage_uses_lower_triangle() {
        let a = tridiagonal(4);
        let full = a.symmetric_full();
        let p = Permutation::from_vec(vec![2, 0, 3, 1]).unwrap();
        let s1 = symbolic_cholesky(&a, &p).unwrap();
        let s2 = symbolic_cholesky(&full, &p).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.matches(&a));
        assert!(!s1.matches(&full));
    }

    #[test]
    fn ordering_length_checked() {
        assert!(symbolic_cholesky(&tridiagonal(3), &Permutation::identity(2)).is_err());
    }
}

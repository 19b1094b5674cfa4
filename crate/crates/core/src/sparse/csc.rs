use crate::error::{Error, Result};

/// Sparse matrix in compressed-column layout.
///
/// Row indices are strictly increasing within each column and no `(row, col)` pair is
/// stored twice. Symmetric matrices are stored as their lower triangle (diagonal included).
/// Explicitly stored zeros are kept: the stored pattern is structural, not numeric.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from raw compressed-column arrays, checking every layout invariant.
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != ncols + 1 {
            return Err(Error::MalformedMatrix(format!(
                "col_ptr has length {}, expected {}",
                col_ptr.len(),
                ncols + 1
            )));
        }
        if col_ptr[0] != 0 {
            return Err(Error::MalformedMatrix("col_ptr[0] must be 0".into()));
        }
        let nnz = col_ptr[ncols];
        if row_idx.len() != nnz || values.len() != nnz {
            return Err(Error::MalformedMatrix(format!(
                "col_ptr promises {nnz} entries, row_idx has {} and values has {}",
                row_idx.len(),
                values.len()
            )));
        }
        for j in 0..ncols {
            let (start, end) = (col_ptr[j], col_ptr[j + 1]);
            if start > end {
                return Err(Error::MalformedMatrix(format!(
                    "col_ptr decreases at column {j}"
                )));
            }
            for p in start..end {
                if row_idx[p] >= nrows {
                    return Err(Error::MalformedMatrix(format!(
                        "row index {} out of range in column {j}",
                        row_idx[p]
                    )));
                }
                if p > start && row_idx[p] <= row_idx[p - 1] {
                    return Err(Error::MalformedMatrix(format!(
                        "row indices not strictly increasing in column {j}"
                    )));
                }
            }
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(col_ptr.len(), ncols + 1);
        debug_assert_eq!(row_idx.len(), values.len());
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_parts_unchecked(nrows, ncols, vec![0; ncols + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_parts_unchecked(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec())
    }

    /// Assembles a matrix from `(row, col, value)` triplets. Duplicate positions are summed;
    /// a position that sums to zero stays structurally present.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::MalformedMatrix(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        let mut counts = vec![0usize; ncols + 1];
        for &(_, j, _) in triplets {
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            rows[next[j]] = i;
            vals[next[j]] = v;
            next[j] += 1;
        }

        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut order: Vec<usize> = Vec::new();
        col_ptr.push(0);
        for j in 0..ncols {
            order.clear();
            order.extend(counts[j]..counts[j + 1]);
            order.sort_by_key(|&p| rows[p]);
            for &p in &order {
                match row_idx.last() {
                    Some(&last) if row_idx.len() > col_ptr[j] && last == rows[p] => {
                        *values.last_mut().unwrap() += vals[p];
                    }
                    _ => {
                        row_idx.push(rows[p]);
                        values.push(vals[p]);
                    }
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self::from_parts_unchecked(nrows, ncols, col_ptr, row_idx, values))
    }

    /// Builds a matrix from row-major dense data, storing every entry whose value is nonzero.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::dims("dense row length", ncols, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    #[inline]
    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    #[inline]
    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Iterates over stored entries as `(row, col, value)`, column by column.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1])
                .map(move |p| (self.row_idx[p], j, self.values[p]))
        })
    }

    /// Value at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        rows.binary_search(&i).map_or(0.0, |p| vals[p])
    }

    /// Position of `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (rows, _) = self.col(j);
        rows.binary_search(&i).ok().map(|p| self.col_ptr[j] + p)
    }

    pub fn same_pattern(&self, other: &CscMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.col_ptr == other.col_ptr
            && self.row_idx == other.row_idx
    }

    /// A copy sharing this pattern with every value replaced by `values`.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.nnz() {
            return Err(Error::dims("with_values", self.nnz(), values.len()));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut counts = vec![0usize; self.nrows + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            let p = next[i];
            row_idx[p] = j;
            values[p] = v;
            next[i] += 1;
        }
        Self::from_parts_unchecked(self.ncols, self.nrows, counts, row_idx, values)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::dims("spmv", self.ncols, x.len()));
        }
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_acc(x, 1.0, &mut y);
        Ok(y)
    }

    /// `y = Aᵀ x`.
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::dims("spmv (transpose)", self.nrows, x.len()));
        }
        let mut y = vec![0.0; self.ncols];
        self.mul_vec_transpose_acc(x, 1.0, &mut y);
        Ok(y)
    }

    /// `y += alpha A x` without dimension checks.
    pub(crate) fn mul_vec_acc(&self, x: &[f64], alpha: f64, y: &mut [f64]) {
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
    }

    /// `y += alpha Aᵀ x` without dimension checks.
    pub(crate) fn mul_vec_transpose_acc(&self, x: &[f64], alpha: f64, y: &mut [f64]) {
        for j in 0..self.ncols {
            let mut s = 0.0;
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.values[p] * x[self.row_idx[p]];
            }
            y[j] += alpha * s;
        }
    }

    /// Full symmetric product for a matrix stored as its lower triangle:
    /// `(L + Lᵀ - diag(L)) x`.
    pub fn symmetric_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        if x.len() != self.ncols {
            return Err(Error::dims("symmetric spmv", self.ncols, x.len()));
        }
        let mut y = vec![0.0; self.nrows];
        self.symmetric_mul_vec_acc(x, 1.0, &mut y);
        Ok(y)
    }

    pub(crate) fn symmetric_mul_vec_acc(&self, x: &[f64], alpha: f64, y: &mut [f64]) {
        for j in 0..self.ncols {
            let mut s = 0.0;
            let xj = alpha * x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                let v = self.values[p];
                y[i] += v * xj;
                if i != j {
                    s += v * x[i];
                }
            }
            y[j] += alpha * s;
        }
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.iter().all(|(i, j, _)| i >= j)
    }

    /// Entries on or below the diagonal.
    pub fn lower_triangle(&self) -> CscMatrix {
        let mut col_ptr = Vec::with_capacity(self.ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                if i >= j {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::from_parts_unchecked(self.nrows, self.ncols, col_ptr, row_idx, values)
    }

    /// Expands a lower-triangle symmetric matrix into full storage.
    pub fn symmetric_full(&self) -> CscMatrix {
        let mut trip = Vec::with_capacity(2 * self.nnz());
        for (i, j, v) in self.iter() {
            trip.push((i, j, v));
            if i != j {
                trip.push((j, i, v));
            }
        }
        Self::from_triplets(self.nrows, self.ncols, &trip).expect("indices already validated")
    }

    /// Number of nonzeros of the full symmetric matrix represented by this lower triangle.
    pub fn symmetric_nnz(&self) -> usize {
        self.iter().map(|(i, j, _)| if i == j { 1 } else { 2 }).sum()
    }

    /// Diagonal values (zero where not stored).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|j| self.get(j, j))
            .collect()
    }

    /// Absolute row sums, `Σ_j |a_ij|`.
    pub fn row_abs_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.nrows];
        for (i, _, v) in self.iter() {
            s[i] += v.abs();
        }
        s
    }

    /// Absolute column sums, `Σ_i |a_ij|`.
    pub fn col_abs_sums(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| self.col(j).1.iter().map(|v| v.abs()).sum())
            .collect()
    }

    /// Absolute row sums of the full symmetric matrix stored as this lower triangle.
    pub fn symmetric_row_abs_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.nrows];
        for (i, j, v) in self.iter() {
            s[i] += v.abs();
            if i != j {
                s[j] += v.abs();
            }
        }
        s
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.row_abs_sums().into_iter().fold(0.0, f64::max)
    }

    /// Frobenius norm of the stored entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the full symmetric matrix stored as this lower triangle.
    pub fn symmetric_frobenius_norm(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }

    /// `diag(row_scale) · A · diag(col_scale)`, same pattern.
    pub fn scaled(&self, row_scale: &[f64], col_scale: &[f64]) -> CscMatrix {
        debug_assert_eq!(row_scale.len(), self.nrows);
        debug_assert_eq!(col_scale.len(), self.ncols);
        let mut out = self.clone();
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.values[p] *= row_scale[self.row_idx[p]] * col_scale[j];
            }
        }
        out
    }

    /// Lower triangle of `Aᵀ diag(w) A` (or `AᵀA` when `weights` is `None`).
    ///
    /// Every product pair contributes a structural entry, so the pattern depends only on the
    /// pattern of `A`, never on the weights.
    pub fn gram_lower(&self, weights: Option<&[f64]>) -> Result<CscMatrix> {
        if let Some(w) = weights {
            if w.len() != self.nrows {
                return Err(Error::dims("gram weights", self.nrows, w.len()));
            }
        }
        let rows = self.transpose();
        let mut trip = Vec::new();
        for i in 0..rows.ncols {
            let wi = weights.map_or(1.0, |w| w[i]);
            let (cols, vals) = rows.col(i);
            for (a, (&ca, &va)) in cols.iter().zip(vals).enumerate() {
                for (&cb, &vb) in cols[..=a].iter().zip(&vals[..=a]) {
                    // ca >= cb since columns of row i are sorted
                    trip.push((ca, cb, wi * va * vb));
                }
            }
        }
        Self::from_triplets(self.ncols, self.ncols, &trip)
    }

    /// `Σ_k alpha_k · A_k` over same-shaped matrices, on the union pattern.
    pub fn linear_combination(terms: &[(f64, &CscMatrix)]) -> Result<CscMatrix> {
        let (nrows, ncols) = match terms.first() {
            Some((_, m)) => (m.nrows, m.ncols),
            None => return Err(Error::MalformedMatrix("empty linear combination".into())),
        };
        let mut trip = Vec::new();
        for (alpha, m) in terms {
            if m.nrows != nrows {
                return Err(Error::dims("linear combination rows", nrows, m.nrows));
            }
            if m.ncols != ncols {
                return Err(Error::dims("linear combination cols", ncols, m.ncols));
            }
            trip.extend(m.iter().map(|(i, j, v)| (i, j, alpha * v)));
        }
        Self::from_triplets(nrows, ncols, &trip)
    }

    /// Checks `|a_ij - a_ji| <= tol · max|a|` over the stored pattern.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, j, v) in self.iter() {
            let diff = (v - self.get(j, i)).abs();
            if diff > tol * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
        Ok(())
    }
}

/// `A x`, or `Aᵀ x` when `transpose` is set.
pub fn spmv(a: &CscMatrix, x: &[f64], transpose: bool) -> Result<Vec<f64>> {
    if transpose {
        a.mul_vec_transpose(x)
    } else {
        a.mul_vec(x)
    }
}

/// Full symmetric product for a matrix stored as its lower triangle.
pub fn symmetric_spmv(a_lower: &CscMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a_lower.symmetric_mul_vec(x)
}

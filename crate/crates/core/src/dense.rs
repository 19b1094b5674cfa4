//! Small dense linear algebra used as brute-force oracles: Gaussian elimination, cyclic
//! Jacobi eigenvalues, numerical rank, Householder null-space bases. Everything is O(n³) and
//! meant for n up to a few hundred; none of it is on the sparse solve path.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::dims("dense row length", ncols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Densifies stored entries as they are.
    pub fn from_csc(a: &CscMatrix) -> Self {
        let mut m = Self::zeros(a.nrows(), a.ncols());
        for (i, j, v) in a.iter() {
            m[(i, j)] += v;
        }
        m
    }

    /// Densifies a symmetric matrix stored as its lower triangle.
    pub fn from_symmetric_lower(a: &CscMatrix) -> Self {
        let mut m = Self::zeros(a.nrows(), a.ncols());
        for (i, j, v) in a.iter() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn hilbert(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::dims("dense matmul", self.ncols, other.nrows));
        }
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.ncols {
                    out.data[i * other.ncols + j] += a * other.data[k * other.ncols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::dims("dense matvec", self.ncols, x.len()));
        }
        Ok((0..self.nrows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add_scaled(&self, alpha: f64, other: &DenseMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::dims("dense add", self.data.len(), other.data.len()));
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    pub fn trace(&self) -> f64 {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_square(&self) -> Result<()> {
        if self.nrows != self.ncols {
            return Err(Error::NotSquare {
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        Ok(())
    }

    fn check_symmetric(&self) -> Result<()> {
        self.check_square()?;
        let tol = 1e-10 * self.max_abs();
        for i in 0..self.nrows {
            for j in 0..i {
                let diff = (self[(i, j)] - self[(j, i)]).abs();
                if diff > tol {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            }
        }
        Ok(())
    }

    /// Copy restricted to the given rows and columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// `[a, b]` side by side.
    pub fn hstack(a: &DenseMatrix, b: &DenseMatrix) -> Result<Self> {
        if a.nrows != b.nrows {
            return Err(Error::dims("hstack", a.nrows, b.nrows));
        }
        Ok(Self::from_fn(a.nrows, a.ncols + b.ncols, |i, j| {
            if j < a.ncols {
                a[(i, j)]
            } else {
                b[(i, j - a.ncols)]
            }
        }))
    }
}

/// LU factorization with partial pivoting, stored compactly.
struct Lu {
    lu: DenseMatrix,
    piv: Vec<usize>,
    sign: f64,
}

fn lu_factor(a: &DenseMatrix) -> Result<Lu> {
    a.check_square()?;
    let n = a.nrows;
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let tiny = n.max(1) as f64 * f64::EPSILON * a.max_abs();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if pmax <= tiny || pmax == 0.0 {
            return Err(Error::Singular { column: k });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    lu.data[i * n + j] -= f * lu.data[k * n + j];
                }
            }
        }
    }
    Ok(Lu { lu, piv, sign })
}

impl Lu {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows {
        return Err(Error::dims("dense solve", a.nrows, b.len()));
    }
    Ok(lu_factor(a)?.solve(b))
}

/// `A⁻¹ B` column by column.
pub fn dense_solve_matrix(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.nrows != a.nrows {
        return Err(Error::dims("dense solve", a.nrows, b.nrows));
    }
    let lu = lu_factor(a)?;
    let mut out = DenseMatrix::zeros(b.nrows, b.ncols);
    for j in 0..b.ncols {
        let x = lu.solve(&b.column(j));
        for (i, v) in x.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Determinant via LU; zero for matrices that are singular to working precision.
pub fn dense_determinant(a: &DenseMatrix) -> Result<f64> {
    match lu_factor(a) {
        Ok(lu) => Ok((0..a.nrows).map(|i| lu.lu[(i, i)]).product::<f64>() * lu.sign),
        Err(Error::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Dense Cholesky `A = L Lᵀ`; `None` if a pivot is not positive.
pub fn dense_cholesky(a: &DenseMatrix) -> Result<Option<DenseMatrix>> {
    a.check_square()?;
    let n = a.nrows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Ok(None);
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(Some(l))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations. Eigenvalues are
/// returned in ascending order with matching eigenvector columns.
pub fn dense_sym_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    a.check_symmetric()?;
    let n = a.nrows;
    let mut m = a.clone();
    // symmetrize exactly
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_norm();
    let mut previous_off = f64::INFINITY;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off >= previous_off {
            break;
        }
        previous_off = off;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)]));
    let values = idx.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, idx[j])]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn dense_sym_eig(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(dense_sym_eigen(a)?.0)
}

/// Numerical rank by Gaussian elimination with complete pivoting: the number of pivots whose
/// magnitude exceeds `tol · max|a_ij|`.
pub fn dense_rank(a: &DenseMatrix, tol: f64) -> usize {
    let (m, n) = (a.nrows, a.ncols);
    let mut w = a.clone();
    let threshold = tol * a.max_abs();
    let mut rank = 0;
    for k in 0..m.min(n) {
        let mut best = (k, k, -1.0f64);
        for i in k..m {
            for j in k..n {
                let v = w[(i, j)].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= threshold || best.2 == 0.0 {
            break;
        }
        let (pi, pj, _) = best;
        for j in 0..n {
            w.data.swap(k * n + j, pi * n + j);
        }
        for i in 0..m {
            w.data.swap(i * n + k, i * n + pj);
        }
        let pivot = w[(k, k)];
        for i in k + 1..m {
            let f = w[(i, k)] / pivot;
            if f != 0.0 {
                for j in k..n {
                    w.data[i * n + j] -= f * w.data[k * n + j];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Default relative rank tolerance.
pub const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of `null(J)` as the trailing columns of the Householder Q of `Jᵀ`.
/// Assumes `J` (m×n, m ≤ n) has full row rank.
pub fn null_space_basis(j: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = (j.nrows, j.ncols);
    if m > n {
        return Err(Error::dims("null space (rows must not exceed columns)", n, m));
    }
    // A = Jᵀ (n×m); accumulate Q = H_0 H_1 ... H_{m-1}.
    let mut a = j.transpose();
    let mut q = DenseMatrix::identity(n);
    for k in 0..m {
        let norm: f64 = (k..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (0..n).map(|i| if i < k { 0.0 } else { a[(i, k)] }).collect();
        v[k] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in k..m {
            let dot: f64 = (k..n).map(|i| v[i] * a[(i, c)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                a[(i, c)] -= f * v[i];
            }
        }
        for r in 0..n {
            let dot: f64 = (k..n).map(|i| q[(r, i)] * v[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                q[(r, i)] -= f * v[i];
            }
        }
    }
    let cols: Vec<usize> = (m..n).collect();
    let rows: Vec<usize> = (0..n).collect();
    Ok(q.submatrix(&rows, &cols))
}

/// `Zᵀ A Z` for a symmetric `A` and basis `Z`.
pub fn project(a: &DenseMatrix, z: &DenseMatrix) -> Result<DenseMatrix> {
    z.transpose().matmul(&a.matmul(z)?)
}

//! Block KKT systems from interior-point iterations.
//!
//! The block-4×4 system
//!
//! ```text
//! [ H + D_x   0     Jᵀ   J_dᵀ ] [ Δx   ]   [ r̃_x  ]
//! [ 0         D_s   0    -I   ] [ Δs   ] = [ r_s  ]
//! [ J         0     0     0   ] [ Δy   ]   [ r_y  ]
//! [ J_d      -I     0     0   ] [ Δy_d ]   [ r_yd ]
//! ```
//!
//! is reduced to the saddle-point system `[H̃ Jᵀ; J 0] [Δx; Δy] = [r_x; r_y]` with
//! `H̃ = H + D_x + J_dᵀ D_s J_d` and `r_x = r̃_x + J_dᵀ (D_s r_yd + r_s)`. After solving it,
//! `Δs = J_d Δx - r_yd` and `Δy_d = D_s Δs - r_s` recover the eliminated unknowns.

mod ruiz;
mod sequence;

pub use ruiz::{ruiz_scale, scale_solution, unscale_solution, RuizScaling};
pub use sequence::{
    load_sequence, read_manifest, write_sequence, LoadedSequence, SequenceManifest, SystemEntry, SystemVectors,
    MANIFEST_FORMAT,
};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// One system `K_k Δx_k = r_k` in block-4×4 form. `h` holds the lower triangle of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKkt4x4 {
    pub h: CscMatrix,
    pub j: CscMatrix,
    pub j_d: CscMatrix,
    pub d_x: Vec<f64>,
    pub d_s: Vec<f64>,
    pub r_x_tilde: Vec<f64>,
    pub r_s: Vec<f64>,
    pub r_y: Vec<f64>,
    pub r_yd: Vec<f64>,
}

/// The reduced saddle-point system `[H̃ Jᵀ; J 0]`. `h_tilde` holds the lower triangle of `H̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduced2x2 {
    pub h_tilde: CscMatrix,
    pub j: CscMatrix,
    pub r_x: Vec<f64>,
    pub r_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSolution {
    pub dx: Vec<f64>,
    pub ds: Vec<f64>,
    pub dy: Vec<f64>,
    pub dyd: Vec<f64>,
}

impl FullSolution {
    /// `[Δx; Δs; Δy; Δy_d]`.
    pub fn stacked(&self) -> Vec<f64> {
        [&self.dx[..], &self.ds, &self.dy, &self.dyd].concat()
    }

    pub fn from_stacked(v: &[f64], n_x: usize, m_c: usize, m_d: usize) -> Result<Self> {
        if v.len() != n_x + 2 * m_d + m_c {
            return Err(Error::dims("stacked solution", n_x + 2 * m_d + m_c, v.len()));
        }
        let (dx, rest) = v.split_at(n_x);
        let (ds, rest) = rest.split_at(m_d);
        let (dy, dyd) = rest.split_at(m_c);
        Ok(Self {
            dx: dx.to_vec(),
            ds: ds.to_vec(),
            dy: dy.to_vec(),
            dyd: dyd.to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.stacked().iter().all(|v| v.is_finite())
    }
}

fn check_len(context: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::dims(context, expected, v.len()));
    }
    Ok(())
}

impl BlockKkt4x4 {
    /// Builds a system, checking that block dimensions agree and that `D_x`, `D_s` are
    /// finite and nonnegative. `h` may be given in full symmetric storage; only its lower
    /// triangle is kept.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        h: CscMatrix,
        j: CscMatrix,
        j_d: CscMatrix,
        d_x: Vec<f64>,
        d_s: Vec<f64>,
        r_x_tilde: Vec<f64>,
        r_s: Vec<f64>,
        r_y: Vec<f64>,
        r_yd: Vec<f64>,
    ) -> Result<Self> {
        let h = if h.is_lower_triangular() {
            h
        } else {
            h.lower_triangle()
        };
        let sys = Self {
            h,
            j,
            j_d,
            d_x,
            d_s,
            r_x_tilde,
            r_s,
            r_y,
            r_yd,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let n_x = self.h.nrows();
        if !self.h.is_square() {
            return Err(Error::NotSquare {
                nrows: self.h.nrows(),
                ncols: self.h.ncols(),
            });
        }
        if !self.h.is_lower_triangular() {
            return Err(Error::MalformedMatrix(
                "H must be stored as its lower triangle".into(),
            ));
        }
        if self.j.ncols() != n_x {
            return Err(Error::dims("J columns", n_x, self.j.ncols()));
        }
        if self.j_d.ncols() != n_x {
            return Err(Error::dims("J_d columns", n_x, self.j_d.ncols()));
        }
        let (m_c, m_d) = (self.j.nrows(), self.j_d.nrows());
        check_len("D_x", &self.d_x, n_x)?;
        check_len("D_s", &self.d_s, m_d)?;
        check_len("r_x_tilde", &self.r_x_tilde, n_x)?;
        check_len("r_s", &self.r_s, m_d)?;
        check_len("r_y", &self.r_y, m_c)?;
        check_len("r_yd", &self.r_yd, m_d)?;
        if let Some(v) = self
            .d_x
            .iter()
            .chain(&self.d_s)
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::MalformedMatrix(format!(
                "D_x and D_s must be finite and nonnegative, found {v}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.h.nrows()
    }

    #[inline]
    pub fn m_c(&self) -> usize {
        self.j.nrows()
    }

    #[inline]
    pub fn m_d(&self) -> usize {
        self.j_d.nrows()
    }

    /// `N = n_x + 2 m_d + m_c`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n_x() + 2 * self.m_d() + self.m_c()
    }

    /// `[r̃_x; r_s; r_y; r_yd]`.
    pub fn rhs(&self) -> Vec<f64> {
        [&self.r_x_tilde[..], &self.r_s, &self.r_y, &self.r_yd].concat()
    }

    /// Whether two systems have identical dimensions and block sparsity patterns.
    pub fn same_pattern(&self, other: &BlockKkt4x4) -> bool {
        self.h.same_pattern(&other.h)
            && self.j.same_pattern(&other.j)
            && self.j_d.same_pattern(&other.j_d)
    }

    /// `K_k v` for a stacked vector `v = [Δx; Δs; Δy; Δy_d]`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let (n_x, m_c, m_d) = (self.n_x(), self.m_c(), self.m_d());
        check_len("4x4 operand", v, self.dim())?;
        let (x, rest) = v.split_at(n_x);
        let (s, rest) = rest.split_at(m_d);
        let (y, yd) = rest.split_at(m_c);

        let mut out = vec![0.0; self.dim()];
        {
            let (o1, rest) = out.split_at_mut(n_x);
            let (o2, rest) = rest.split_at_mut(m_d);
            let (o3, o4) = rest.split_at_mut(m_c);
            self.h.symmetric_mul_vec_acc(x, 1.0, o1);
            for i in 0..n_x {
                o1[i] += self.d_x[i] * x[i];
            }
            self.j.mul_vec_transpose_acc(y, 1.0, o1);
            self.j_d.mul_vec_transpose_acc(yd, 1.0, o1);
            for i in 0..m_d {
                o2[i] = self.d_s[i] * s[i] - yd[i];
            }
            self.j.mul_vec_acc(x, 1.0, o3);
            self.j_d.mul_vec_acc(x, 1.0, o4);
            for i in 0..m_d {
                o4[i] -= s[i];
            }
        }
        Ok(out)
    }

    /// Exact `‖K_k‖_∞`, computed blockwise without assembling `K_k`.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = symmetric_abs_row_sums(&self.h, Some(&self.d_x));
        add_transpose_abs(&mut rows, &self.j);
        add_transpose_abs(&mut rows, &self.j_d);
        let block1 = rows.into_iter().fold(0.0, f64::max);
        let block2 = self.d_s.iter().map(|d| d.abs() + 1.0).fold(0.0, f64::max);
        let block3 = self.j.inf_norm();
        let block4 = self
            .j_d
            .row_abs_sums()
            .into_iter()
            .map(|s| s + 1.0)
            .fold(0.0, f64::max);
        block1.max(block2).max(block3).max(block4)
    }

    /// Densified `K_k` (oracle use only).
    pub fn to_dense(&self) -> DenseMatrix {
        let (n_x, m_c, m_d) = (self.n_x(), self.m_c(), self.m_d());
        let (os, oy, oyd) = (n_x, n_x + m_d, n_x + m_d + m_c);
        let mut k = DenseMatrix::zeros(self.dim(), self.dim());
        for (i, j, v) in self.h.iter() {
            k[(i, j)] += v;
            if i != j {
                k[(j, i)] += v;
            }
        }
        for i in 0..n_x {
            k[(i, i)] += self.d_x[i];
        }
        for (r, c, v) in self.j.iter() {
            k[(oy + r, c)] = v;
            k[(c, oy + r)] = v;
        }
        for (r, c, v) in self.j_d.iter() {
            k[(oyd + r, c)] = v;
            k[(c, oyd + r)] = v;
        }
        for i in 0..m_d {
            k[(os + i, os + i)] = self.d_s[i];
            k[(os + i, oyd + i)] = -1.0;
            k[(oyd + i, os + i)] = -1.0;
        }
        k
    }
}

impl Reduced2x2 {
    #[inline]
    pub fn n_x(&self) -> usize {
        self.h_tilde.nrows()
    }

    #[inline]
    pub fn m_c(&self) -> usize {
        self.j.nrows()
    }

    /// `[r_x; r_y]`.
    pub fn rhs(&self) -> Vec<f64> {
        [&self.r_x[..], &self.r_y].concat()
    }

    /// `[H̃ Δx + Jᵀ Δy; J Δx]` for a stacked `v = [Δx; Δy]`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n_x = self.n_x();
        check_len("2x2 operand", v, n_x + self.m_c())?;
        let (x, y) = v.split_at(n_x);
        let mut out = vec![0.0; v.len()];
        let (o1, o2) = out.split_at_mut(n_x);
        self.h_tilde.symmetric_mul_vec_acc(x, 1.0, o1);
        self.j.mul_vec_transpose_acc(y, 1.0, o1);
        self.j.mul_vec_acc(x, 1.0, o2);
        Ok(out)
    }

    /// Exact `‖[H̃ Jᵀ; J 0]‖_∞`, computed blockwise.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = symmetric_abs_row_sums(&self.h_tilde, None);
        add_transpose_abs(&mut rows, &self.j);
        rows.into_iter().fold(0.0, f64::max).max(self.j.inf_norm())
    }

    /// Densified saddle-point matrix (oracle use only).
    pub fn to_dense(&self) -> DenseMatrix {
        let n_x = self.n_x();
        let n = n_x + self.m_c();
        let mut k = DenseMatrix::zeros(n, n);
        for (i, j, v) in self.h_tilde.iter() {
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        for (r, c, v) in self.j.iter() {
            k[(n_x + r, c)] = v;
            k[(c, n_x + r)] = v;
        }
        k
    }
}

/// Absolute row sums of the symmetric matrix `lower + diag(extra)`, accumulated in ascending
/// column order so they agree bit for bit with a left-to-right sum over dense rows.
fn symmetric_abs_row_sums(lower: &CscMatrix, extra: Option<&[f64]>) -> Vec<f64> {
    let n = lower.nrows();
    let mut rows = vec![0.0; n];
    for j in 0..n {
        rows[j] += (lower.get(j, j) + extra.map_or(0.0, |d| d[j])).abs();
        let (ri, vals) = lower.col(j);
        for (&i, &v) in ri.iter().zip(vals) {
            if i > j {
                rows[j] += v.abs();
                rows[i] += v.abs();
            }
        }
    }
    rows
}

/// Adds `|a_ji|` to `rows[i]` entry by entry, in row order of `a`.
fn add_transpose_abs(rows: &mut [f64], a: &CscMatrix) {
    for (i, row) in rows.iter_mut().enumerate() {
        for v in a.col(i).1 {
            *row += v.abs();
        }
    }
}

/// Eliminates `Δs` and `Δy_d`, producing `H̃ = H + D_x + J_dᵀ D_s J_d` and
/// `r_x = r̃_x + J_dᵀ (D_s r_yd + r_s)`.
///
/// `H̃` is stored on the union of the patterns of `H`, the full diagonal and `J_dᵀ J_d`, so its
/// pattern depends only on the block patterns and never on values.
pub fn reduce(sys: &BlockKkt4x4) -> Result<Reduced2x2> {
    sys.validate()?;
    let dx_diag = CscMatrix::from_diagonal(&sys.d_x);
    let h_tilde = if sys.m_d() > 0 {
        let jd_term = sys.j_d.gram_lower(Some(&sys.d_s))?;
        CscMatrix::linear_combination(&[(1.0, &sys.h), (1.0, &dx_diag), (1.0, &jd_term)])?
    } else {
        CscMatrix::linear_combination(&[(1.0, &sys.h), (1.0, &dx_diag)])?
    };
    let mut r_x = sys.r_x_tilde.clone();
    if sys.m_d() > 0 {
        let inner: Vec<f64> = (0..sys.m_d())
            .map(|i| sys.d_s[i] * sys.r_yd[i] + sys.r_s[i])
            .collect();
        sys.j_d.mul_vec_transpose_acc(&inner, 1.0, &mut r_x);
    }
    Ok(Reduced2x2 {
        h_tilde,
        j: sys.j.clone(),
        r_x,
        r_y: sys.r_y.clone(),
    })
}

/// Recovers `Δs = J_d Δx - r_yd` and `Δy_d = D_s Δs - r_s`.
pub fn recover(sys: &BlockKkt4x4, dx: &[f64], dy: &[f64]) -> Result<FullSolution> {
    check_len("dx", dx, sys.n_x())?;
    check_len("dy", dy, sys.m_c())?;
    let mut ds = sys.j_d.mul_vec(dx)?;
    for (s, r) in ds.iter_mut().zip(&sys.r_yd) {
        *s -= r;
    }
    let dyd = ds
        .iter()
        .zip(&sys.d_s)
        .zip(&sys.r_s)
        .map(|((s, d), r)| d * s - r)
        .collect();
    Ok(FullSolution {
        dx: dx.to_vec(),
        ds,
        dy: dy.to_vec(),
        dyd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_system() -> BlockKkt4x4 {
        BlockKkt4x4::new(
            CscMatrix::zeros(2, 2),
            CscMatrix::zeros(0, 2),
            CscMatrix::from_dense_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![1.0, 1.0],
            vec![2.0],
            vec![0.0, 0.0],
            vec![0.0],
            vec![],
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn reduction_by_hand() {
        let red = reduce(&small_system()).unwrap();
        let dense = DenseMatrix::from_symmetric_lower(&red.h_tilde);
        assert_eq!(dense, DenseMatrix::from_rows(&[vec![3.0, 2.0], vec![2.0, 3.0]]).unwrap());
    }

    #[test]
    fn no_inequalities_leaves_h_plus_dx() {
        let h = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 0.5), (1, 1, 2.0)]).unwrap();
        let sys = BlockKkt4x4::new(
            h,
            CscMatrix::from_dense_rows(&[vec![1.0, 0.0]]).unwrap(),
            CscMatrix::zeros(0, 2),
            vec![0.25, 0.5],
            vec![],
            vec![1.0, -1.0],
            vec![],
            vec![3.0],
            vec![],
        )
        .unwrap();
        let red = reduce(&sys).unwrap();
        assert_eq!(red.h_tilde.get(0, 0), 1.25);
        assert_eq!(red.h_tilde.get(1, 0), 0.5);
        assert_eq!(red.h_tilde.get(1, 1), 2.5);
        assert_eq!(red.r_x, vec![1.0, -1.0]);
        assert_eq!(red.r_y, vec![3.0]);
    }

    #[test]
    fn recovery_by_substitution() {
        let sys = BlockKkt4x4::new(
            CscMatrix::identity(2),
            CscMatrix::zeros(0, 2),
            CscMatrix::from_dense_rows(&[vec![1.0, 0.0]]).unwrap(),
            vec![0.0, 0.0],
            vec![2.0],
            vec![0.0, 0.0],
            vec![1.0],
            vec![],
            vec![1.0],
        )
        .unwrap();
        let sol = recover(&sys, &[3.0, 5.0], &[]).unwrap();
        assert_eq!(sol.ds, vec![2.0]);
        assert_eq!(sol.dyd, vec![3.0]);
    }

    #[test]
    fn recovery_without_inequalities_is_empty() {
        let sys = BlockKkt4x4::new(
            CscMatrix::identity(1),
            CscMatrix::zeros(0, 1),
            CscMatrix::zeros(0, 1),
            vec![0.0],
            vec![],
            vec![1.0],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        let sol = recover(&sys, &[1.0], &[]).unwrap();
        assert!(sol.ds.is_empty() && sol.dyd.is_empty());
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let ok = small_system();
        let mut bad = ok.clone();
        bad.d_s = vec![-1.0];
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.r_yd = vec![];
        assert!(matches!(bad.validate(), Err(Error::DimensionMismatch { .. })));
        let mut bad = ok;
        bad.d_x = vec![f64::NAN, 0.0];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn blockwise_norms_match_dense() {
        let sys = small_system();
        assert_eq!(sys.inf_norm(), sys.to_dense().inf_norm());
        let red = reduce(&sys).unwrap();
        assert_eq!(red.inf_norm(), red.to_dense().inf_norm());
    }

    #[test]
    fn apply_matches_dense() {
        let sys = small_system();
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(sys.apply(&v).unwrap(), sys.to_dense().mul_vec(&v).unwrap());
    }
}

//! Symmetric Ruiz equilibration of the saddle-point operator `[H̃ Jᵀ; J 0]`.

use super::Reduced2x2;
use crate::error::{Error, Result};

/// Scale vector `d = [d_x; d_y]` with the scaled system `D K D (D⁻¹ v) = D r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuizScaling {
    pub d_left: Vec<f64>,
    pub iterations_used: usize,
    n_x: usize,
}

impl RuizScaling {
    pub fn identity(n_x: usize, m_c: usize) -> Self {
        Self {
            d_left: vec![1.0; n_x + m_c],
            iterations_used: 0,
            n_x,
        }
    }

    pub fn from_vector(d_left: Vec<f64>, n_x: usize) -> Result<Self> {
        if n_x > d_left.len() {
            return Err(Error::dims("scaling split", d_left.len(), n_x));
        }
        if d_left.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidConfig(
                "scale factors must be positive and finite".into(),
            ));
        }
        Ok(Self {
            d_left,
            iterations_used: 0,
            n_x,
        })
    }

    #[inline]
    pub fn d_x(&self) -> &[f64] {
        &self.d_left[..self.n_x]
    }

    #[inline]
    pub fn d_y(&self) -> &[f64] {
        &self.d_left[self.n_x..]
    }
}

/// Row ∞-norms of `[H̃ Jᵀ; J 0]` with `H̃` in lower storage.
fn row_inf_norms(red: &Reduced2x2) -> Vec<f64> {
    let n_x = red.n_x();
    let mut norms = vec![0.0f64; n_x + red.m_c()];
    for (i, j, v) in red.h_tilde.iter() {
        norms[i] = norms[i].max(v.abs());
        norms[j] = norms[j].max(v.abs());
    }
    for (r, c, v) in red.j.iter() {
        norms[c] = norms[c].max(v.abs());
        norms[n_x + r] = norms[n_x + r].max(v.abs());
    }
    norms
}

/// Divides row and column `i` by `root[i]`.
fn apply_scaling(red: &Reduced2x2, root: &[f64]) -> Reduced2x2 {
    let n_x = red.n_x();
    let (rx, ry) = root.split_at(n_x);
    let mut h_tilde = red.h_tilde.clone();
    let mut j = red.j.clone();
    for c in 0..n_x {
        let (start, end) = (h_tilde.col_ptr()[c], h_tilde.col_ptr()[c + 1]);
        for p in start..end {
            let r = h_tilde.row_idx()[p];
            h_tilde.values_mut()[p] /= rx[r] * rx[c];
        }
        let (start, end) = (j.col_ptr()[c], j.col_ptr()[c + 1]);
        for p in start..end {
            let r = j.row_idx()[p];
            j.values_mut()[p] /= ry[r] * rx[c];
        }
    }
    Reduced2x2 {
        h_tilde,
        j,
        r_x: red.r_x.iter().zip(rx).map(|(r, d)| r / d).collect(),
        r_y: red.r_y.iter().zip(ry).map(|(r, d)| r / d).collect(),
    }
}

/// Repeatedly divides each row and column by the square root of its ∞-norm until every
/// nonempty row has norm in `[1 - tol, 1 + tol]` or `max_iters` passes have been made. Rows
/// with no stored nonzeros keep scale 1.
///
/// `iterations_used` counts norm evaluations, so an already equilibrated system reports 1.
pub fn ruiz_scale(red: &Reduced2x2, max_iters: usize, tol: f64) -> (Reduced2x2, RuizScaling) {
    let mut scaling = RuizScaling::identity(red.n_x(), red.m_c());
    let mut current = red.clone();
    for pass in 1..=max_iters {
        scaling.iterations_used = pass;
        let norms = row_inf_norms(&current);
        let converged = norms
            .iter()
            .all(|&n| n == 0.0 || (n - 1.0).abs() <= tol);
        if converged {
            break;
        }
        let root: Vec<f64> = norms
            .iter()
            .map(|&n| if n > 0.0 && n.is_finite() { n.sqrt() } else { 1.0 })
            .collect();
        current = apply_scaling(&current, &root);
        for (d, r) in scaling.d_left.iter_mut().zip(&root) {
            *d /= r;
        }
    }
    (current, scaling)
}

/// Maps a solution of the scaled system back: `Δx = D_x Δx'`, `Δy = D_y Δy'`.
pub fn unscale_solution(
    scaling: &RuizScaling,
    dx_scaled: &[f64],
    dy_scaled: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if dx_scaled.len() != scaling.d_x().len() {
        return Err(Error::dims("scaled dx", scaling.d_x().len(), dx_scaled.len()));
    }
    if dy_scaled.len() != scaling.d_y().len() {
        return Err(Error::dims("scaled dy", scaling.d_y().len(), dy_scaled.len()));
    }
    let dx = dx_scaled.iter().zip(scaling.d_x()).map(|(v, d)| v * d).collect();
    let dy = dy_scaled.iter().zip(scaling.d_y()).map(|(v, d)| v * d).collect();
    Ok((dx, dy))
}

/// Inverse of [`unscale_solution`].
pub fn scale_solution(
    scaling: &RuizScaling,
    dx: &[f64],
    dy: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if dx.len() != scaling.d_x().len() || dy.len() != scaling.d_y().len() {
        return Err(Error::dims(
            "solution",
            scaling.d_left.len(),
            dx.len() + dy.len(),
        ));
    }
    let sx = dx.iter().zip(scaling.d_x()).map(|(v, d)| v / d).collect();
    let sy = dy.iter().zip(scaling.d_y()).map(|(v, d)| v / d).collect();
    Ok((sx, sy))
}

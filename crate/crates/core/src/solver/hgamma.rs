use crate::error::{Error, Result};
use crate::kkt::Reduced2x2;
use crate::sparse::CscMatrix;

/// `H_γ = H̃ + γ JᵀJ` (lower storage) with `r̂_x = r_x + γ Jᵀ r_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct HGammaSystem {
    pub h_gamma: CscMatrix,
    pub r_hat_x: Vec<f64>,
    pub gamma_used: f64,
}

/// Assembles `H_γ` on the union of the patterns of `H̃`, `JᵀJ` and the diagonal. The pattern
/// does not depend on `γ`, so one symbolic factor serves every `γ` and every matrix of a
/// pattern-uniform sequence.
pub fn assemble_h_gamma(red: &Reduced2x2, gamma: f64) -> Result<HGammaSystem> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidConfig(format!("gamma must be >= 0, got {gamma}")));
    }
    let n_x = red.n_x();
    if red.j.ncols() != n_x {
        return Err(Error::dims("J columns", n_x, red.j.ncols()));
    }
    let jtj = red.j.gram_lower(None)?;
    let diag = CscMatrix::from_diagonal(&vec![0.0; n_x]);
    let h_gamma = CscMatrix::linear_combination(&[(1.0, &red.h_tilde), (gamma, &jtj), (0.0, &diag)])?;
    let mut r_hat_x = red.r_x.clone();
    red.j.mul_vec_transpose_acc(&red.r_y, gamma, &mut r_hat_x);
    Ok(HGammaSystem {
        h_gamma,
        r_hat_x,
        gamma_used: gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_zero_passes_through() {
        let h = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 0, 1.0), (1, 1, 3.0)]).unwrap();
        let red = Reduced2x2 {
            h_tilde: h.clone(),
            j: CscMatrix::from_dense_rows(&[vec![1.0, 1.0]]).unwrap(),
            r_x: vec![1.0, 2.0],
            r_y: vec![5.0],
        };
        let hg = assemble_h_gamma(&red, 0.0).unwrap();
        assert_eq!(hg.h_gamma, h);
        assert_eq!(hg.r_hat_x, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_h_tilde_with_unit_row() {
        let red = Reduced2x2 {
            h_tilde: CscMatrix::zeros(2, 2),
            j: CscMatrix::from_dense_rows(&[vec![1.0, 1.0]]).unwrap(),
            r_x: vec![1.0, -1.0],
            r_y: vec![2.0],
        };
        let hg = assemble_h_gamma(&red, 1e4).unwrap();
        assert_eq!(hg.h_gamma.get(0, 0), 1e4);
        assert_eq!(hg.h_gamma.get(1, 0), 1e4);
        assert_eq!(hg.h_gamma.get(1, 1), 1e4);
        assert_eq!(hg.r_hat_x, vec![20001.0, 19999.0]);
    }

    #[test]
    fn pattern_is_independent_of_gamma() {
        let red = Reduced2x2 {
            h_tilde: CscMatrix::zeros(3, 3),
            j: CscMatrix::from_dense_rows(&[vec![1.0, 0.0, 2.0]]).unwrap(),
            r_x: vec![0.0; 3],
            r_y: vec![0.0],
        };
        let a = assemble_h_gamma(&red, 0.0).unwrap().h_gamma;
        let b = assemble_h_gamma(&red, 1e8).unwrap().h_gamma;
        assert!(a.same_pattern(&b));
        assert_eq!(a.diagonal().len(), 3);
        assert_eq!(a.nnz(), 4);
        assert!(assemble_h_gamma(&red, -1.0).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solver parameters. Defaults: `γ = 1e4`, `δ_min = δ₂ = 1e-9`, `δ_max = 1e-6`, CG relative
/// tolerance `1e-12` with at most 500 iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub gamma: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta2: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// CG aborts when `pᵀSp <= threshold · (largest Rayleigh quotient seen) · pᵀp`.
    pub small_quadratic_threshold: f64,
    /// Relative pivot floor; the absolute floor is this times `max|diag(H_γ)|`.
    pub pivot_floor: f64,
    pub ruiz_tol: f64,
    pub ruiz_max_iters: usize,
    /// Skip equilibration entirely (the solver then works on the unscaled 2×2 system).
    pub ruiz_enabled: bool,
    /// Solve the matrices of a sequence concurrently. Each matrix then starts from a fresh
    /// regularization state instead of inheriting the previous `δ_min`.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1e4,
            delta_min: 1e-9,
            delta_max: 1e-6,
            delta2: 1e-9,
            cg_tol: 1e-12,
            cg_max_iter: 500,
            small_quadratic_threshold: 1e-12,
            pivot_floor: crate::sparse::PIVOT_FLOOR_REL,
            ruiz_tol: 0.01,
            ruiz_max_iters: 20,
            ruiz_enabled: true,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_nonneg(self.gamma) {
            return bad("gamma must be finite and >= 0");
        }
        if !finite_pos(self.delta_min) || !finite_pos(self.delta_max) {
            return bad("delta_min and delta_max must be finite and > 0");
        }
        if self.delta_min > self.delta_max {
            return bad("delta_min must not exceed delta_max");
        }
        if !finite_nonneg(self.delta2) {
            return bad("delta2 must be finite and >= 0");
        }
        if !finite_pos(self.cg_tol) || !finite_pos(self.ruiz_tol) {
            return bad("cg_tol and ruiz_tol must be finite and > 0");
        }
        if !finite_nonneg(self.small_quadratic_threshold) || !finite_nonneg(self.pivot_floor) {
            return bad("small_quadratic_threshold and pivot_floor must be finite and >= 0");
        }
        Ok(())
    }
}

/// The δ₁ ladder state. `delta_min_current` is the doubling base and carries over from one
/// matrix to the next; `delta1` and `attempts` describe the most recent matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationState {
    pub delta1: f64,
    pub delta_min_current: f64,
    pub attempts: usize,
}

impl RegularizationState {
    pub fn new(cfg: &SolverConfig) -> Self {
        Self {
            delta1: 0.0,
            delta_min_current: cfg.delta_min,
            attempts: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_inverted_delta_range() {
        let cfg = SolverConfig {
            delta_min: 1e-5,
            delta_max: 1e-6,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig {
            gamma: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: SolverConfig = serde_json::from_str(r#"{"gamma": 100.0}"#).unwrap();
        assert_eq!(cfg.gamma, 100.0);
        assert_eq!(cfg.delta_max, 1e-6);
    }
}

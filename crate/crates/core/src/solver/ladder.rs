use std::sync::Arc;

use super::{HGammaSystem, RegularizationState, SolverConfig};
use crate::error::Result;
use crate::sparse::{numeric_cholesky_shifted, NotSpdFailure, NumericCholesky, SymbolicFactor};

#[derive(Debug, Clone)]
pub enum LadderOutcome {
    Factorized(NumericCholesky),
    /// Every δ₁ up to the `δ_max` guard failed; carries the last pivot failure.
    DeltaMaxExceeded(NotSpdFailure),
}

/// Absolute pivot floor for `H_γ` under a relative factor.
pub fn pivot_floor_for(hg: &HGammaSystem, relative: f64) -> f64 {
    let max_diag = hg.h_gamma.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    relative * max_diag
}

/// One factorization attempt of `H_δ = H_γ + δ₁ I`.
pub fn try_factorize(
    hg: &HGammaSystem,
    symbolic: &Arc<SymbolicFactor>,
    delta1: f64,
    cfg: &SolverConfig,
) -> Result<std::result::Result<NumericCholesky, NotSpdFailure>> {
    let floor = pivot_floor_for(hg, cfg.pivot_floor);
    numeric_cholesky_shifted(&hg.h_gamma, symbolic, delta1, floor)
}

/// Factorizes `H_γ + δ₁ I`, first with `δ₁ = 0`, then with `δ₁ = δ_min`, doubling `δ_min`
/// after each failed attempt while `δ₁ <= δ_max / 2`.
///
/// `state.delta_min_current` carries the doubled base forward to the next matrix. It is
/// reset to `cfg.delta_min` after an exhausted ladder, and also at entry when a previous
/// matrix pushed it past `δ_max`, so the ladder never proposes a shift above `δ_max`.
pub fn factorize_with_ladder(
    hg: &HGammaSystem,
    symbolic: &Arc<SymbolicFactor>,
    cfg: &SolverConfig,
    state: &mut RegularizationState,
) -> Result<LadderOutcome> {
    if state.delta_min_current > cfg.delta_max {
        state.delta_min_current = cfg.delta_min;
    }
    state.delta1 = 0.0;
    state.attempts = 1;
    let mut last = match try_factorize(hg, symbolic, 0.0, cfg)? {
        Ok(factor) => return Ok(LadderOutcome::Factorized(factor)),
        Err(failure) => failure,
    };
    log::debug!("factorization failed with delta1 = 0: {last}");

    while state.delta1 <= cfg.delta_max / 2.0 {
        state.delta1 = state.delta_min_current;
        state.delta_min_current *= 2.0;
        state.attempts += 1;
        match try_factorize(hg, symbolic, state.delta1, cfg)? {
            Ok(factor) => {
                log::debug!(
                    "factorized with delta1 = {:e} after {} attempts",
                    state.delta1,
                    state.attempts
                );
                return Ok(LadderOutcome::Factorized(factor));
            }
            Err(failure) => last = failure,
        }
    }
    log::warn!(
        "regularization ladder exhausted at delta1 = {:e} ({} attempts)",
        state.delta1,
        state.attempts
    );
    state.delta_min_current = cfg.delta_min;
    Ok(LadderOutcome::DeltaMaxExceeded(last))
}

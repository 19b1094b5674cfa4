//! The hybrid solve: shifted Cholesky of `H_γ + δ₁I` for the (1,1) block, conjugate
//! gradients on the Schur complement `J H_δ⁻¹ Jᵀ (+ δ₂ I)` for `Δy`.

mod cg;
mod config;
mod hgamma;
mod ladder;

pub use cg::{
    cg_schur, conjugate_gradient, CgOptions, CgResult, CgStatus, LinearOperator, SchurOperator,
};
pub use config::{RegularizationState, SolverConfig};
pub use hgamma::{assemble_h_gamma, HGammaSystem};
pub use ladder::{factorize_with_ladder, pivot_floor_for, try_factorize, LadderOutcome};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kkt::{self, BlockKkt4x4, FullSolution, Reduced2x2, RuizScaling};
use crate::metrics::{self, DensityReport, ErrorReport};
use crate::sparse::{amd_order, symbolic_cholesky, NumericCholesky, SymbolicFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Solved,
    SolvedWithDelta2,
    FailedDeltaMaxExceeded,
    /// CG hit its iteration limit, or the δ₂ restart also lost curvature.
    FailedCgNotConverged,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Solved | SolveStatus::SolvedWithDelta2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "Solved",
            SolveStatus::SolvedWithDelta2 => "SolvedWithDelta2",
            SolveStatus::FailedDeltaMaxExceeded => "FailedDeltaMaxExceeded",
            SolveStatus::FailedCgNotConverged => "FailedCgNotConverged",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-matrix outcome. Error metrics are `None` when no solution was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub gamma: f64,
    pub delta1_final: f64,
    pub delta2_used: f64,
    pub cg_iterations: usize,
    pub cg_relative_residual: Option<f64>,
    pub small_quadratic_detected: bool,
    pub factorization_attempts: usize,
    pub ruiz_iterations: usize,
    pub symbolic_reused: bool,
    pub be_4x4: Option<f64>,
    pub rr_4x4: Option<f64>,
    pub be_2x2: Option<f64>,
    pub rr_2x2: Option<f64>,
    pub be_2x2_scaled: Option<f64>,
    pub rr_2x2_scaled: Option<f64>,
    pub density: DensityReport,
}

/// Outcome of the hybrid solve of one 2×2 system.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub status: SolveStatus,
    /// `(Δx, Δy)`; absent when the ladder was exhausted.
    pub solution: Option<(Vec<f64>, Vec<f64>)>,
    pub delta1: f64,
    pub delta2_used: f64,
    pub cg_iterations: usize,
    pub cg_relative_residual: f64,
    pub small_quadratic_detected: bool,
    pub factorization_attempts: usize,
    pub factor: Option<NumericCholesky>,
    pub symbolic: Arc<SymbolicFactor>,
    /// A fresh symbolic analysis was run (no usable shared factor was supplied).
    pub symbolic_analyzed: bool,
}

/// AMD ordering plus symbolic factorization of a lower-triangle pattern.
pub fn analyze(pattern: &crate::sparse::CscMatrix) -> Result<SymbolicFactor> {
    let ordering = amd_order(pattern)?;
    symbolic_cholesky(pattern, &ordering)
}

/// Solves `[H̃ Jᵀ; J 0] [Δx; Δy] = [r_x; r_y]`:
/// factorize `H_δ`, set `w = H_δ⁻¹ r̂_x`, run CG on `S Δy = J w − r_y` (restarting once on
/// `S + δ₂I` if the curvature collapses), then `Δx = H_δ⁻¹ (r̂_x − Jᵀ Δy)`.
///
/// `shared` is reused when its pattern matches `H_γ`; otherwise a new analysis is run.
pub fn solve_reduced(
    red: &Reduced2x2,
    cfg: &SolverConfig,
    shared: Option<&Arc<SymbolicFactor>>,
    state: &mut RegularizationState,
) -> Result<ReducedSolution> {
    solve_reduced_observed(red, cfg, shared, state, None)
}

/// [`solve_reduced`] with an observer that receives every CG iterate `(k, Δy_k)`.
pub fn solve_reduced_observed(
    red: &Reduced2x2,
    cfg: &SolverConfig,
    shared: Option<&Arc<SymbolicFactor>>,
    state: &mut RegularizationState,
    observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<ReducedSolution> {
    cfg.validate()?;
    let hg = assemble_h_gamma(red, cfg.gamma)?;
    let (symbolic, symbolic_analyzed) = match shared {
        Some(s) if s.matches(&hg.h_gamma) => (Arc::clone(s), false),
        _ => (Arc::new(analyze(&hg.h_gamma)?), true),
    };

    let factor = match factorize_with_ladder(&hg, &symbolic, cfg, state)? {
        LadderOutcome::Factorized(f) => f,
        LadderOutcome::DeltaMaxExceeded(_) => {
            return Ok(ReducedSolution {
                status: SolveStatus::FailedDeltaMaxExceeded,
                solution: None,
                delta1: state.delta1,
                delta2_used: 0.0,
                cg_iterations: 0,
                cg_relative_residual: f64::NAN,
                small_quadratic_detected: false,
                factorization_attempts: state.attempts,
                factor: None,
                symbolic,
                symbolic_analyzed,
            });
        }
    };

    let w = factor.solve(&hg.r_hat_x)?;
    let mut rhs = red.j.mul_vec(&w)?;
    for (v, r) in rhs.iter_mut().zip(&red.r_y) {
        *v -= r;
    }

    let op = SchurOperator::new(&factor, &red.j, 0.0);
    let first = cg_schur(&op, &rhs, cfg, observer);
    let mut iterations = first.iterations;
    let small_quadratic_detected = first.small_quadratic_detected();
    let (dy, status, delta2_used, relres) = match first.status {
        CgStatus::Converged => (first.x, SolveStatus::Solved, 0.0, first.relative_residual),
        CgStatus::MaxIterations => (
            first.x,
            SolveStatus::FailedCgNotConverged,
            0.0,
            first.relative_residual,
        ),
        CgStatus::SmallCurvature => {
            log::debug!("restarting CG with delta2 = {:e}", cfg.delta2);
            let op = SchurOperator::new(&factor, &red.j, cfg.delta2);
            let second = cg_schur(&op, &rhs, cfg, None);
            iterations += second.iterations;
            let status = if second.status == CgStatus::Converged {
                SolveStatus::SolvedWithDelta2
            } else {
                SolveStatus::FailedCgNotConverged
            };
            (second.x, status, cfg.delta2, second.relative_residual)
        }
    };

    let mut t = hg.r_hat_x.clone();
    red.j.mul_vec_transpose_acc(&dy, -1.0, &mut t);
    let dx = factor.solve(&t)?;

    Ok(ReducedSolution {
        status,
        solution: Some((dx, dy)),
        delta1: state.delta1,
        delta2_used,
        cg_iterations: iterations,
        cg_relative_residual: relres,
        small_quadratic_detected,
        factorization_attempts: state.attempts,
        factor: Some(factor),
        symbolic,
        symbolic_analyzed,
    })
}

/// Result of [`solve_full`].
#[derive(Debug, Clone)]
pub struct FullSolve {
    pub solution: Option<FullSolution>,
    pub report: SolveReport,
    pub symbolic: Arc<SymbolicFactor>,
    pub scaling: RuizScaling,
}

fn metric_pair(r: ErrorReport) -> (Option<f64>, Option<f64>) {
    (Some(r.be), Some(r.rr))
}

/// Reduce, equilibrate, solve, unscale and recover one block-4×4 system. Error metrics are
/// measured on the original 4×4 and 2×2 systems and on the scaled 2×2 system.
pub fn solve_full(
    sys: &BlockKkt4x4,
    cfg: &SolverConfig,
    shared: Option<&Arc<SymbolicFactor>>,
    state: &mut RegularizationState,
) -> Result<FullSolve> {
    let red = kkt::reduce(sys)?;
    let (scaled, scaling) = if cfg.ruiz_enabled {
        kkt::ruiz_scale(&red, cfg.ruiz_max_iters, cfg.ruiz_tol)
    } else {
        (red.clone(), RuizScaling::identity(red.n_x(), red.m_c()))
    };
    let inner = solve_reduced(&scaled, cfg, shared, state)?;
    let density = metrics::density_from_symbolic(&scaled, &inner.symbolic);

    let mut report = SolveReport {
        status: inner.status,
        gamma: cfg.gamma,
        delta1_final: inner.delta1,
        delta2_used: inner.delta2_used,
        cg_iterations: inner.cg_iterations,
        cg_relative_residual: Some(inner.cg_relative_residual).filter(|r| r.is_finite()),
        small_quadratic_detected: inner.small_quadratic_detected,
        factorization_attempts: inner.factorization_attempts,
        ruiz_iterations: scaling.iterations_used,
        symbolic_reused: !inner.symbolic_analyzed,
        be_4x4: None,
        rr_4x4: None,
        be_2x2: None,
        rr_2x2: None,
        be_2x2_scaled: None,
        rr_2x2_scaled: None,
        density,
    };

    let solution = match &inner.solution {
        None => None,
        Some((dx_s, dy_s)) => {
            let stacked_s = [&dx_s[..], dy_s].concat();
            (report.be_2x2_scaled, report.rr_2x2_scaled) = metric_pair(metrics::error_report(
                |v| scaled.apply(v),
                &stacked_s,
                &scaled.rhs(),
                scaled.inf_norm(),
            )?);
            let (dx, dy) = kkt::unscale_solution(&scaling, dx_s, dy_s)?;
            let stacked = [&dx[..], &dy].concat();
            (report.be_2x2, report.rr_2x2) = metric_pair(metrics::error_report(
                |v| red.apply(v),
                &stacked,
                &red.rhs(),
                red.inf_norm(),
            )?);
            let full = kkt::recover(sys, &dx, &dy)?;
            (report.be_4x4, report.rr_4x4) = metric_pair(metrics::error_report(
                |v| sys.apply(v),
                &full.stacked(),
                &sys.rhs(),
                sys.inf_norm(),
            )?);
            Some(full)
        }
    };

    Ok(FullSolve {
        solution,
        report,
        symbolic: inner.symbolic,
        scaling,
    })
}

/// Work counters for a sequence solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceStats {
    pub symbolic_analyses: usize,
    pub numeric_factorizations: usize,
}

#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub reports: Vec<SolveReport>,
    pub solutions: Vec<Option<FullSolution>>,
    pub stats: SequenceStats,
    pub pattern_uniform: bool,
    /// Regularization state after the last matrix (sequential mode only).
    pub final_state: Option<RegularizationState>,
}

/// Solves a sequence, reusing one symbolic factor while the `H_γ` pattern stays the same.
///
/// Sequentially, the ladder's `δ_min` is threaded from matrix to matrix. With
/// `cfg.parallel`, the first matrix is solved alone to produce the symbolic factor and the
/// rest run concurrently, each from a fresh regularization state.
pub fn solve_sequence(seq: &[BlockKkt4x4], cfg: &SolverConfig) -> Result<SequenceOutcome> {
    cfg.validate()?;
    if seq.is_empty() {
        return Err(Error::InvalidSpec("empty sequence".into()));
    }
    let pattern_uniform = seq.windows(2).all(|w| w[0].same_pattern(&w[1]));
    let mut stats = SequenceStats::default();
    let mut tally = |out: &FullSolve| {
        stats.symbolic_analyses += usize::from(!out.report.symbolic_reused);
        stats.numeric_factorizations += out.report.factorization_attempts;
    };

    let mut reports = Vec::with_capacity(seq.len());
    let mut solutions = Vec::with_capacity(seq.len());
    let mut state = RegularizationState::new(cfg);
    let first = solve_full(&seq[0], cfg, None, &mut state)?;
    tally(&first);
    let mut shared = Arc::clone(&first.symbolic);
    reports.push(first.report);
    solutions.push(first.solution);

    if cfg.parallel {
        let rest: Vec<FullSolve> = seq[1..]
            .par_iter()
            .map(|sys| {
                let mut fresh = RegularizationState::new(cfg);
                solve_full(sys, cfg, Some(&shared), &mut fresh)
            })
            .collect::<Result<_>>()?;
        for out in rest {
            tally(&out);
            reports.push(out.report);
            solutions.push(out.solution);
        }
        return Ok(SequenceOutcome {
            reports,
            solutions,
            stats,
            pattern_uniform,
            final_state: None,
        });
    }

    for (k, sys) in seq.iter().enumerate().skip(1) {
        let out = solve_full(sys, cfg, Some(&shared), &mut state)?;
        if !out.report.status.is_success() {
            log::warn!("matrix {k}: {}", out.report.status);
        }
        tally(&out);
        shared = Arc::clone(&out.symbolic);
        reports.push(out.report);
        solutions.push(out.solution);
    }
    Ok(SequenceOutcome {
        reports,
        solutions,
        stats,
        pattern_uniform,
        final_state: Some(state),
    })
}

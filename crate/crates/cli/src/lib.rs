//! Report files written by the `hybrid-kkt` command: per-matrix CSV tables, the JSON run
//! manifest, and the plain-text summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hybrid_kkt::solver::{SequenceStats, SolveReport, SolverConfig};
use serde::{Deserialize, Serialize};

/// Version tag of the CSV column layouts below. Bump it whenever a column changes.
pub const CSV_SCHEMA: &str = "hybrid-kkt-report/1";
pub const RUN_FORMAT: &str = "hybrid-kkt-run/1";

pub const SOLVE_COLUMNS: [&str; 11] = [
    "k",
    "delta1",
    "delta2",
    "cg_iterations",
    "be_4x4",
    "rr_4x4",
    "be_2x2",
    "rr_2x2",
    "nnz_fac",
    "ratio",
    "status",
];

pub const SWEEP_COLUMNS: [&str; 7] = [
    "gamma",
    "k",
    "cg_iterations",
    "be_4x4",
    "rr_4x4",
    "delta1",
    "status",
];

/// Solves of one sequence at one `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRun {
    pub gamma: f64,
    pub stats: SequenceStats,
    pub reports: Vec<SolveReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub csv_schema: String,
    pub config: SolverConfig,
    pub input_manifest: PathBuf,
    pub outputs: Vec<PathBuf>,
    pub pattern_uniform: bool,
    pub runs: Vec<GammaRun>,
}

impl RunManifest {
    pub fn all_succeeded(&self) -> bool {
        self.runs
            .iter()
            .flat_map(|r| &r.reports)
            .all(|r| r.status.is_success())
    }
}

/// Floats are written with 17 significant digits so files are byte-stable and lossless.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub fn solve_rows(reports: &[SolveReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                k.to_string(),
                fmt_float(r.delta1_final),
                fmt_float(r.delta2_used),
                r.cg_iterations.to_string(),
                fmt_opt(r.be_4x4),
                fmt_opt(r.rr_4x4),
                fmt_opt(r.be_2x2),
                fmt_opt(r.rr_2x2),
                r.density.nnz_fac.to_string(),
                fmt_float(r.density.ratio),
                r.status.to_string(),
            ]
        })
        .collect()
}

pub fn sweep_rows(runs: &[GammaRun]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for run in runs {
        for (k, r) in run.reports.iter().enumerate() {
            rows.push(vec![
                fmt_float(run.gamma),
                k.to_string(),
                r.cg_iterations.to_string(),
                fmt_opt(r.be_4x4),
                fmt_opt(r.rr_4x4),
                fmt_float(r.delta1_final),
                r.status.to_string(),
            ]);
        }
    }
    rows
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_run_manifest(path: &Path, run: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(run)?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

pub fn read_run_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let run: RunManifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    anyhow::ensure!(
        run.format == RUN_FORMAT,
        "{}: unsupported run format {:?}",
        path.display(),
        run.format
    );
    Ok(run)
}

/// Mean CG iterations over the reports of one run.
pub fn mean_cg_iterations(reports: &[SolveReport]) -> f64 {
    if reports.is_empty() {
        return 0.0;
    }
    reports.iter().map(|r| r.cg_iterations as f64).sum::<f64>() / reports.len() as f64
}

/// Human-readable summary, one block per `γ`.
pub fn summarize(run: &RunManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "input: {}", run.input_manifest.display());
    let _ = writeln!(out, "pattern uniform: {}", run.pattern_uniform);
    for block in &run.runs {
        let reports = &block.reports;
        let failures = reports.iter().filter(|r| !r.status.is_success()).count();
        let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
        let mut delta1: BTreeMap<String, usize> = BTreeMap::new();
        for r in reports {
            *statuses.entry(r.status.as_str()).or_default() += 1;
            *delta1.entry(format!("{:e}", r.delta1_final)).or_default() += 1;
        }
        let max_it = reports.iter().map(|r| r.cg_iterations).max().unwrap_or(0);
        let worst_be = reports
            .iter()
            .filter_map(|r| r.be_4x4)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        let delta2_count = reports.iter().filter(|r| r.delta2_used > 0.0).count();
        let n = reports.len().max(1) as f64;
        let mean_ratio = reports.iter().map(|r| r.density.ratio).sum::<f64>() / n;
        let mean_rho = reports.iter().map(|r| r.density.rho_c).sum::<f64>() / n;

        let _ = writeln!(out, "\ngamma = {:e}", block.gamma);
        let _ = writeln!(out, "  matrices: {}", reports.len());
        let _ = writeln!(out, "  failures: {failures}");
        let list: Vec<String> = statuses.iter().map(|(s, c)| format!("{s}={c}")).collect();
        let _ = writeln!(out, "  status: {}", list.join(", "));
        let _ = writeln!(
            out,
            "  cg iterations: mean {:.3}, max {max_it}",
            mean_cg_iterations(reports)
        );
        match worst_be {
            Some(be) => {
                let _ = writeln!(out, "  worst be_4x4: {be:.3e}");
            }
            None => {
                let _ = writeln!(out, "  worst be_4x4: n/a");
            }
        }
        let hist: Vec<String> = delta1.iter().map(|(d, c)| format!("{d} x{c}")).collect();
        let _ = writeln!(out, "  delta1 used: {}", hist.join(", "));
        let _ = writeln!(out, "  delta2 restarts: {delta2_count}");
        let _ = writeln!(
            out,
            "  density: mean nnz_fac/nnz_op {mean_ratio:.3}, mean rho_c {mean_rho:.3}"
        );
        let _ = writeln!(
            out,
            "  work: {} symbolic analyses, {} numeric factorizations",
            block.stats.symbolic_analyses, block.stats.numeric_factorizations
        );
    }
    out
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hybrid_kkt::generate::{generate, verify_class, GeneratorSpec, Indefiniteness, VERIFY_LIMIT};
use hybrid_kkt::kkt::{load_sequence, write_sequence};
use hybrid_kkt::solver::{solve_sequence, SolverConfig};
use hybrid_kkt_cli::{
    read_run_manifest, solve_rows, summarize, sweep_rows, write_csv, write_run_manifest, GammaRun,
    RunManifest, CSV_SCHEMA, RUN_FORMAT, SOLVE_COLUMNS, SWEEP_COLUMNS,
};

/// Hybrid direct-iterative solver for block KKT systems.
#[derive(Parser, Debug)]
#[command(name = "hybrid-kkt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic sequence of KKT systems.
    Gen(GenArgs),
    /// Solve every system of a sequence and write report.csv and run.json.
    Solve(SolveArgs),
    /// Solve a sequence once per gamma and write sweep.csv and run.json.
    Sweep(SweepArgs),
    /// Print a summary of a run.json file.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 40)]
    n_x: usize,
    #[arg(long, default_value_t = 10)]
    m_c: usize,
    #[arg(long, default_value_t = 8)]
    m_d: usize,
    #[arg(long, default_value_t = 4)]
    graph_degree: usize,
    /// spd_on_nullspace, indefinite, rank_deficient_j or inconsistent_rank_deficient
    #[arg(long, default_value = "spd_on_nullspace")]
    class: Indefiniteness,
    #[arg(long, default_value_t = 3)]
    length: usize,
    #[arg(long, default_value_t = 0.01)]
    drift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the dense check of the requested class (always skipped above n_x = 500).
    #[arg(long)]
    no_verify: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta_min: Option<f64>,
    #[arg(long)]
    delta_max: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iter: Option<usize>,
    #[arg(long)]
    small_quadratic_threshold: Option<f64>,
    /// Relative pivot floor (multiplied by the largest diagonal entry of H_gamma).
    #[arg(long)]
    pivot_floor: Option<f64>,
    #[arg(long)]
    ruiz_tol: Option<f64>,
    #[arg(long)]
    ruiz_max_iters: Option<usize>,
    #[arg(long)]
    no_ruiz: bool,
    /// Solve matrices concurrently; each starts from a fresh delta_min.
    #[arg(long)]
    parallel: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            gamma,
            delta_min,
            delta_max,
            delta2,
            cg_tol,
            cg_max_iter,
            small_quadratic_threshold,
            pivot_floor,
            ruiz_tol,
            ruiz_max_iters
        );
        cfg.ruiz_enabled = !self.no_ruiz;
        cfg.parallel = self.parallel;
        cfg
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    manifest: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    manifest: PathBuf,
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    run: PathBuf,
}

/// Exit 1: some matrix failed or the run itself broke. Exit 2: bad input or usage.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<hybrid_kkt::Error> for Failure {
    fn from(e: hybrid_kkt::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn cmd_gen(args: &GenArgs) -> std::result::Result<bool, Failure> {
    let spec = GeneratorSpec {
        n_x: args.n_x,
        m_c: args.m_c,
        m_d: args.m_d,
        graph_degree: args.graph_degree,
        indefiniteness: args.class,
        sequence_length: args.length,
        drift: args.drift,
        seed: args.seed,
    };
    let systems = usage(generate(&spec).map_err(Into::into))?;
    if !args.no_verify && spec.n_x <= VERIFY_LIMIT {
        for (k, sys) in systems.iter().enumerate() {
            verify_class(sys, spec.indefiniteness).with_context(|| format!("system {k}"))?;
        }
    }
    let path = write_sequence(&args.out, &systems)?;
    let spec_path = args.out.join("generator.json");
    std::fs::write(&spec_path, serde_json::to_string_pretty(&spec).context("spec")?)
        .with_context(|| format!("writing {}", spec_path.display()))?;
    println!("{}", path.display());
    Ok(true)
}

fn load(manifest: &Path) -> std::result::Result<hybrid_kkt::kkt::LoadedSequence, Failure> {
    usage(load_sequence(manifest).with_context(|| format!("loading {}", manifest.display())))
}

fn run_gammas(
    manifest: &Path,
    cfg: &SolverConfig,
    gammas: &[f64],
) -> std::result::Result<(RunManifest, bool), Failure> {
    usage(cfg.validate().map_err(Into::into))?;
    let seq = load(manifest)?;
    if !seq.pattern_uniform {
        log::warn!("sequence is not pattern-uniform; symbolic analysis is redone as needed");
    }
    let mut runs = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let cfg = SolverConfig {
            gamma,
            ..cfg.clone()
        };
        usage(cfg.validate().map_err(Into::into))?;
        let out = solve_sequence(&seq.systems, &cfg)?;
        runs.push(GammaRun {
            gamma,
            stats: out.stats,
            reports: out.reports,
        });
    }
    let run = RunManifest {
        format: RUN_FORMAT.to_string(),
        csv_schema: CSV_SCHEMA.to_string(),
        config: cfg.clone(),
        input_manifest: manifest.to_path_buf(),
        outputs: Vec::new(),
        pattern_uniform: seq.pattern_uniform,
        runs,
    };
    let ok = run.all_succeeded();
    Ok((run, ok))
}

fn finish(mut run: RunManifest, out: &Path, csv_name: &str) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv_path = out.join(csv_name);
    let run_path = out.join("run.json");
    if csv_name == "report.csv" {
        write_csv(&csv_path, &SOLVE_COLUMNS, &solve_rows(&run.runs[0].reports))?;
    } else {
        write_csv(&csv_path, &SWEEP_COLUMNS, &sweep_rows(&run.runs))?;
    }
    run.outputs = vec![csv_path.clone(), run_path.clone()];
    write_run_manifest(&run_path, &run)?;
    println!("{}", csv_path.display());
    println!("{}", run_path.display());
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> std::result::Result<bool, Failure> {
    let cfg = args.solver.config();
    let (run, ok) = run_gammas(&args.manifest, &cfg, &[cfg.gamma])?;
    finish(run, &args.out, "report.csv")?;
    Ok(ok)
}

fn cmd_sweep(args: &SweepArgs) -> std::result::Result<bool, Failure> {
    let cfg = args.solver.config();
    let (run, ok) = run_gammas(&args.manifest, &cfg, &args.gammas)?;
    finish(run, &args.out, "sweep.csv")?;
    Ok(ok)
}

fn cmd_report(args: &ReportArgs) -> std::result::Result<bool, Failure> {
    let run = usage(read_run_manifest(&args.run))?;
    print!("{}", summarize(&run));
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYBRID_KKT_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one matrix was not solved");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Synthetic KKT sequences on sparse grid-like graphs.
//!
//! `H` is built as `M − α JᵀJ` with `M` a weighted graph Laplacian plus a positive diagonal,
//! so `H̃ = M + D_x + J_dᵀ D_s J_d − α JᵀJ` is positive definite on `null(J)` while usually
//! indefinite overall. Every row of `J` owns a distinct pivot column carrying an entry of
//! magnitude at least 2.25 next to at most two entries of magnitude below 0.5, which keeps
//! `J` of full row rank under the allowed drift. Right-hand sides are `K x*` for a random
//! `x*`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dense_rank, DenseMatrix, RANK_TOL};
use crate::error::{Error, Result};
use crate::kkt::{reduce, BlockKkt4x4};
use crate::oracle::nullspace_min_eig;
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indefiniteness {
    /// `H̃` positive definite on `null(J)`, `J` of full row rank.
    SpdOnNullspace,
    /// `H̃` has a negative direction inside `null(J)`.
    Indefinite,
    /// The last row of `J` duplicates the first; the right-hand side stays consistent.
    RankDeficientJ,
    /// As `RankDeficientJ`, with the duplicated constraint's right-hand side perturbed.
    InconsistentRankDeficient,
}

impl std::str::FromStr for Indefiniteness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spd_on_nullspace" => Ok(Self::SpdOnNullspace),
            "indefinite" => Ok(Self::Indefinite),
            "rank_deficient_j" => Ok(Self::RankDeficientJ),
            "inconsistent_rank_deficient" => Ok(Self::InconsistentRankDeficient),
            other => Err(Error::InvalidSpec(format!("unknown class {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_x: usize,
    pub m_c: usize,
    pub m_d: usize,
    /// Target average vertex degree of the underlying graph.
    pub graph_degree: usize,
    pub indefiniteness: Indefiniteness,
    pub sequence_length: usize,
    /// Relative value perturbation of each matrix with respect to the first, in `[0, 0.1]`.
    pub drift: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_x: 40,
            m_c: 10,
            m_d: 8,
            graph_degree: 4,
            indefiniteness: Indefiniteness::SpdOnNullspace,
            sequence_length: 3,
            drift: 0.01,
            seed: 0,
        }
    }
}

/// Coefficient of `JᵀJ` subtracted from `M`.
const ALPHA: f64 = 2.0;

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_x == 0 || self.m_c == 0 || self.sequence_length == 0 {
            return bad("n_x, m_c and sequence_length must be positive".into());
        }
        if self.m_c >= self.n_x {
            return bad(format!("need m_c < n_x, got m_c = {} and n_x = {}", self.m_c, self.n_x));
        }
        let deficient = matches!(
            self.indefiniteness,
            Indefiniteness::RankDeficientJ | Indefiniteness::InconsistentRankDeficient
        );
        if deficient && self.m_c < 2 {
            return bad("rank-deficient classes need m_c >= 2".into());
        }
        if self.indefiniteness == Indefiniteness::Indefinite && self.m_c + 1 >= self.n_x {
            return bad("the indefinite class needs n_x >= m_c + 2".into());
        }
        if self.graph_degree == 0 {
            return bad("graph_degree must be positive".into());
        }
        if !(self.drift.is_finite() && (0.0..=0.1).contains(&self.drift)) {
            return bad(format!("drift must lie in [0, 0.1], got {}", self.drift));
        }
        Ok(())
    }
}

/// Grid edges plus random short chords (within two grid steps) up to the requested average
/// degree; sorted `(hi, lo)`.
fn graph_edges(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let width = (n as f64).sqrt().ceil() as usize;
    let reach = 2i64;
    let mut edges = BTreeSet::new();
    for v in 0..n {
        if (v + 1) % width != 0 && v + 1 < n {
            edges.insert((v + 1, v));
        }
        if v + width < n {
            edges.insert((v + width, v));
        }
    }
    let chords = (n / 10).max(1) + (n * degree / 2).saturating_sub(edges.len());
    let mut tries = 0;
    let mut added = 0;
    while added < chords && tries < 20 * chords && n > 2 {
        tries += 1;
        let a = rng.gen_range(0..n);
        let (row, col) = ((a / width) as i64, (a % width) as i64);
        let (r, c) = (row + rng.gen_range(-reach..=reach), col + rng.gen_range(-reach..=reach));
        if r < 0 || c < 0 || c >= width as i64 {
            continue;
        }
        let b = (r * width as i64 + c) as usize;
        if b < n && a != b && edges.insert((a.max(b), a.min(b))) {
            added += 1;
        }
    }
    edges.into_iter().collect()
}

fn neighbours(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Value-free description of one sequence; individual systems perturb its values.
struct Base {
    edges: Vec<(usize, usize)>,
    edge_w: Vec<f64>,
    m_diag: Vec<f64>,
    /// Triplets of `J` (independent rows; the duplicate row is appended per system).
    j_trip: Vec<(usize, usize, f64)>,
    jd_trip: Vec<(usize, usize, f64)>,
    d_x: Vec<f64>,
    d_s: Vec<f64>,
    x_true: Vec<f64>,
    /// Column given a negative curvature direction in the indefinite class.
    reserved: Option<usize>,
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn build_base(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Base {
    let n = spec.n_x;
    let edges = graph_edges(n, spec.graph_degree, rng);
    let adj = neighbours(n, &edges);
    let edge_w = edges.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let m_diag = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();

    let reserved = (spec.indefiniteness == Indefiniteness::Indefinite).then(|| rng.gen_range(0..n));
    let allowed = |c: usize| Some(c) != reserved;

    let independent = match spec.indefiniteness {
        Indefiniteness::RankDeficientJ | Indefiniteness::InconsistentRankDeficient => spec.m_c - 1,
        _ => spec.m_c,
    };
    let mut columns: Vec<usize> = (0..n).filter(|&c| allowed(c)).collect();
    columns.shuffle(rng);
    let mut j_trip = Vec::new();
    for (row, &pivot) in columns.iter().take(independent).enumerate() {
        j_trip.push((row, pivot, signed(rng, 2.5, 3.0)));
        let mut others: Vec<usize> = adj[pivot].iter().copied().filter(|&c| allowed(c)).collect();
        others.shuffle(rng);
        let count = rng.gen_range(0..=2).min(others.len());
        for &c in &others[..count] {
            j_trip.push((row, c, signed(rng, 0.05, 0.4)));
        }
    }

    let mut jd_trip = Vec::new();
    for row in 0..spec.m_d {
        let pivot = columns[rng.gen_range(0..columns.len())];
        jd_trip.push((row, pivot, signed(rng, 0.2, 1.0)));
        let mut others: Vec<usize> = adj[pivot].iter().copied().filter(|&c| allowed(c)).collect();
        others.shuffle(rng);
        let count = rng.gen_range(0..=2).min(others.len());
        for &c in &others[..count] {
            jd_trip.push((row, c, signed(rng, 0.2, 1.0)));
        }
    }

    let d_x = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let d_s = (0..spec.m_d).map(|_| rng.gen_range(0.1..10.0)).collect();
    let dim = n + 2 * spec.m_d + spec.m_c;
    let x_true = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Base {
        edges,
        edge_w,
        m_diag,
        j_trip,
        jd_trip,
        d_x,
        d_s,
        x_true,
        reserved,
    }
}

fn perturbed(v: f64, drift: f64, rng: &mut ChaCha8Rng) -> f64 {
    if drift == 0.0 {
        v
    } else {
        v * (1.0 + drift * rng.gen_range(-1.0..1.0))
    }
}

fn build_system(
    spec: &GeneratorSpec,
    base: &Base,
    drift: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BlockKkt4x4> {
    let n = spec.n_x;
    // M = weighted Laplacian + positive diagonal, lower triangle.
    let mut diag: Vec<f64> = base.m_diag.iter().map(|&d| perturbed(d, drift, rng)).collect();
    let mut trip = Vec::with_capacity(base.edges.len() + n);
    for (&(a, b), &w) in base.edges.iter().zip(&base.edge_w) {
        let w = perturbed(w, drift, rng);
        trip.push((a, b, -w));
        diag[a] += w;
        diag[b] += w;
    }
    trip.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    let m = CscMatrix::from_triplets(n, n, &trip)?;

    let mut j_trip: Vec<(usize, usize, f64)> = base
        .j_trip
        .iter()
        .map(|&(r, c, v)| (r, c, perturbed(v, drift, rng)))
        .collect();
    if matches!(
        spec.indefiniteness,
        Indefiniteness::RankDeficientJ | Indefiniteness::InconsistentRankDeficient
    ) {
        let first: Vec<_> = j_trip.iter().filter(|t| t.0 == 0).copied().collect();
        j_trip.extend(first.into_iter().map(|(_, c, v)| (spec.m_c - 1, c, v)));
    }
    let j = CscMatrix::from_triplets(spec.m_c, n, &j_trip)?;
    let jd_trip: Vec<_> = base
        .jd_trip
        .iter()
        .map(|&(r, c, v)| (r, c, perturbed(v, drift, rng)))
        .collect();
    let j_d = CscMatrix::from_triplets(spec.m_d, n, &jd_trip)?;
    let d_x: Vec<f64> = base.d_x.iter().map(|&d| perturbed(d, drift, rng)).collect();
    let d_s: Vec<f64> = base.d_s.iter().map(|&d| perturbed(d, drift, rng)).collect();

    let mut h = CscMatrix::linear_combination(&[(1.0, &m), (-ALPHA, &j.gram_lower(None)?)])?;
    if let Some(c) = base.reserved {
        // e_c lies in null(J) and null(J_d), so e_cᵀ H̃ e_c = H_cc + D_x[c] = -1.
        let p = h.position(c, c).expect("diagonal is stored");
        h.values_mut()[p] = -1.0 - d_x[c];
    }

    let mut sys = BlockKkt4x4::new(
        h,
        j,
        j_d,
        d_x,
        d_s,
        vec![0.0; n],
        vec![0.0; spec.m_d],
        vec![0.0; spec.m_c],
        vec![0.0; spec.m_d],
    )?;
    let rhs = sys.apply(&base.x_true)?;
    let (rx, rest) = rhs.split_at(n);
    let (rs, rest) = rest.split_at(spec.m_d);
    let (ry, ryd) = rest.split_at(spec.m_c);
    sys.r_x_tilde = rx.to_vec();
    sys.r_s = rs.to_vec();
    sys.r_y = ry.to_vec();
    sys.r_yd = ryd.to_vec();
    if spec.indefiniteness == Indefiniteness::InconsistentRankDeficient {
        sys.r_y[spec.m_c - 1] += 1.0;
    }
    Ok(sys)
}

/// Generates `spec.sequence_length` systems sharing one sparsity pattern. The first system
/// carries the base values; later ones perturb every value by at most `drift` relatively.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<BlockKkt4x4>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = build_base(spec, &mut rng);
    (0..spec.sequence_length)
        .map(|k| {
            let drift = if k == 0 { 0.0 } else { spec.drift };
            build_system(spec, &base, drift, &mut rng)
        })
        .collect()
}

/// Largest `n_x` for which [`verify_class`] is run by default.
pub const VERIFY_LIMIT: usize = 500;

/// Checks with dense oracles that a system has the properties its class promises.
pub fn verify_class(sys: &BlockKkt4x4, class: Indefiniteness) -> Result<()> {
    let red = reduce(sys)?;
    let j = DenseMatrix::from_csc(&sys.j);
    let rank = dense_rank(&j, RANK_TOL);
    let lam = nullspace_min_eig(&red)?;
    let fail = |m: String| Err(Error::InvalidSpec(format!("generated system violates class: {m}")));
    let m_c = sys.m_c();
    match class {
        Indefiniteness::SpdOnNullspace => {
            if rank != m_c {
                return fail(format!("rank(J) = {rank}, expected {m_c}"));
            }
        }
        Indefiniteness::Indefinite => {}
        Indefiniteness::RankDeficientJ | Indefiniteness::InconsistentRankDeficient => {
            if rank + 1 != m_c {
                return fail(format!("rank(J) = {rank}, expected {}", m_c - 1));
            }
        }
    }
    match (class, lam) {
        (Indefiniteness::Indefinite, Some(l)) if l < 0.0 => Ok(()),
        (Indefiniteness::Indefinite, l) => fail(format!("nullspace eigenvalue {l:?} is not negative")),
        (_, Some(l)) if l <= 0.0 => fail(format!("nullspace eigenvalue {l} is not positive")),
        _ => Ok(()),
    }
}

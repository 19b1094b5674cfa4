//! Instance builders and measurements shared by the integration tests and the acceptance
//! runner.
#![allow(dead_code)]

use std::sync::Arc;

use hybrid_kkt::dense::{dense_solve, null_space_basis, DenseMatrix};
use hybrid_kkt::kkt::Reduced2x2;
use hybrid_kkt::oracle::{cg_error_bound, energy_norm, schur_dense, spd_condition_number};
use hybrid_kkt::solver::{
    assemble_h_gamma, solve_reduced_observed, HGammaSystem, RegularizationState, SolverConfig,
};
use hybrid_kkt::sparse::{symbolic_cholesky, CscMatrix, SymbolicFactor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(m: usize, n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let v: Vec<f64> = (0..m * n).map(|_| rng.gen_range(lo..hi)).collect();
    DenseMatrix::from_fn(m, n, |i, j| v[i * n + j])
}

/// Random `n×n` orthogonal matrix by twice-applied modified Gram–Schmidt.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let a = uniform_matrix(n, n, -1.0, 1.0, rng);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let d: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                let ci = cols[i].clone();
                for (x, y) in cols[j].iter_mut().zip(&ci) {
                    *x -= d * y;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    DenseMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// `Q diag(eigs) Qᵀ` with random orthogonal `Q`.
pub fn symmetric_with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = eigs.len();
    let q = random_orthogonal(n, rng);
    DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|k| q[(i, k)] * eigs[k] * q[(j, k)]).sum())
}

pub fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Lower triangle of a dense symmetric matrix, every entry stored.
pub fn dense_to_lower(a: &DenseMatrix) -> CscMatrix {
    let n = a.nrows();
    let mut trip = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            trip.push((i, j, 0.5 * (a[(i, j)] + a[(j, i)])));
        }
    }
    CscMatrix::from_triplets(n, n, &trip).unwrap()
}

pub fn dense_to_csc(a: &DenseMatrix) -> CscMatrix {
    let rows: Vec<Vec<f64>> = (0..a.nrows()).map(|i| a.row(i).to_vec()).collect();
    CscMatrix::from_dense_rows(&rows).unwrap()
}

pub fn reduced(h: &DenseMatrix, j: &DenseMatrix, rng: &mut ChaCha8Rng) -> Reduced2x2 {
    Reduced2x2 {
        h_tilde: dense_to_lower(h),
        j: dense_to_csc(j),
        r_x: (0..h.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        r_y: (0..j.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn spread(count: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..count).map(|_| rng.gen_range(lo..hi)).collect()
}

/// `H̃ = Z A Zᵀ + Jᵀ C J` with `Z` an orthonormal basis of `null(J)`. The two terms act on
/// complementary subspaces, so `H_γ` is block diagonal in that splitting and positive
/// definite exactly when `A ≻ 0` and `C + γ I ≻ 0` on the row space.
pub fn nullspace_split_instance(
    j: &DenseMatrix,
    a_eigs: &[f64],
    c_eigs: &[f64],
    rng: &mut ChaCha8Rng,
) -> Reduced2x2 {
    let z = null_space_basis(j).unwrap();
    let a = symmetric_with_spectrum(a_eigs, rng);
    let c = symmetric_with_spectrum(c_eigs, rng);
    let zaz = z.matmul(&a).unwrap().matmul(&z.transpose()).unwrap();
    let jcj = j.transpose().matmul(&c).unwrap().matmul(j).unwrap();
    let h = symmetrize(&zaz.add_scaled(1.0, &jcj).unwrap());
    reduced(&h, j, rng)
}

/// Random instance for the definiteness-on-`null(J)` dichotomy. With `positive` the
/// restriction of `H̃` to `null(J)` has spectrum in `[0.5, 5]`; otherwise one eigenvalue
/// lies in `[-3, -1]`. `H̃` is indefinite on the row space of `J` in both cases.
pub fn nullspace_class_instance(seed: u64, positive: bool) -> Reduced2x2 {
    let mut rng = rng(seed);
    let n = rng.gen_range(12..=40);
    let m = rng.gen_range(3..=n / 3);
    let j = uniform_matrix(m, n, -1.0, 1.0, &mut rng);
    let mut a = spread(n - m, 0.5, 5.0, &mut rng);
    if !positive {
        a[0] = rng.gen_range(-3.0..-1.0);
    }
    let mut c = spread(m, -20.0, 5.0, &mut rng);
    c[0] = rng.gen_range(-20.0..-5.0);
    nullspace_split_instance(&j, &a, &c, &mut rng)
}

/// Instance whose `κ(H_γ)` over `γ ∈ {10², …, 10⁸}` has an interior minimum: `J = 0.1 Q` with
/// orthonormal rows and `γ_min ∈ [95, 99]`, so `H_γ` is barely definite at `10²`.
pub fn interior_minimum_instance(seed: u64) -> Reduced2x2 {
    let mut rng = rng(seed);
    let (n, m) = (20, 6);
    let q = random_orthogonal(n, &mut rng);
    let j = DenseMatrix::from_fn(m, n, |i, k| 0.1 * q[(i, k)]);
    let a = spread(n - m, 1.0, 2.0, &mut rng);
    let mut c = spread(m, -95.0, 5.0, &mut rng);
    c[0] = rng.gen_range(-99.0..-95.0);
    nullspace_split_instance(&j, &a, &c, &mut rng)
}

/// Well-conditioned `H̃` (spectrum in `[1, 10]`) with a random `J` of `O(1)` singular values.
pub fn spectral_instance(seed: u64) -> Reduced2x2 {
    let mut rng = rng(seed);
    let m = rng.gen_range(5..=30);
    let n = 2 * m + rng.gen_range(5..=20);
    let h = symmetric_with_spectrum(&spread(n, 1.0, 10.0, &mut rng), &mut rng);
    let j = uniform_matrix(m, n, -1.0, 1.0, &mut rng);
    reduced(&h, &j, &mut rng)
}

/// Weighted graph Laplacian of a path with chords plus a unit-scale diagonal (SPD).
pub fn sparse_spd(n: usize, rng: &mut ChaCha8Rng) -> CscMatrix {
    let mut diag: Vec<f64> = spread(n, 0.5, 1.5, rng);
    let mut trip = Vec::new();
    let edge = |a: usize, b: usize, trip: &mut Vec<(usize, usize, f64)>, diag: &mut Vec<f64>| {
        let w = 0.5;
        trip.push((a.max(b), a.min(b), -w));
        diag[a] += w;
        diag[b] += w;
    };
    for i in 1..n {
        edge(i, i - 1, &mut trip, &mut diag);
    }
    for _ in 0..n / 3 {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edge(a, b, &mut trip, &mut diag);
        }
    }
    trip.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    CscMatrix::from_triplets(n, n, &trip).unwrap()
}

/// `H_γ` (with `J` empty) equal to a sparse SPD matrix shifted so that `λ_min = −t`.
pub fn shifted_instance(seed: u64, t: f64) -> (HGammaSystem, Arc<SymbolicFactor>) {
    let mut rng = rng(seed);
    let n = 30;
    let b = sparse_spd(n, &mut rng);
    let lmin = hybrid_kkt::dense::dense_sym_eig(&DenseMatrix::from_symmetric_lower(&b)).unwrap()[0];
    let shift = CscMatrix::from_diagonal(&vec![-(lmin + t); n]);
    let h = CscMatrix::linear_combination(&[(1.0, &b), (1.0, &shift)]).unwrap();
    let red = Reduced2x2 {
        h_tilde: h,
        j: CscMatrix::zeros(0, n),
        r_x: vec![1.0; n],
        r_y: vec![],
    };
    let hg = assemble_h_gamma(&red, 0.0).unwrap();
    let sym = Arc::new(
        symbolic_cholesky(&hg.h_gamma, &hybrid_kkt::sparse::amd_order(&hg.h_gamma).unwrap())
            .unwrap(),
    );
    (hg, sym)
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

pub fn relative_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Measured `‖e_k‖_A / ‖e_0‖_A` against `1.05 · 2((√κ−1)/(√κ+1))^k` over one CG run, with
/// `A` and `κ` from the dense oracle and `x* = A⁻¹ b` for the right-hand side the run used.
/// `worst` is the largest ratio of measured reduction to allowed reduction.
pub struct CgBoundCheck {
    pub iterations: usize,
    pub kappa: f64,
    pub worst: f64,
}

impl CgBoundCheck {
    pub fn holds(&self) -> bool {
        self.worst <= 1.0
    }
}

/// Runs the solver's first CG pass on the Schur complement of `red` and measures it.
/// Returns `None` when the factorization fails or the pass is not a converged SPD run.
///
/// The right-hand side `J H_δ⁻¹ r̂_x − r_y` cancels to roughly `1/γ` of its terms, so it is
/// recomputed here with the solver's own factor and operation order rather than densely.
pub fn cg_bound_on_schur(red: &Reduced2x2, cfg: &SolverConfig) -> Option<CgBoundCheck> {
    let mut iterates: Vec<Vec<f64>> = Vec::new();
    let mut state = RegularizationState::new(cfg);
    let mut obs = |_: usize, x: &[f64]| iterates.push(x.to_vec());
    let out = solve_reduced_observed(red, cfg, None, &mut state, Some(&mut obs)).ok()?;
    if out.delta2_used > 0.0 {
        return None;
    }
    let factor = out.factor?;
    let hg = assemble_h_gamma(red, cfg.gamma).ok()?;
    let w = factor.solve(&hg.r_hat_x).ok()?;
    let mut b = red.j.mul_vec(&w).ok()?;
    for (v, r) in b.iter_mut().zip(&red.r_y) {
        *v -= r;
    }
    let s = schur_dense(red, cfg.gamma, out.delta1, 0.0).ok()?;
    Some(cg_bound_for(&s, &b, &iterates))
}

/// The same measurement for an explicit SPD matrix and a recorded list of iterates.
pub fn cg_bound_for(a: &DenseMatrix, b: &[f64], iterates: &[Vec<f64>]) -> CgBoundCheck {
    let kappa = spd_condition_number(a).unwrap();
    let x_star = dense_solve(a, b).unwrap();
    let e0 = energy_norm(a, &x_star).unwrap();
    let mut worst = 0.0f64;
    for (k, x) in iterates.iter().enumerate() {
        let e: Vec<f64> = x_star.iter().zip(x).map(|(s, v)| s - v).collect();
        let ratio = if e0 == 0.0 { 0.0 } else { energy_norm(a, &e).unwrap() / e0 };
        let allowed = 1.05 * cg_error_bound(kappa, k + 1);
        let r = if allowed > 0.0 {
            ratio / allowed
        } else if ratio == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(r);
    }
    CgBoundCheck {
        iterations: iterates.len(),
        kappa,
        worst,
    }
}

/// Random saddle-point system whose rows span four orders of magnitude.
pub fn badly_scaled(n_x: usize, m_c: usize, rng: &mut ChaCha8Rng) -> Reduced2x2 {
    let d: Vec<f64> = (0..n_x).map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect();
    let mut trip = Vec::new();
    for j in 0..n_x {
        trip.push((j, j, d[j] * d[j] * rng.gen_range(2.0..4.0)));
        for i in j + 1..n_x {
            if rng.gen_bool(0.15) {
                trip.push((i, j, d[i] * d[j] * rng.gen_range(-0.3..0.3)));
            }
        }
    }
    let mut jt = Vec::new();
    for i in 0..m_c {
        let e = 10f64.powf(rng.gen_range(-2.0..2.0));
        jt.push((i, i, e * d[i] * rng.gen_range(1.0..2.0)));
        let c = rng.gen_range(0..n_x);
        jt.push((i, c, e * d[c] * rng.gen_range(-0.3..0.3)));
    }
    Reduced2x2 {
        h_tilde: CscMatrix::from_triplets(n_x, n_x, &trip).unwrap(),
        j: CscMatrix::from_triplets(m_c, n_x, &jt).unwrap(),
        r_x: spread(n_x, -1.0, 1.0, rng),
        r_y: spread(m_c, -1.0, 1.0, rng),
    }
}

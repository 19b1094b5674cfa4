mod common;

use common::{badly_scaled, relative_diff, rng};
use hybrid_kkt::dense::dense_solve;
use hybrid_kkt::generate::{generate, GeneratorSpec};
use hybrid_kkt::kkt::{
    load_sequence, read_manifest, recover, reduce, ruiz_scale, unscale_solution, write_sequence,
    BlockKkt4x4, Reduced2x2,
};
use hybrid_kkt::oracle::{dense_solve_kkt, dense_solve_reduced};
use hybrid_kkt::sparse::CscMatrix;
use hybrid_kkt::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn vec_in(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn sparse_in(m: usize, n: usize, density: f64, rng: &mut ChaCha8Rng) -> CscMatrix {
    let mut trip = Vec::new();
    for j in 0..n {
        for i in 0..m {
            if rng.gen_bool(density) {
                trip.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    CscMatrix::from_triplets(m, n, &trip).unwrap()
}

/// Random block-4×4 system with a diagonally dominant `H` and a full-row-rank `J`.
fn random_system(n_x: usize, m_c: usize, m_d: usize, rng: &mut ChaCha8Rng) -> BlockKkt4x4 {
    let mut trip = Vec::new();
    for j in 0..n_x {
        trip.push((j, j, rng.gen_range(2.0..4.0)));
        for i in j + 1..n_x {
            if rng.gen_bool(0.1) {
                trip.push((i, j, rng.gen_range(-0.2..0.2)));
            }
        }
    }
    let h = CscMatrix::from_triplets(n_x, n_x, &trip).unwrap();
    let mut jt = Vec::new();
    for i in 0..m_c {
        jt.push((i, i, rng.gen_range(1.0..2.0)));
        jt.push((i, rng.gen_range(0..n_x), rng.gen_range(-0.3..0.3)));
    }
    let j = CscMatrix::from_triplets(m_c, n_x, &jt).unwrap();
    let j_d = sparse_in(m_d, n_x, 0.1, rng);
    BlockKkt4x4::new(
        h,
        j,
        j_d,
        vec_in(n_x, 0.0, 1.0, rng),
        vec_in(m_d, 0.1, 2.0, rng),
        vec_in(n_x, -1.0, 1.0, rng),
        vec_in(m_d, -1.0, 1.0, rng),
        vec_in(m_c, -1.0, 1.0, rng),
        vec_in(m_d, -1.0, 1.0, rng),
    )
    .unwrap()
}

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn residual(apply: &[f64], rhs: &[f64]) -> Vec<f64> {
    rhs.iter().zip(apply).map(|(r, a)| r - a).collect()
}

#[test]
fn reduced_operator_is_the_eliminated_4x4_operator() {
    let mut rng = rng(10);
    let sys = random_system(30, 8, 12, &mut rng);
    let red = reduce(&sys).unwrap();
    for _ in 0..5 {
        let x = vec_in(30, -1.0, 1.0, &mut rng);
        let y = vec_in(8, -1.0, 1.0, &mut rng);
        let s = sys.j_d.mul_vec(&x).unwrap();
        let yd: Vec<f64> = s.iter().zip(&sys.d_s).map(|(a, d)| a * d).collect();
        let k4 = sys.apply(&[&x[..], &s, &y, &yd].concat()).unwrap();
        let k2 = red.apply(&[&x[..], &y].concat()).unwrap();
        assert!(relative_diff(&k4[..30], &k2[..30]) <= 1e-13);
        assert!(relative_diff(&k4[30 + 12..30 + 12 + 8], &k2[30..]) <= 1e-13);
        assert!(inf(&k4[30..42]) <= 1e-14 && inf(&k4[50..]) <= 1e-14);
    }
}

#[test]
fn recovery_carries_the_2x2_residual_only() {
    let mut rng = rng(11);
    for _ in 0..10 {
        let sys = random_system(25, 6, 9, &mut rng);
        let red = reduce(&sys).unwrap();
        let dx = vec_in(25, -1.0, 1.0, &mut rng);
        let dy = vec_in(6, -1.0, 1.0, &mut rng);
        let r2 = residual(&red.apply(&[&dx[..], &dy].concat()).unwrap(), &red.rhs());
        let full = recover(&sys, &dx, &dy).unwrap();
        let r4 = residual(&sys.apply(&full.stacked()).unwrap(), &sys.rhs());
        let scale = sys.inf_norm() * inf(&full.stacked()) + inf(&sys.rhs());
        assert!(inf(&r4) <= inf(&r2) + 1e-14 * scale);
    }
}

#[test]
fn reduction_preserves_solutions() {
    let mut rng = rng(12);
    for _ in 0..5 {
        let sys = random_system(40, 10, 15, &mut rng);
        let red = reduce(&sys).unwrap();
        let (dx, dy) = dense_solve_reduced(&red).unwrap();
        let full = recover(&sys, &dx, &dy).unwrap();
        let r4 = residual(&sys.apply(&full.stacked()).unwrap(), &sys.rhs());
        let be = inf(&r4) / (sys.inf_norm() * inf(&full.stacked()) + inf(&sys.rhs()));
        assert!(be <= 1e-10, "{be:e}");

        let direct = dense_solve_kkt(&sys).unwrap();
        let stacked = [&direct.dx[..], &direct.dy].concat();
        let r2 = residual(&red.apply(&stacked).unwrap(), &red.rhs());
        assert!(inf(&r2) <= 1e-10 * inf(&red.rhs()));
    }
}

fn row_norms(red: &Reduced2x2) -> Vec<f64> {
    let d = red.to_dense();
    (0..d.nrows()).map(|i| inf(d.row(i))).collect()
}

#[test]
fn ruiz_scaling_preserves_solutions_and_transports_residuals() {
    let mut rng = rng(13);
    for _ in 0..10 {
        let red = badly_scaled(30, 8, &mut rng);
        let (scaled, scaling) = ruiz_scale(&red, 20, 0.01);
        for n in row_norms(&scaled) {
            assert!((0.5..=2.0).contains(&n), "{n}");
        }
        let (dxs, dys) = dense_solve_reduced(&scaled).unwrap();
        let (dx, dy) = unscale_solution(&scaling, &dxs, &dys).unwrap();
        let (ex, ey) = dense_solve_reduced(&red).unwrap();
        let got = [&dx[..], &dy].concat();
        let want = [&ex[..], &ey].concat();
        assert!(relative_diff(&got, &want) <= 1e-10);

        // residuals: r = D⁻¹ r' for the scaled residual r'
        let z = vec_in(38, -1.0, 1.0, &mut rng);
        let (zx, zy) = unscale_solution(&scaling, &z[..30], &z[30..]).unwrap();
        let rs = residual(&scaled.apply(&z).unwrap(), &scaled.rhs());
        let r = residual(&red.apply(&[&zx[..], &zy].concat()).unwrap(), &red.rhs());
        let back: Vec<f64> = rs.iter().zip(&scaling.d_left).map(|(v, d)| v / d).collect();
        assert!(relative_diff(&back, &r) <= 1e-12);
    }
}

#[test]
fn dense_solve_of_scaled_system_matches_original() {
    let mut rng = rng(14);
    let red = badly_scaled(20, 5, &mut rng);
    let (scaled, scaling) = ruiz_scale(&red, 20, 0.01);
    let xs = dense_solve(&scaled.to_dense(), &scaled.rhs()).unwrap();
    let x: Vec<f64> = xs.iter().zip(&scaling.d_left).map(|(v, d)| v * d).collect();
    let want = dense_solve(&red.to_dense(), &red.rhs()).unwrap();
    assert!(relative_diff(&x, &want) <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ruiz_converges_on_random_systems(n_x in 2usize..40, m_frac in 0.0f64..0.5, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m_c = ((n_x as f64 * m_frac) as usize).min(n_x - 1);
        let red = badly_scaled(n_x, m_c, &mut rng);
        let (scaled, scaling) = ruiz_scale(&red, 20, 0.01);
        prop_assert!(scaling.iterations_used <= 20);
        for n in row_norms(&scaled) {
            prop_assert!((0.5..=2.0).contains(&n));
        }
    }
}

fn spd_spec(length: usize) -> GeneratorSpec {
    GeneratorSpec {
        n_x: 30,
        m_c: 6,
        m_d: 5,
        sequence_length: length,
        seed: 21,
        ..Default::default()
    }
}

#[test]
fn sequence_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let systems = generate(&spd_spec(5)).unwrap();
    let path = write_sequence(dir.path(), &systems).unwrap();
    let loaded = load_sequence(&path).unwrap();
    assert!(loaded.pattern_uniform);
    assert_eq!(loaded.systems, systems);
    assert_eq!(read_manifest(&path).unwrap().systems.len(), 5);
}

#[test]
fn single_system_sequence_loads() {
    let dir = tempfile::tempdir().unwrap();
    let systems = generate(&spd_spec(1)).unwrap();
    let loaded = load_sequence(&write_sequence(dir.path(), &systems).unwrap()).unwrap();
    assert_eq!(loaded.systems.len(), 1);
    assert!(loaded.pattern_uniform);
}

#[test]
fn differing_h_pattern_clears_uniform_flag() {
    let dir = tempfile::tempdir().unwrap();
    let mut systems = generate(&spd_spec(2)).unwrap();
    let n = systems[1].n_x();
    let extra = CscMatrix::from_triplets(n, n, &[(n - 1, 0, 0.0)]).unwrap();
    systems[1].h = CscMatrix::linear_combination(&[(1.0, &systems[1].h), (1.0, &extra)]).unwrap();
    let loaded = load_sequence(&write_sequence(dir.path(), &systems).unwrap()).unwrap();
    assert!(!loaded.pattern_uniform);
    assert_eq!(loaded.systems, systems);
}

#[test]
fn broken_sequences_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let systems = generate(&spd_spec(2)).unwrap();
    let path = write_sequence(dir.path(), &systems).unwrap();

    std::fs::remove_file(dir.path().join("k001_vectors.json")).unwrap();
    assert!(matches!(load_sequence(&path), Err(Error::Io { .. })));

    write_sequence(dir.path(), &systems).unwrap();
    let bad = std::fs::read_to_string(&path).unwrap().replacen("\"m_c\": 6", "\"m_c\": 7", 1);
    std::fs::write(&path, bad).unwrap();
    match load_sequence(&path) {
        Err(Error::Manifest { message, .. }) => assert!(message.contains("declared")),
        other => panic!("{other:?}"),
    }

    write_sequence(dir.path(), &systems).unwrap();
    let h = dir.path().join("k000_j.mtx");
    let mut lines: Vec<String> = std::fs::read_to_string(&h).unwrap().lines().map(String::from).collect();
    let last = lines.len() - 1;
    lines[last] = "1 1 not-a-number".into();
    std::fs::write(&h, lines.join("\n")).unwrap();
    match load_sequence(&path) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("k000_j.mtx"));
            assert_eq!(line, last + 1);
        }
        other => panic!("{other:?}"),
    }

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"format":"hybrid-kkt-sequence/1","systems":[]}"#).unwrap();
    assert!(matches!(load_sequence(&empty), Err(Error::Manifest { .. })));
}

use proptest::prelude::*;

use dsynth_core::combin::Combinations;
use dsynth_core::experiments::{run_table_experiment, ExperimentConfig};
use dsynth_core::frames::{
    build_coherent_frame, canonical_dual, frame_bounds, gaussian_matrix, is_full_spark, spark,
    Frame, Spark,
};
use dsynth_core::matcore::{decompose_along_kernel, nullspace_basis, rank, svd};
use dsynth_core::matrix::{dot, norm1, norm2};
use dsynth_core::nspcert::{nsp_check, NspOptions};
use dsynth_core::rng::{normal_vec, rng_from_seed};
use dsynth_core::stability::{
    best_s_term_residual, operator_norm_1_2, snsp_constant_estimate, EstimateMode,
};
use dsynth_core::DenseMatrix;

fn matrix_strategy(max_r: usize, max_c: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_r, 1..=max_c).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3.0f64..3.0, r * c)
            .prop_map(move |data| DenseMatrix::new(r, c, data).unwrap())
    })
}

/// Matrices with a planted rank drop.
fn low_rank_strategy() -> impl Strategy<Value = DenseMatrix> {
    (2usize..6, 2usize..8, any::<u64>()).prop_map(|(r, c, seed)| {
        let k = 1 + (seed as usize % r.min(c));
        let l = gaussian_matrix(r, k, seed).unwrap();
        let rr = gaussian_matrix(k, c, seed ^ 0x9e37).unwrap();
        l.matmul(&rr).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_nullity(m in prop_oneof![matrix_strategy(6, 8), low_rank_strategy()]) {
        let r = rank(&m, 1e-10).unwrap();
        let n = nullspace_basis(&m, 1e-10).unwrap();
        prop_assert_eq!(r + n.cols(), m.cols());
        let mn = m.matmul(&n).unwrap();
        prop_assert!(mn.max_abs() <= 1e-9 * (1.0 + m.max_abs()));
        let gram = n.transpose().matmul(&n).unwrap();
        prop_assert!(gram.sub(&DenseMatrix::identity(n.cols())).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn decomposition(m in prop_oneof![matrix_strategy(5, 7), low_rank_strategy()], seed in any::<u64>()) {
        let h = normal_vec(&mut rng_from_seed(seed), m.cols());
        let (a, b) = decompose_along_kernel(&m, &h).unwrap();
        prop_assert!(norm2(&m.matvec(&a).unwrap()) <= 1e-9 * (1.0 + m.frobenius_norm()) * norm2(&h));
        prop_assert!(dot(&a, &b).abs() <= 1e-9 * (1.0 + norm2(&h).powi(2)));
        for i in 0..h.len() {
            prop_assert!((a[i] + b[i] - h[i]).abs() <= 1e-12 * (1.0 + h[i].abs()));
        }
    }

    #[test]
    fn svd_reconstructs(m in matrix_strategy(7, 7)) {
        let s = svd(&m).unwrap();
        let us = DenseMatrix::from_fn(s.left_vectors.rows(), s.singular_values.len(), |i, j| {
            s.left_vectors.get(i, j) * s.singular_values[j]
        });
        let back = us.matmul(&s.right_vectors.transpose()).unwrap();
        prop_assert!(back.sub(&m).unwrap().max_abs() <= 1e-11 * (1.0 + m.max_abs()));
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn frame_bound_inequality(seed in any::<u64>(), d in 2usize..6, extra in 0usize..5, x_seed in any::<u64>()) {
        let f = Frame::from_matrix(gaussian_matrix(d, d + extra, seed).unwrap()).unwrap();
        let (a, b) = frame_bounds(&f).unwrap();
        let x = normal_vec(&mut rng_from_seed(x_seed), d);
        let energy = norm2(&f.matrix().tr_matvec(&x).unwrap()).powi(2);
        let xx = norm2(&x).powi(2);
        prop_assert!(a * xx <= energy * (1.0 + 1e-10) && energy <= b * xx * (1.0 + 1e-10));
    }

    #[test]
    fn canonical_dual_is_a_dual(seed in any::<u64>(), d in 2usize..6, extra in 0usize..5) {
        let f = Frame::from_matrix(gaussian_matrix(d, d + extra, seed).unwrap()).unwrap();
        let g = canonical_dual(&f).unwrap();
        let p = f.matrix().matmul(&g.transpose()).unwrap();
        prop_assert!(p.sub(&DenseMatrix::identity(d)).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn full_spark_iff_spark_is_d_plus_one(seed in any::<u64>(), d in 2usize..5, extra in 1usize..4, dup in any::<bool>()) {
        let mut f = Frame::from_matrix(gaussian_matrix(d, d + extra, seed).unwrap()).unwrap();
        if dup {
            f = f.with_duplicate_column(seed as usize % f.n()).unwrap();
        }
        let full = is_full_spark(&f).unwrap();
        let sp = spark(&f, d + 1).unwrap();
        prop_assert_eq!(full, sp == Spark::Finite(d + 1));
        if dup {
            prop_assert_eq!(sp, Spark::Finite(2));
        }
    }

    #[test]
    fn best_s_term_matches_exhaustive(x in prop::collection::vec(-5.0f64..5.0, 1..9), s_raw in 0usize..9) {
        let s = s_raw.min(x.len());
        let got = best_s_term_residual(&x, s).unwrap();
        let n = x.len();
        let total = norm1(&x);
        let best = if s == 0 {
            total
        } else {
            Combinations::new(n, s)
                .map(|t| total - t.iter().map(|&i| x[i].abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        };
        prop_assert!((got - best).abs() <= 1e-12 * (1.0 + total));
    }

    #[test]
    fn operator_norm_dominates_samples(m in matrix_strategy(5, 6), seed in any::<u64>()) {
        let nrm = operator_norm_1_2(&m);
        let mut r = rng_from_seed(seed);
        for _ in 0..50 {
            let v = normal_vec(&mut r, m.cols());
            let l1 = norm1(&v);
            let mv = norm2(&m.matvec(&v).unwrap());
            prop_assert!(mv <= nrm * l1 * (1.0 + 1e-12));
        }
        // attained at the heaviest column
        let j = (0..m.cols()).max_by(|&a, &b| m.column_norm(a).total_cmp(&m.column_norm(b))).unwrap();
        prop_assert!((m.column_norm(j) - nrm).abs() == 0.0);
    }
}

/// `max_{v ∈ ker M} top_s(|v|) / (‖v‖₁ − top_s(|v|))` by enumerating the
/// vertices of `{c : ‖Nc‖₁ ≤ 1}`: directions with `k − 1` zero entries.
fn brute_nsp_value(m: &DenseMatrix, s: usize) -> f64 {
    let n = nullspace_basis(m, 1e-12).unwrap();
    let (rows, k) = (n.rows(), n.cols());
    if k == 0 {
        return 0.0;
    }
    let ratio = |v: &[f64]| {
        let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        let top: f64 = mags[..s].iter().sum();
        let rest: f64 = mags[s..].iter().sum();
        if rest <= 1e-12 * top {
            f64::INFINITY
        } else {
            top / rest
        }
    };
    let mut best: f64 = 0.0;
    let dirs: Vec<Vec<usize>> = if k == 1 { vec![vec![]] } else { Combinations::new(rows, k - 1).collect() };
    for zeros in dirs {
        let sub = if zeros.is_empty() { None } else { Some(n.select_rows(&zeros)) };
        let c = match &sub {
            None => vec![1.0],
            Some(s_rows) => {
                let null = nullspace_basis(s_rows, 1e-10).unwrap();
                if null.cols() != 1 {
                    continue;
                }
                null.column(0)
            }
        };
        best = best.max(ratio(&n.matvec(&c).unwrap()));
    }
    best
}

#[test]
fn nsp_check_matches_vertex_enumeration_and_sampling() {
    let opts = NspOptions::default();
    let mut checked = 0;
    for seed in 0..60u64 {
        let n = 5 + (seed as usize % 6);
        let nullity = 1 + (seed as usize % 3);
        let m = gaussian_matrix(n - nullity, n, 1000 + seed).unwrap();
        for s in 1..=2 {
            let cert = nsp_check(&m, s, &opts).unwrap();
            let brute = brute_nsp_value(&m, s);
            assert!(
                (cert.worst_value - brute).abs() <= 1e-7 * (1.0 + brute),
                "seed {seed} s {s}: lp {} vs vertices {brute}",
                cert.worst_value
            );
            assert_eq!(cert.holds, brute < 1.0 - opts.margin);
            checked += 1;
        }
        // Random kernel directions never exceed the certified value.
        let basis = nullspace_basis(&m, 1e-12).unwrap();
        let cert = nsp_check(&m, 1, &opts).unwrap();
        let mut r = rng_from_seed(seed);
        for _ in 0..if seed < 5 { 100_000 } else { 2_000 } {
            let v = basis.matvec(&normal_vec(&mut r, basis.cols())).unwrap();
            let top = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let ratio = top / (norm1(&v) - top);
            assert!(ratio <= cert.worst_value * (1.0 + 1e-9) + 1e-12);
        }
    }
    assert_eq!(checked, 120);
}

#[test]
fn nsp_is_monotone_in_order() {
    let opts = NspOptions::default();
    for seed in 0..40u64 {
        let m = gaussian_matrix(5, 8, 500 + seed).unwrap();
        let vals: Vec<f64> = (1..=3).map(|s| nsp_check(&m, s, &opts).unwrap().worst_value).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{vals:?}");
    }
}

/// `min_t ‖w + t u‖₁` for a single direction `u`, at the breakpoints.
fn line_l1_min(w: &[f64], u: &[f64]) -> f64 {
    let mut best = norm1(w);
    for i in 0..w.len() {
        if u[i] != 0.0 {
            let t = -w[i] / u[i];
            best = best.min(w.iter().zip(u).map(|(a, b)| (a + t * b).abs()).sum());
        }
    }
    best
}

#[test]
fn exact_snsp_constant_matches_circle_sampling() {
    let mut done = 0;
    for seed in 0..40u64 {
        if done == 5 {
            break;
        }
        let d = Frame::from_matrix(gaussian_matrix(4, 5, 70 + seed).unwrap().normalized_columns().unwrap()).unwrap();
        let a = gaussian_matrix(3, 4, 170 + seed).unwrap();
        let est = snsp_constant_estimate(&a, &d, 1, 0, 0).unwrap();
        assert_eq!(est.mode, EstimateMode::ExactTiny);
        if !(est.c_hat.is_finite() && est.c_hat > 1e-3) {
            continue;
        }
        done += 1;
        let ad = a.matmul(d.matrix()).unwrap();
        let kad = nullspace_basis(&ad, 1e-12).unwrap();
        assert_eq!(kad.cols(), 2);
        let kd = nullspace_basis(d.matrix(), 1e-12).unwrap();
        assert_eq!(kd.cols(), 1);
        let u = kd.column(0);
        let (p, q) = (kad.column(0), kad.column(1));
        let samples = 200_000;
        let mut min_ratio = f64::INFINITY;
        for i in 0..samples {
            let th = std::f64::consts::PI * (i as f64) / samples as f64;
            let v: Vec<f64> = p.iter().zip(&q).map(|(x, y)| th.cos() * x + th.sin() * y).collect();
            let dv = norm2(&d.matrix().matvec(&v).unwrap());
            for t in 0..5 {
                for sign in [1.0, -1.0] {
                    let vs: Vec<f64> = v.iter().map(|x| sign * x).collect();
                    let mut vt = vec![0.0; 5];
                    vt[t] = vs[t];
                    let tc: f64 = (0..5).filter(|&j| j != t).map(|j| vs[j].abs()).sum();
                    let ratio = (tc - line_l1_min(&vt, &u)) / dv;
                    min_ratio = min_ratio.min(ratio);
                }
            }
        }
        assert!(min_ratio >= est.c_hat - 1e-9, "sample {min_ratio} below exact {}", est.c_hat);
        assert!(min_ratio <= est.c_hat * (1.0 + 1e-3) + 1e-9, "exact {} not approached: {min_ratio}", est.c_hat);
    }
    assert_eq!(done, 5);
}

#[test]
fn unperturbed_coherent_frame_has_small_spark() {
    for seed in 0..5 {
        let f = build_coherent_frame(6, 0.0, seed).unwrap();
        match spark(&f, 7).unwrap() {
            Spark::Finite(k) => assert!(k <= 4, "spark {k}"),
            other => panic!("{other:?}"),
        }
        assert!(!is_full_spark(&f).unwrap());
        // Each appended column lies in the span of three DCT columns.
        let dct = f.matrix().column_range(0, 6);
        for j in 6..12 {
            let col = f.matrix().column(j);
            let coeffs = dct.tr_matvec(&col).unwrap();
            assert!(coeffs.iter().filter(|c| c.abs() > 1e-10).count() <= 3);
        }
        assert!(is_full_spark(&build_coherent_frame(6, 1e-2, seed).unwrap()).unwrap());
    }
}

#[test]
fn svd_large_shapes() {
    for (r, c, seed) in [(100, 200, 1u64), (200, 100, 2), (60, 60, 3)] {
        let m = gaussian_matrix(r, c, seed).unwrap();
        let s = svd(&m).unwrap();
        let k = r.min(c);
        let us = DenseMatrix::from_fn(r, k, |i, j| s.left_vectors.get(i, j) * s.singular_values[j]);
        let back = us.matmul(&s.right_vectors.transpose()).unwrap();
        assert!(back.sub(&m).unwrap().max_abs() < 1e-10);
        let vtv = s.right_vectors.transpose().matmul(&s.right_vectors).unwrap();
        assert!(vtv.sub(&DenseMatrix::identity(k)).unwrap().max_abs() < 1e-10);
    }
}

#[test]
fn experiment_is_deterministic() {
    let cfg = ExperimentConfig {
        d: 8,
        m: 5,
        trials: 5,
        sparsity_levels: vec![1, 2],
        perturbations: vec![0.0, 1e-3],
        seed: 42,
        ..Default::default()
    };
    let a = run_table_experiment(&cfg).unwrap();
    let b = run_table_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    let c = run_table_experiment(&ExperimentConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.rows, c.rows);
}

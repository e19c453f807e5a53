mod common;

use common::{random_alpha, random_instance, small_instance};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_dual::objective::{
    certify_saddle_point, dual_supergradient, dual_value, margin_epsilon_bar, primal_from_dual,
    restricted_singular_values, CertifyOptions,
};
use sparse_dual::solvers::{brute_force_oracle, diht, SolverConfig};
use sparse_dual::{DualState, LossModel, ProblemInstance};

fn stable_oracle_instance() -> (ProblemInstance, sparse_dual::solvers::OracleSolution) {
    (0..200)
        .map(|seed| small_instance(seed, 8, 2, 20, 0.1))
        .find_map(|inst| {
            let oracle = brute_force_oracle(&inst).unwrap();
            (margin_epsilon_bar(&inst, &oracle.w.w).unwrap() > 1e-3).then_some((inst, oracle))
        })
        .unwrap()
}

#[test]
fn oracle_pair_is_certified() {
    let (inst, oracle) = stable_oracle_instance();
    let rep = certify_saddle_point(&inst, &oracle.w.w, &oracle.alpha, CertifyOptions::default()).unwrap();
    assert!(rep.subgradient_ok && rep.threshold_ok && rep.support_ok && rep.gap_ok, "{rep:?}");
    assert!(rep.passed());
}

#[test]
fn perturbed_dual_breaks_the_subgradient_check() {
    let (inst, oracle) = stable_oracle_instance();
    let mut alpha = oracle.alpha.clone();
    alpha[3] += 0.1;
    let rep = certify_saddle_point(&inst, &oracle.w.w, &alpha, CertifyOptions::default()).unwrap();
    assert!(!rep.subgradient_ok);
    assert!((rep.subgradient_residual - 0.1).abs() <= 1e-6, "{}", rep.subgradient_residual);
    assert!(!rep.passed());
}

#[test]
fn zero_tolerance_rejects_numerical_pairs() {
    let (inst, oracle) = stable_oracle_instance();
    let opts = CertifyOptions {
        tol: 0.0,
        scale_aware: false,
    };
    let rep = certify_saddle_point(&inst, &oracle.w.w, &oracle.alpha, opts).unwrap();
    assert!(!rep.passed());
}

#[test]
fn long_run_pair_satisfies_threshold_conditions() {
    let (inst, oracle) = stable_oracle_instance();
    let cfg = SolverConfig {
        max_iters: 200_000,
        stop_gap_tol: 1e-10,
        stop_rel_primal_tol: 0.0,
        record_every: 50,
        ..Default::default()
    };
    let report = diht(&inst, &cfg).unwrap();
    let rep = certify_saddle_point(
        &inst,
        &report.primal_state.w,
        &report.dual_state.alpha,
        CertifyOptions::default(),
    )
    .unwrap();
    assert!(rep.threshold_ok && rep.support_ok && rep.gap_ok, "{rep:?}");
    // for the squared loss the gap is (1/4N) Σ (αᵢ - l'(uᵢ))², which bounds the residual
    let bound = (4.0 * inst.n_samples() as f64 * rep.gap.max(0.0)).sqrt();
    assert!(rep.subgradient_residual <= bound + 1e-12, "{rep:?}");
    assert_eq!(report.primal_state.support, oracle.support);
}

#[test]
fn strong_concavity_bound() {
    let (inst, _) = stable_oracle_instance();
    let cfg = SolverConfig {
        max_iters: 200_000,
        stop_gap_tol: 1e-12,
        stop_rel_primal_tol: 0.0,
        record_every: 50,
        ..Default::default()
    };
    let bar = diht(&inst, &cfg).unwrap().dual_state.alpha;
    let n = inst.n_samples() as f64;
    let mu = inst.loss().mu();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let alpha = random_alpha(&mut rng, &inst, 3.0);
        let w = primal_from_dual(&inst, &alpha).unwrap();
        let g = dual_supergradient(&inst, &alpha, &w).unwrap();
        let lhs: f64 = alpha.iter().zip(&bar).map(|(a, b)| (a - b) * (a - b)).sum();
        let inner: f64 = g.iter().zip(bar.iter().zip(&alpha)).map(|(gi, (b, a))| gi * (b - a)).sum();
        assert!(lhs <= 2.0 * n / mu * inner + 1e-8, "{lhs} vs {}", 2.0 * n / mu * inner);
    }
}

#[test]
fn supergradient_matches_finite_differences_where_support_is_stable() {
    let inst = random_instance(21, 12, 8, 3, 0.2, LossModel::Squared);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut checked = 0;
    while checked < 30 {
        let alpha = random_alpha(&mut rng, &inst, 2.0);
        let acc = DualState::from_alpha(&inst, alpha.clone()).unwrap().accumulator;
        if top_k_margin(&acc, inst.k()) < 1e-3 {
            continue;
        }
        let w = primal_from_dual(&inst, &alpha).unwrap();
        let g = dual_supergradient(&inst, &alpha, &w).unwrap();
        for i in 0..inst.n_samples() {
            let mut plus = alpha.clone();
            let mut minus = alpha.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (dual_value(&inst, &plus).unwrap() - dual_value(&inst, &minus).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5, "coordinate {i}: {fd} vs {}", g[i]);
        }
        checked += 1;
    }
}

/// Gap between the k-th and (k+1)-th largest magnitudes.
fn top_k_margin(x: &[f64], k: usize) -> f64 {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    if k >= mags.len() {
        return f64::INFINITY;
    }
    mags[k - 1] - mags[k]
}

#[test]
fn restricted_singular_values_match_row_restricted_svd() {
    let inst = random_instance(22, 9, 6, 2, 1.0, LossModel::Squared);
    let rows = inst.data().to_dense_rows();
    let x = DMatrix::from_fn(6, 9, |i, j| rows[j][i]);
    let mut smax: f64 = 0.0;
    let mut smin = f64::INFINITY;
    for a in 0..6 {
        for b in a..6 {
            let f: Vec<usize> = if a == b { vec![a] } else { vec![a, b] };
            let sub = x.select_rows(f.iter());
            let sv = sub.singular_values();
            smax = smax.max(sv.max());
            smin = smin.min(sv.min());
        }
    }
    let (got_max, got_min) = restricted_singular_values(inst.data(), 2).unwrap();
    assert!((got_max - smax).abs() <= 1e-10);
    assert!((got_min - smin).abs() <= 1e-10);
}

//! Acceptance suite: runs every criterion in sequence and prints one
//! PASS/FAIL line each. Exits non-zero when any criterion fails.
//!
//! Run with `cargo test -p sparse-dual --test acceptance`.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::{csv_without_seconds, random_alpha, random_instance, small_instance};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_dual::data::{generate_synthetic, normalize_rows, scale_by_max_row_norm, sign_labels, SyntheticSpec};
use sparse_dual::metrics::{decade_lambda_grid, pssr, time_to_target, tune_step, Contender, Replicate, TrialBatch};
use sparse_dual::objective::{
    certify_saddle_point, dual_supergradient, dual_value, duality_gap, gap_closed_form, margin_epsilon_bar,
    primal_from_dual, primal_value, restricted_singular_values, CertifyOptions,
};
use sparse_dual::solvers::{
    brute_force_oracle, diht, diht_with, iht_baseline, make_partition, sdiht, OracleSolution, RunOptions,
    SolverConfig, SolverKind, StepSchedule,
};
use sparse_dual::vecops::hard_threshold_k;
use sparse_dual::{DualState, LossModel, ProblemInstance};

const LOSSES: [LossModel; 3] = [LossModel::Squared, LossModel::Huber { gamma: 0.25 }, LossModel::Hinge];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// One tiny squared-loss instance of the oracle-equivalence family.
struct OracleCase {
    seed: u64,
    inst: ProblemInstance,
    oracle: OracleSolution,
    eps_bar: f64,
}

impl OracleCase {
    fn certified(&self) -> bool {
        self.eps_bar > 0.0
    }
}

const ORACLE_SEED_SCAN: u64 = 300;

/// For each λ, the first ten seeds whose oracle solution has a positive
/// support margin; when fewer exist among the scanned seeds, the earliest
/// remaining seeds fill the slots.
fn oracle_cases() -> Vec<OracleCase> {
    let mut cases = Vec::new();
    for lambda in [0.01, 0.1] {
        let mut certified = Vec::new();
        let mut others = Vec::new();
        for seed in 0..ORACLE_SEED_SCAN {
            let inst = small_instance(seed, 20, 3, 40, lambda);
            let oracle = brute_force_oracle(&inst).unwrap();
            let eps_bar = margin_epsilon_bar(&inst, &oracle.w.w).unwrap();
            let case = OracleCase {
                seed,
                inst,
                oracle,
                eps_bar,
            };
            if case.certified() {
                certified.push(case);
                if certified.len() == 10 {
                    break;
                }
            } else if others.len() < 10 {
                others.push(case);
            }
        }
        let missing = 10 - certified.len();
        cases.extend(certified);
        cases.extend(others.into_iter().take(missing));
    }
    cases
}

fn remark_config(max_iters: usize) -> SolverConfig {
    SolverConfig {
        max_iters,
        step_schedule: StepSchedule::TheoremMu,
        stop_gap_tol: 0.0,
        stop_rel_primal_tol: 0.0,
        ..Default::default()
    }
}

fn a1(cases: &[OracleCase]) -> Outcome {
    let cfg = SolverConfig {
        stop_gap_tol: 1e-7,
        record_every: 10,
        ..remark_config(50_000)
    };
    let mut successes = 0;
    let mut sane = true;
    let mut per_lambda = Vec::new();
    for lambda in [0.01, 0.1] {
        let (mut certified, mut ok, mut diverged) = (0, 0, 0);
        for case in cases.iter().filter(|c| c.inst.lambda() == lambda) {
            let report = diht(&case.inst, &cfg).unwrap();
            let p = report.final_primal();
            sane &= p >= case.oracle.primal - 1e-9;
            diverged += usize::from(report.diverged);
            certified += usize::from(case.certified());
            if case.certified() && report.final_gap() <= 1e-6 && (p - case.oracle.primal).abs() <= 1e-6 {
                ok += 1;
            }
        }
        successes += ok;
        per_lambda.push(format!(
            "lambda={lambda}: {certified}/10 with eps_bar>0 in seeds <{ORACLE_SEED_SCAN}, {ok} matched, {diverged} diverged"
        ));
    }
    outcome(
        successes >= 18 && sane,
        format!(
            "{successes}/20 certified instances matched the oracle (need 18); primal >= P* - 1e-9 on all: {sane}; {}",
            per_lambda.join("; ")
        ),
    )
}

fn a2() -> Outcome {
    let us: Vec<f64> = (0..2001).map(|i| -5.0 + i as f64 * 0.005).collect();
    let mut worst_recovery: f64 = 0.0;
    let mut worst_equality: f64 = 0.0;
    for loss in LOSSES {
        let labels: &[f64] = if loss.is_classification() { &[1.0, -1.0] } else { &[0.7, -1.3] };
        for &y in labels {
            let iv = loss.feasible_interval(y);
            let (lo, hi) = if iv.is_bounded() { (iv.lo, iv.hi) } else { (-15.0, 15.0) };
            let steps = ((hi - lo) / 1e-3).round() as usize;
            let grid: Vec<(f64, f64)> = (0..=steps)
                .map(|i| {
                    let a = lo + (hi - lo) * i as f64 / steps as f64;
                    (a, loss.conjugate_value(a, y))
                })
                .collect();
            for &u in &us {
                let l = loss.loss_value(u, y).unwrap();
                let sup = grid.iter().map(|(a, c)| a * u - c).fold(f64::NEG_INFINITY, f64::max);
                worst_recovery = worst_recovery.max((l - sup).abs());
                if loss == LossModel::Hinge && (y * u - 1.0).abs() < 1e-9 {
                    continue;
                }
                let a = loss.loss_derivative(u, y);
                worst_equality = worst_equality.max((l + loss.conjugate_value(a, y) - a * u).abs());
            }
        }
    }
    outcome(
        worst_recovery <= 1e-3 && worst_equality <= 1e-10,
        format!("max |l - sup(au - l*)| = {worst_recovery:.2e}, max Fenchel-Young residual = {worst_equality:.2e}"),
    )
}

fn a3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for loss in LOSSES {
        for draw in 0..1000 {
            let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
            let inst = random_instance(10_000 + draw, 12, 10, 4, lambda, loss);
            let alpha = random_alpha(&mut rng, &inst, 3.0);
            let w = primal_from_dual(&inst, &alpha).unwrap();
            let gap = duality_gap(&inst, &w.w, &alpha).unwrap();
            let closed = gap_closed_form(&inst, &w.w, &alpha).unwrap();
            let p = primal_value(&inst, &w.w).unwrap();
            worst = worst.max((gap - closed).abs() / (1.0 + p.abs()));
        }
    }
    outcome(worst <= 1e-10, format!("max relative |gap - closed form| = {worst:.2e} over 3000 draws"))
}

fn a4(cases: &[OracleCase]) -> Outcome {
    let mut identical = true;
    let mut rows = 0;
    for (case, loss) in [(&cases[0], LossModel::Squared), (&cases[10], LossModel::Huber { gamma: 0.25 })] {
        let inst = if loss == LossModel::Squared {
            case.inst.clone()
        } else {
            let signs = sign_labels(case.inst.data());
            ProblemInstance::new(signs, case.inst.lambda(), 3, loss).unwrap()
        };
        let cfg = SolverConfig {
            seed: case.seed,
            ..remark_config(5000)
        };
        let a = diht(&inst, &cfg).unwrap();
        let b = sdiht(&inst, &cfg, &make_partition(inst.n_samples(), 1, case.seed).unwrap()).unwrap();
        let (ca, cb) = (csv_without_seconds(&a.to_csv_string()), csv_without_seconds(&b.to_csv_string()));
        rows += ca.len() - 1;
        identical &= ca == cb && a.dual_state == b.dual_state;
    }
    outcome(identical, format!("{rows} trace rows compared bitwise (all columns except seconds)"))
}

fn a5(cases: &[OracleCase]) -> Outcome {
    let case = cases
        .iter()
        .find(|c| c.certified() && c.inst.lambda() == 0.1)
        .or_else(|| cases.iter().find(|c| c.inst.lambda() == 0.1))
        .unwrap();
    let reference = diht(
        &case.inst,
        &SolverConfig {
            record_every: 1_000_000,
            ..remark_config(1_000_000)
        },
    )
    .unwrap();
    let opts = RunOptions {
        reference_alpha: Some(reference.dual_state.alpha.clone()),
        ..Default::default()
    };
    let run = diht_with(
        &case.inst,
        &SolverConfig {
            record_every: 10,
            ..remark_config(10_000)
        },
        &opts,
    )
    .unwrap();
    let e = |t: usize| -> f64 {
        let row = run.rows.iter().find(|r| r.t == t).unwrap();
        row.alpha_dist.unwrap().powi(2)
    };
    let shape = |t: f64| (1.0 + t.ln()) / t;
    let (e2, e3, e4) = (e(100), e(1000), e(10_000));
    let bound3 = shape(1000.0) / shape(100.0) * 1.5;
    let bound4 = shape(10_000.0) / shape(100.0) * 1.5;
    outcome(
        e3 / e2 <= bound3 && e4 / e2 <= bound4,
        format!(
            "seed {}: e100={e2:.3e} e1000={e3:.3e} e10000={e4:.3e}; e1000/e100={:.4} (bound {bound3:.4}), e10000/e100={:.5} (bound {bound4:.5})",
            case.seed,
            e3 / e2,
            e4 / e2
        ),
    )
}

fn a6() -> Outcome {
    let (d, k) = (100, 20);
    let grid = decade_lambda_grid();
    let dual_cfg = SolverConfig {
        max_iters: 10_000,
        step_schedule: StepSchedule::Lipschitz,
        stop_gap_tol: 1e-8,
        stop_rel_primal_tol: 1e-6,
        record_every: 10,
        ..Default::default()
    };
    let primal_cfg = SolverConfig {
        stop_gap_tol: 0.0,
        ..dual_cfg.clone()
    };
    let mut pass = true;
    let mut lines = Vec::new();
    for n in [25, 50, 100] {
        let mut scales = Vec::new();
        let replicates: Vec<Replicate> = (0..30)
            .map(|r| {
                let (data, true_w) = generate_synthetic(&SyntheticSpec::new(d, k, n, 1000 * n as u64 + r)).unwrap();
                let (scaled, c) = scale_by_max_row_norm(&data);
                scales.push(c);
                Replicate {
                    data: Arc::new(scaled),
                    true_w,
                }
            })
            .collect();
        // models fitted on rows divided by c estimate c·w̄
        let unscale = |inst: &ProblemInstance, w: Vec<f64>| -> Vec<f64> {
            let c = replicates
                .iter()
                .zip(&scales)
                .find(|(r, _)| Arc::ptr_eq(&r.data, inst.data()))
                .map(|(_, c)| *c)
                .unwrap();
            w.into_iter().map(|v| v / c).collect()
        };
        let batch = TrialBatch::new(replicates.clone(), 10).unwrap();
        let dual = pssr(&batch, k, LossModel::Squared, &grid, |inst| {
            Ok(unscale(inst, diht(inst, &dual_cfg)?.primal_state.w.into_inner()))
        })
        .unwrap();
        let primal = pssr(&batch, k, LossModel::Squared, &grid, |inst| {
            Ok(unscale(inst, iht_baseline(inst, &primal_cfg)?.primal_state.w.into_inner()))
        })
        .unwrap();
        if n <= 50 {
            pass &= dual.mean_estimation_error <= primal.mean_estimation_error * 1.02;
        }
        lines.push(format!(
            "N={n}: DIHT err {:.3} pssr {:.2} (lambda {:e}) vs IHT err {:.3} pssr {:.2} (lambda {:e})",
            dual.mean_estimation_error, dual.pssr, dual.lambda, primal.mean_estimation_error, primal.pssr, primal.lambda
        ));
    }
    outcome(pass, lines.join("; "))
}

fn a7(cases: &[OracleCase]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut pairs = 0;
    for (li, loss) in LOSSES.into_iter().enumerate() {
        for draw in 0..334u64 {
            let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
            let inst = random_instance(20_000 + 1000 * li as u64 + draw, 10, 8, 3, lambda, loss);
            for _ in 0..10 {
                let alpha = random_alpha(&mut rng, &inst, 3.0);
                let z: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
                let w = hard_threshold_k(&z, 3).unwrap();
                if dual_value(&inst, &alpha).unwrap() > primal_value(&inst, &w).unwrap() + 1e-10 {
                    violations += 1;
                }
                pairs += 1;
            }
        }
    }
    let mut certified = 0;
    let mut passed = 0;
    for case in cases.iter().filter(|c| c.certified()) {
        certified += 1;
        let rep =
            certify_saddle_point(&case.inst, &case.oracle.w.w, &case.oracle.alpha, CertifyOptions::default()).unwrap();
        passed += usize::from(rep.passed());
    }
    outcome(
        violations == 0 && passed == certified,
        format!("{violations} weak-duality violations in {pairs} pairs; {passed}/{certified} certified oracle pairs pass at tol 1e-6"),
    )
}

fn a8(cases: &[OracleCase]) -> Outcome {
    let inst = &cases[10].inst;
    let k = inst.k();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut draws = 0;
    while points < 100 && draws < 100_000 {
        draws += 1;
        let alpha = random_alpha(&mut rng, inst, 2.0);
        let acc = DualState::from_alpha(inst, alpha.clone()).unwrap().accumulator;
        let mut mags: Vec<f64> = acc.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        if mags[k - 1] - mags[k] < 1e-3 {
            continue;
        }
        let w = primal_from_dual(inst, &alpha).unwrap();
        let g = dual_supergradient(inst, &alpha, &w).unwrap();
        for i in 0..inst.n_samples() {
            let (mut plus, mut minus) = (alpha.clone(), alpha.clone());
            plus[i] += h;
            minus[i] -= h;
            let fd = (dual_value(inst, &plus).unwrap() - dual_value(inst, &minus).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs());
        }
        points += 1;
    }
    outcome(
        points == 100 && worst <= 1e-5,
        format!("{points} support-stable points, max |fd - g| = {worst:.2e}"),
    )
}

fn a9() -> Outcome {
    let (data, _) = generate_synthetic(&SyntheticSpec::new(2000, 100, 5000, 7)).unwrap();
    let data = sign_labels(&normalize_rows(&data));
    let inst = ProblemInstance::new(data, 0.002, 100, LossModel::Hinge).unwrap();

    // step sizes chosen by a short grid search per solver
    let short = |iters: usize| SolverConfig {
        max_iters: iters,
        stop_gap_tol: 0.0,
        stop_rel_primal_tol: 0.0,
        record_every: iters,
        ..Default::default()
    };
    let inv_t = |etas: &[f64]| etas.iter().map(|&eta0| StepSchedule::InvT { eta0 }).collect::<Vec<_>>();
    let constant = |etas: &[f64]| etas.iter().map(|&eta0| StepSchedule::Constant { eta0 }).collect::<Vec<_>>();
    let (iht_step, _) = tune_step(&inst, SolverKind::Iht, &short(40), &inv_t(&[5.0, 20.0, 80.0])).unwrap();
    let (diht_step, _) = tune_step(&inst, SolverKind::Diht, &short(20), &constant(&[1e2, 1e3, 1e4])).unwrap();
    let sdiht_base = SolverConfig {
        blocks: 10,
        ..short(100)
    };
    let (sdiht_step, _) = tune_step(&inst, SolverKind::Sdiht, &sdiht_base, &constant(&[1e2, 1e3, 1e4])).unwrap();

    let reference = Contender {
        label: "iht".into(),
        solver: SolverKind::Iht,
        config: SolverConfig {
            max_iters: 5000,
            step_schedule: iht_step,
            stop_gap_tol: 0.0,
            stop_rel_primal_tol: 1e-4,
            ..Default::default()
        },
    };
    let contenders = [
        Contender {
            label: "diht".into(),
            solver: SolverKind::Diht,
            config: SolverConfig {
                max_iters: 2000,
                step_schedule: diht_step,
                ..Default::default()
            },
        },
        Contender {
            label: "sdiht".into(),
            solver: SolverKind::Sdiht,
            config: SolverConfig {
                max_iters: 20_000,
                step_schedule: sdiht_step,
                blocks: 10,
                ..Default::default()
            },
        },
    ];
    let table = time_to_target(&inst, &reference, &contenders).unwrap();
    let rows: Vec<String> = table
        .rows()
        .map(|r| format!("{} {:.2}s/{} it reached={}", r.solver, r.seconds, r.iterations, r.reached))
        .collect();
    outcome(
        table.reference_converged && table.contenders.iter().all(|r| r.reached),
        format!(
            "target P={:.6}, reference converged: {}; {}",
            table.target_primal,
            table.reference_converged,
            rows.join(", ")
        ),
    )
}

fn a10() -> Outcome {
    let inst = random_instance(31, 9, 6, 1, 1.0, LossModel::Squared);
    let rows = inst.data().to_dense_rows();
    let x = DMatrix::from_fn(6, 9, |i, j| rows[j][i]);
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for s in 1..=4 {
        // independent enumeration: bitmask supports and SVD of the row-restricted matrix
        let (mut smax, mut smin): (f64, f64) = (0.0, f64::INFINITY);
        for mask in 1u32..64 {
            if mask.count_ones() as usize > s {
                continue;
            }
            let f: Vec<usize> = (0..6).filter(|j| mask & (1 << j) != 0).collect();
            let sv = x.select_rows(f.iter()).singular_values();
            smax = smax.max(sv.max());
            smin = smin.min(sv.min());
        }
        let got = restricted_singular_values(inst.data(), s).unwrap();
        if s <= 3 {
            worst = worst.max((got.0 - smax).abs()).max((got.1 - smin).abs());
        }
        values.push(got);
    }
    let monotone = values.windows(2).all(|w| w[0].1 >= w[1].1 && w[0].0 <= w[1].0);
    outcome(
        worst <= 1e-10 && monotone,
        format!("max deviation from enumeration {worst:.2e}; monotone in s: {monotone}"),
    )
}

fn main() -> ExitCode {
    let setup = Instant::now();
    let cases = oracle_cases();
    println!(
        "oracle instances prepared in {:.1} s ({} with eps_bar > 0)",
        setup.elapsed().as_secs_f64(),
        cases.iter().filter(|c| c.certified()).count()
    );

    type Criterion<'a> = (&'a str, &'a str, f64, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("A1", "oracle equivalence", 60.0, Box::new(|| a1(&cases))),
        ("A2", "conjugate correctness", 5.0, Box::new(a2)),
        ("A3", "gap identity", 10.0, Box::new(a3)),
        ("A4", "block solver with m=1 equals batch solver", 10.0, Box::new(|| a4(&cases))),
        ("A5", "dual convergence rate shape", 30.0, Box::new(|| a5(&cases))),
        ("A6", "estimation error versus primal IHT", 300.0, Box::new(a6)),
        ("A7", "weak duality and certificates", 30.0, Box::new(|| a7(&cases))),
        ("A8", "finite-difference super-gradient", 10.0, Box::new(|| a8(&cases))),
        ("A9", "time-to-target on hinge loss", 300.0, Box::new(a9)),
        ("A10", "restricted singular values", 5.0, Box::new(a10)),
    ];

    let mut failed = 0;
    for (id, name, budget, run) in &criteria {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = result.pass && secs <= *budget;
        failed += usize::from(!pass);
        println!(
            "{id} {} {name}: {} [{secs:.1} s, budget {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

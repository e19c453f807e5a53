//! Primal baselines: iterative hard thresholding and hard thresholding pursuit.

use std::collections::BTreeMap;

use super::config::{SolverConfig, StepRule, StepSide};
use super::oracle::restricted_minimizer;
use super::report::{RunReport, SolverKind, StopReason};
use super::{finish, RunOptions, Tracker};
use crate::error::Result;
use crate::objective::{DualState, PrimalState, ProblemInstance};
use crate::vecops::{hard_threshold_k, norm_sq, top_k_indices, DenseVector};

/// Inner duality-gap tolerance of the pursuit's restricted solves.
const HTP_INNER_TOL: f64 = 1e-8;

pub fn iht_baseline(inst: &ProblemInstance, config: &SolverConfig) -> Result<RunReport> {
    iht_baseline_with(inst, config, &RunOptions::default())
}

pub fn htp_baseline(inst: &ProblemInstance, config: &SolverConfig) -> Result<RunReport> {
    htp_baseline_with(inst, config, &RunOptions::default())
}

/// Dual point paired with a primal iterate: `αᵢ = proj(l'(xᵢᵀw))`, and `‖w(α)‖²`.
fn induced_dual(inst: &ProblemInstance, margins: &[f64]) -> Result<(Vec<f64>, f64)> {
    let loss = inst.loss();
    let alpha: Vec<f64> = margins
        .iter()
        .zip(inst.labels())
        .map(|(&u, &y)| loss.project_feasible(loss.loss_derivative(u, y), y))
        .collect();
    let w_alpha = hard_threshold_k(&inst.accumulator(&alpha), inst.k())?;
    Ok((alpha, norm_sq(&w_alpha)))
}

fn gradient(inst: &ProblemInstance, w: &[f64], margins: &[f64]) -> Vec<f64> {
    let loss = inst.loss();
    let n = inst.n_samples() as f64;
    let mut g: Vec<f64> = w.iter().map(|v| inst.lambda() * v).collect();
    for ((s, &u), &y) in inst.samples().iter().zip(margins).zip(inst.labels()) {
        let d = loss.loss_derivative(u, y);
        if d != 0.0 {
            s.axpy_into(d / n, &mut g);
        }
    }
    g
}

pub fn iht_baseline_with(inst: &ProblemInstance, config: &SolverConfig, opts: &RunOptions) -> Result<RunReport> {
    run(SolverKind::Iht, inst, config, opts)
}

pub fn htp_baseline_with(inst: &ProblemInstance, config: &SolverConfig, opts: &RunOptions) -> Result<RunReport> {
    run(SolverKind::Htp, inst, config, opts)
}

fn run(kind: SolverKind, inst: &ProblemInstance, config: &SolverConfig, opts: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    let rule = StepRule::new(config.step_schedule, inst, StepSide::Primal)?;
    let mut tracker = Tracker::new(inst, config, opts, true);

    let mut w = PrimalState::zeros(inst.dim());
    let mut margins = inst.margins(&w.w);
    let (alpha, dual_norm) = induced_dual(inst, &margins)?;
    let mut stop = tracker.record(0, &w, &margins, &alpha, dual_norm).unwrap_or(StopReason::MaxIters);
    let mut snapshot = w.clone();
    let mut iterations = 0;
    let mut last_support = None;
    // restricted dual solution of the previous pursuit step, used as a warm start
    let mut warm: Option<Vec<f64>> = None;

    if stop == StopReason::MaxIters {
        for t in 1..=config.max_iters {
            iterations = t;
            let eta = rule.at(t - 1);
            let g = gradient(inst, &w.w, &margins);
            let z: Vec<f64> = w.w.iter().zip(&g).map(|(wi, gi)| wi - eta * gi).collect();
            if z.iter().any(|v| !v.is_finite()) {
                stop = StopReason::Diverged;
                break;
            }
            let mut support_repeated = false;
            let next = match kind {
                SolverKind::Htp => {
                    let support = top_k_indices(&z, inst.k())?;
                    let (w_new, a) = restricted_minimizer(inst, &support, warm.as_deref(), HTP_INNER_TOL)?;
                    warm = Some(a);
                    support_repeated = last_support.as_ref() == Some(&support);
                    last_support = Some(support);
                    DenseVector::new(w_new)?
                }
                _ => hard_threshold_k(&z, inst.k())?,
            };
            w = PrimalState::from_dense(next);
            margins = inst.margins(&w.w);
            if tracker.due(t) || support_repeated {
                let (a, norm) = induced_dual(inst, &margins)?;
                if let Some(reason) = tracker.record(t, &w, &margins, &a, norm) {
                    stop = reason;
                    break;
                }
                snapshot = w.clone();
                if support_repeated {
                    stop = StopReason::SupportStable;
                    break;
                }
            }
        }
    }
    if stop != StopReason::Diverged {
        snapshot = w;
    }
    let alpha = induced_dual(inst, &inst.margins(&snapshot.w))?.0;
    let dual_state = DualState::from_alpha(inst, alpha)?;
    let mut metadata = BTreeMap::new();
    metadata.insert("dual_point".into(), "projected_loss_derivative".into());
    metadata.insert("initial_step".into(), format!("{}", rule.at(0)));
    Ok(finish(kind, tracker, snapshot, dual_state, iterations, stop, metadata))
}

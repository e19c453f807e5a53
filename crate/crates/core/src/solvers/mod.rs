//! Dual and primal solvers, step-size schedules, and run reports.

mod config;
mod dual;
mod oracle;
mod primal;
mod report;

use std::time::Instant;

pub use config::{make_partition, step_size, BlockPartition, SolverConfig, StepSchedule};
pub use dual::{diht, diht_with, sdiht, sdiht_with};
pub use oracle::{brute_force_oracle, restricted_minimizer, OracleSolution};
pub use primal::{htp_baseline, htp_baseline_with, iht_baseline, iht_baseline_with};
pub use report::{RunReport, SolverKind, StopReason, TraceRow};

use crate::objective::{DualState, PrimalState, ProblemInstance};
use crate::vecops::norm_sq;

/// Primal values above this abort a run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Consecutive recorded primal increases after which a primal baseline is flagged as diverging.
pub const PRIMAL_INCREASE_LIMIT: usize = 50;

/// Per-run extras that are not part of the solver configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Stop as soon as a recorded primal value is at or below this target.
    pub target_primal: Option<f64>,
    /// Record `‖α^(t) - α_ref‖` in every trace row.
    pub reference_alpha: Option<Vec<f64>>,
}

/// Dispatches on the solver id; `sdiht` builds its partition from `config.seed`.
pub fn run_solver(
    kind: SolverKind,
    inst: &ProblemInstance,
    config: &SolverConfig,
    opts: &RunOptions,
) -> crate::Result<RunReport> {
    match kind {
        SolverKind::Diht => diht_with(inst, config, opts),
        SolverKind::Sdiht => {
            let partition = make_partition(inst.n_samples(), config.blocks, config.seed)?;
            sdiht_with(inst, config, &partition, opts)
        }
        SolverKind::Iht => iht_baseline_with(inst, config, opts),
        SolverKind::Htp => htp_baseline_with(inst, config, opts),
    }
}

/// Evaluates trace rows and the stopping rules shared by every solver.
struct Tracker<'a> {
    inst: &'a ProblemInstance,
    config: &'a SolverConfig,
    opts: &'a RunOptions,
    start: Instant,
    rows: Vec<crate::solvers::TraceRow>,
    increases: usize,
    watch_increases: bool,
}

impl<'a> Tracker<'a> {
    fn new(inst: &'a ProblemInstance, config: &'a SolverConfig, opts: &'a RunOptions, watch_increases: bool) -> Self {
        Tracker {
            inst,
            config,
            opts,
            start: Instant::now(),
            rows: Vec::new(),
            increases: 0,
            watch_increases,
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn due(&self, t: usize) -> bool {
        t.is_multiple_of(self.config.record_every) || t == self.config.max_iters
    }

    /// Appends a row for `(w, α)`; `margins` are `xᵢᵀw` and `dual_w_norm_sq` is `‖w(α)‖²`.
    fn record(
        &mut self,
        t: usize,
        w: &PrimalState,
        margins: &[f64],
        alpha: &[f64],
        dual_w_norm_sq: f64,
    ) -> Option<StopReason> {
        let inst = self.inst;
        let primal = inst.primal_from_margins(margins, norm_sq(&w.w));
        let dual = -inst.conjugate_mean(alpha) - 0.5 * inst.lambda() * dual_w_norm_sq;
        if !primal.is_finite() || !dual.is_finite() || primal > DIVERGENCE_LIMIT {
            return Some(StopReason::Diverged);
        }
        let alpha_dist = self.opts.reference_alpha.as_ref().map(|r| {
            r.iter()
                .zip(alpha)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        let previous = self.rows.last().map(|r| r.primal);
        self.rows.push(TraceRow {
            t,
            seconds: self.elapsed(),
            primal,
            dual,
            gap: primal - dual,
            support: w.support.clone(),
            alpha_dist,
        });

        if let Some(target) = self.opts.target_primal {
            if primal <= target {
                return Some(StopReason::TargetReached);
            }
        }
        if self.config.stop_gap_tol > 0.0 && primal - dual <= self.config.stop_gap_tol {
            return Some(StopReason::GapTolerance);
        }
        if let Some(prev) = previous {
            if self.config.stop_rel_primal_tol > 0.0
                && (primal - prev).abs() <= self.config.stop_rel_primal_tol * primal.abs()
            {
                return Some(StopReason::RelativePrimalChange);
            }
            if self.watch_increases {
                self.increases = if primal > prev { self.increases + 1 } else { 0 };
                if self.increases >= PRIMAL_INCREASE_LIMIT {
                    return Some(StopReason::Diverged);
                }
            }
        }
        None
    }
}

/// Final assembly shared by the solvers.
#[allow(clippy::too_many_arguments)]
fn finish(
    kind: SolverKind,
    tracker: Tracker<'_>,
    primal_state: PrimalState,
    dual_state: DualState,
    iterations: usize,
    stop_reason: StopReason,
    mut metadata: std::collections::BTreeMap<String, String>,
) -> RunReport {
    let seconds = tracker.elapsed();
    if stop_reason == StopReason::Diverged {
        metadata.insert("diverged_at".into(), iterations.to_string());
    }
    metadata.insert("step_schedule".into(), tracker.config.step_schedule.id().into());
    RunReport {
        solver: kind,
        config: tracker.config.clone(),
        seed: tracker.config.seed,
        rows: tracker.rows,
        primal_state,
        dual_state,
        iterations,
        stop_reason,
        diverged: stop_reason == StopReason::Diverged,
        seconds,
        metadata,
    }
}

//! Estimation error, support recovery, λ selection over replicate batches,
//! and the time-to-target protocol.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossModel;
use crate::objective::{Dataset, ProblemInstance};
use crate::solvers::{run_solver, RunOptions, SolverConfig, SolverKind, StepSchedule, StopReason};
use crate::vecops::{support, DenseVector};

fn check_dims(w: &[f64], true_w: &[f64]) -> Result<()> {
    if w.len() != true_w.len() {
        return Err(Error::DimensionMismatch {
            expected: true_w.len(),
            found: w.len(),
        });
    }
    Ok(())
}

/// `‖w - w̄‖ / ‖w̄‖`.
pub fn estimation_error(w: &[f64], true_w: &[f64]) -> Result<f64> {
    check_dims(w, true_w)?;
    let reference: f64 = true_w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: f64 = w.iter().zip(true_w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(diff / reference)
}

/// True iff `supp(w) = supp(w̄)`.
pub fn support_recovery_success(w: &[f64], true_w: &[f64]) -> Result<bool> {
    check_dims(w, true_w)?;
    Ok(support(w) == support(true_w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub data: Arc<Dataset>,
    pub true_w: DenseVector,
}

/// Replicates split into a validation prefix and an evaluation suffix.
#[derive(Debug, Clone)]
pub struct TrialBatch {
    replicates: Vec<Replicate>,
    validation: usize,
}

impl TrialBatch {
    pub fn new(replicates: Vec<Replicate>, validation: usize) -> Result<Self> {
        if replicates.is_empty() {
            return Err(Error::Empty("trial batch has no replicates"));
        }
        if validation >= replicates.len() {
            return Err(Error::Config(format!(
                "validation split {validation} leaves no evaluation replicates out of {}",
                replicates.len()
            )));
        }
        Ok(TrialBatch { replicates, validation })
    }

    pub fn validation(&self) -> &[Replicate] {
        &self.replicates[..self.validation]
    }

    pub fn evaluation(&self) -> &[Replicate] {
        &self.replicates[self.validation..]
    }

    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// λ chosen on the validation replicates.
    pub lambda: f64,
    /// Fraction of evaluation replicates whose support is recovered exactly.
    pub pssr: f64,
    pub mean_estimation_error: f64,
    pub evaluation_count: usize,
    /// Mean validation estimation error per grid value, in grid order.
    pub selection: Vec<(f64, f64)>,
    pub selection_statistic: String,
}

/// Runs `solve` over the batch: selects λ by mean validation estimation
/// error, then reports support recovery on the evaluation replicates.
///
/// `solve` maps an instance to a model in the units of `true_w`. Replicates
/// run concurrently on the rayon pool; results do not depend on scheduling.
pub fn pssr<F>(batch: &TrialBatch, k: usize, loss: LossModel, lambda_grid: &[f64], solve: F) -> Result<TrialOutcome>
where
    F: Fn(&ProblemInstance) -> Result<Vec<f64>> + Sync,
{
    if lambda_grid.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    let run = |rep: &Replicate, lambda: f64| -> Result<(f64, bool)> {
        let inst = ProblemInstance::new(rep.data.clone(), lambda, k, loss)?;
        let w = solve(&inst)?;
        Ok((
            estimation_error(&w, &rep.true_w)?,
            support_recovery_success(&w, &rep.true_w)?,
        ))
    };
    let mean_error = |reps: &[Replicate], lambda: f64| -> Result<Vec<(f64, bool)>> {
        reps.par_iter().map(|r| run(r, lambda)).collect()
    };

    let mut selection = Vec::new();
    let lambda = if lambda_grid.len() == 1 {
        lambda_grid[0]
    } else {
        if batch.validation().is_empty() {
            return Err(Error::Config("selecting lambda needs validation replicates".into()));
        }
        let mut best = (f64::INFINITY, lambda_grid[0]);
        for &lambda in lambda_grid {
            let results = mean_error(batch.validation(), lambda)?;
            let mean = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
            selection.push((lambda, mean));
            if mean < best.0 {
                best = (mean, lambda);
            }
        }
        best.1
    };

    let results = mean_error(batch.evaluation(), lambda)?;
    let count = results.len();
    Ok(TrialOutcome {
        lambda,
        pssr: results.iter().filter(|r| r.1).count() as f64 / count as f64,
        mean_estimation_error: results.iter().map(|r| r.0).sum::<f64>() / count as f64,
        evaluation_count: count,
        selection,
        selection_statistic: "mean_estimation_error".into(),
    })
}

/// The decade grid `10^-6, …, 10^2`.
pub fn decade_lambda_grid() -> Vec<f64> {
    (-6..=2).map(|e| 10f64.powi(e)).collect()
}

/// A named solver setup for the time-to-target protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contender {
    pub label: String,
    pub solver: SolverKind,
    pub config: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub solver: String,
    pub seconds: f64,
    pub iterations: usize,
    pub reached: bool,
    pub final_primal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTable {
    pub target_primal: f64,
    /// Whether the reference stopped on its relative-change criterion rather than its cap.
    pub reference_converged: bool,
    pub reference: TimeRow,
    pub contenders: Vec<TimeRow>,
}

impl TimeTable {
    pub fn rows(&self) -> impl Iterator<Item = &TimeRow> {
        std::iter::once(&self.reference).chain(&self.contenders)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv_rows(self.rows(), out)
    }
}

/// Runs the reference to its stopping rule, takes its final primal value as
/// the target, then times each contender until it reaches that value or
/// exhausts its iteration cap.
///
/// Every solver first gets a short discarded warm-up run. Contenders have
/// their own gap and relative-change rules disabled. Runs are serial so
/// timings stay comparable.
pub fn time_to_target(inst: &ProblemInstance, reference: &Contender, contenders: &[Contender]) -> Result<TimeTable> {
    let warm_up = |c: &Contender| -> Result<()> {
        let cfg = SolverConfig {
            max_iters: c.config.max_iters.min(10),
            ..c.config.clone()
        };
        run_solver(c.solver, inst, &cfg, &RunOptions::default()).map(|_| ())
    };

    warm_up(reference)?;
    let ref_report = run_solver(reference.solver, inst, &reference.config, &RunOptions::default())?;
    let target = ref_report.final_primal();
    let reference_row = TimeRow {
        solver: reference.label.clone(),
        seconds: ref_report.seconds,
        iterations: ref_report.iterations,
        reached: true,
        final_primal: target,
    };

    let mut rows = Vec::new();
    for c in contenders {
        warm_up(c)?;
        let cfg = SolverConfig {
            stop_gap_tol: 0.0,
            stop_rel_primal_tol: 0.0,
            ..c.config.clone()
        };
        let opts = RunOptions {
            target_primal: Some(target),
            reference_alpha: None,
        };
        let report = run_solver(c.solver, inst, &cfg, &opts)?;
        rows.push(TimeRow {
            solver: c.label.clone(),
            seconds: report.seconds,
            iterations: report.iterations,
            reached: report.stop_reason == StopReason::TargetReached,
            final_primal: report.final_primal(),
        });
    }
    Ok(TimeTable {
        target_primal: target,
        reference_converged: ref_report.stop_reason == StopReason::RelativePrimalChange,
        reference: reference_row,
        contenders: rows,
    })
}

/// Picks the schedule with the lowest final primal value among runs that did not diverge.
pub fn tune_step(
    inst: &ProblemInstance,
    solver: SolverKind,
    base: &SolverConfig,
    candidates: &[StepSchedule],
) -> Result<(StepSchedule, f64)> {
    let mut best: Option<(StepSchedule, f64)> = None;
    for &schedule in candidates {
        let cfg = SolverConfig {
            step_schedule: schedule,
            ..base.clone()
        };
        let report = run_solver(solver, inst, &cfg, &RunOptions::default())?;
        if report.diverged {
            continue;
        }
        let p = report.final_primal();
        if best.is_none_or(|(_, bp)| p < bp) {
            best = Some((schedule, p));
        }
    }
    best.ok_or_else(|| Error::Config("every candidate step schedule diverged".into()))
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv_rows<'a, T, I, W>(rows: I, out: W) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
    W: Write,
{
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Config(format!("csv serialization failed: {e}")))?;
    }
    writer.flush().map_err(|e| Error::io("<csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::solvers::diht;

    #[test]
    fn estimation_error_examples() {
        let w = [1.0, -2.0, 0.0];
        assert_eq!(estimation_error(&w, &w).unwrap(), 0.0);
        assert_eq!(estimation_error(&[0.0; 3], &w).unwrap(), 1.0);
        assert_eq!(estimation_error(&[2.0, -4.0, 0.0], &w).unwrap(), 1.0);
        for c in [-1.5, 0.25, 3.0] {
            let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
            assert!((estimation_error(&scaled, &w).unwrap() - (c - 1.0f64).abs()).abs() < 1e-15);
        }
        assert!(matches!(estimation_error(&w, &[0.0; 3]), Err(Error::ZeroReference)));
        assert!(estimation_error(&w, &[1.0]).is_err());
    }

    #[test]
    fn support_recovery_examples() {
        assert!(support_recovery_success(&[0.5, 0.0, 3.0], &[1.0, 0.0, 1.0]).unwrap());
        assert!(!support_recovery_success(&[0.5, 0.1, 3.0], &[1.0, 0.0, 1.0]).unwrap());
        assert!(support_recovery_success(&[0.0; 2], &[0.0; 2]).unwrap());
    }

    fn batch(count: usize, validation: usize) -> TrialBatch {
        let reps = (0..count)
            .map(|seed| {
                let (data, true_w) = generate_synthetic(&SyntheticSpec::new(10, 2, 40, seed as u64)).unwrap();
                Replicate {
                    data: Arc::new(data),
                    true_w,
                }
            })
            .collect();
        TrialBatch::new(reps, validation).unwrap()
    }

    fn solve(inst: &ProblemInstance) -> Result<Vec<f64>> {
        let cfg = SolverConfig {
            max_iters: 300,
            step_schedule: StepSchedule::Lipschitz,
            stop_gap_tol: 0.0,
            stop_rel_primal_tol: 0.0,
            record_every: 300,
            ..Default::default()
        };
        Ok(diht(inst, &cfg)?.primal_state.w.into_inner())
    }

    #[test]
    fn pssr_singleton_grid_and_determinism() {
        let b = batch(4, 0);
        let out = pssr(&b, 2, LossModel::Squared, &[0.5], solve).unwrap();
        assert!(out.selection.is_empty());
        assert!((0.0..=1.0).contains(&out.pssr));
        let again = pssr(&b, 2, LossModel::Squared, &[0.5], solve).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn pssr_selects_on_validation() {
        let b = batch(5, 2);
        let grid = [1e-3, 1e-1, 1e1];
        let out = pssr(&b, 2, LossModel::Squared, &grid, solve).unwrap();
        assert_eq!(out.selection.len(), 3);
        let best = out.selection.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert_eq!(out.lambda, best);
        assert_eq!(out.evaluation_count, 3);
        assert!(pssr(&batch(3, 0), 2, LossModel::Squared, &grid, solve).is_err());
        assert!(pssr(&b, 2, LossModel::Squared, &[], solve).is_err());
    }

    #[test]
    fn decade_grid_has_nine_values() {
        let g = decade_lambda_grid();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[8], 100.0);
    }
}

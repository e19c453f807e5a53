//! Dual iterative hard thresholding, batch and stochastic block variants.
//!
//! Both run through one engine: the batch solver is the block solver with a
//! single block holding every sample, so the two produce identical traces
//! when `m = 1`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{BlockPartition, SolverConfig, StepRule, StepSide};
use super::report::{RunReport, SolverKind, StopReason};
use super::{finish, RunOptions, Tracker};
use crate::error::Result;
use crate::objective::{DualState, PrimalState, ProblemInstance};
use crate::vecops::{hard_threshold_k, norm_sq};

/// Blocks at least this large compute their dual updates on the rayon pool.
const PARALLEL_BLOCK: usize = 4096;

pub fn diht(inst: &ProblemInstance, config: &SolverConfig) -> Result<RunReport> {
    diht_with(inst, config, &RunOptions::default())
}

pub fn diht_with(inst: &ProblemInstance, config: &SolverConfig, opts: &RunOptions) -> Result<RunReport> {
    let all = BlockPartition::new(vec![(0..inst.n_samples()).collect()], inst.n_samples())?;
    run(SolverKind::Diht, inst, config, &all, opts)
}

pub fn sdiht(inst: &ProblemInstance, config: &SolverConfig, partition: &BlockPartition) -> Result<RunReport> {
    sdiht_with(inst, config, partition, &RunOptions::default())
}

pub fn sdiht_with(
    inst: &ProblemInstance,
    config: &SolverConfig,
    partition: &BlockPartition,
    opts: &RunOptions,
) -> Result<RunReport> {
    if partition.n_samples() != inst.n_samples() {
        return Err(crate::Error::DimensionMismatch {
            expected: inst.n_samples(),
            found: partition.n_samples(),
        });
    }
    run(SolverKind::Sdiht, inst, config, partition, opts)
}

fn run(
    kind: SolverKind,
    inst: &ProblemInstance,
    config: &SolverConfig,
    partition: &BlockPartition,
    opts: &RunOptions,
) -> Result<RunReport> {
    config.validate()?;
    if let Some(r) = &opts.reference_alpha {
        inst.check_dual(r)?;
    }
    let rule = StepRule::new(
        config.step_schedule,
        inst,
        StepSide::Dual {
            blocks: partition.len(),
        },
    )?;
    let n = inst.n_samples() as f64;
    let loss = inst.loss();
    let samples = inst.samples();
    let labels = inst.labels();
    let coef = -1.0 / (inst.lambda() * n);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut state = DualState::zeros(inst);
    let mut w = PrimalState::zeros(inst.dim());
    let mut tracker = Tracker::new(inst, config, opts, false);
    let mut snapshot = (state.clone(), w.clone());
    let mut iterations = 0;
    // margins of the current w, kept after a recorded row for the next super-gradient
    let mut margins: Option<Vec<f64>> = Some(vec![0.0; inst.n_samples()]);
    let mut stop = tracker
        .record(0, &w, margins.as_deref().unwrap(), &state.alpha, 0.0)
        .unwrap_or(StopReason::MaxIters);
    let stopped_early = stop != StopReason::MaxIters;

    if !stopped_early {
        for t in 1..=config.max_iters {
            let block = &partition.blocks()[rng.random_range(0..partition.len())];
            let eta = rule.at(t - 1);
            let cached = margins.take();
            let update = |&i: &usize| {
                let a = state.alpha[i];
                let y = labels[i];
                let u = match &cached {
                    Some(m) => m[i],
                    None => samples[i].dot_unchecked(&w.w),
                };
                let g = (u - loss.conjugate_slope(a, y)) / n;
                loss.project_feasible(a + eta * g, y)
            };
            let fresh: Vec<f64> = if block.len() >= PARALLEL_BLOCK {
                block.par_iter().map(update).collect()
            } else {
                block.iter().map(update).collect()
            };
            for (&i, &a) in block.iter().zip(&fresh) {
                let delta = a - state.alpha[i];
                state.alpha[i] = a;
                if delta != 0.0 {
                    samples[i].axpy_into(coef * delta, &mut state.accumulator);
                }
            }
            if t % config.resync_every == 0 {
                state.resync(inst);
            }
            iterations = t;
            if state.accumulator.iter().any(|v| !v.is_finite()) {
                stop = StopReason::Diverged;
                break;
            }
            w = PrimalState::from_dense(hard_threshold_k(&state.accumulator, inst.k())?);
            if tracker.due(t) {
                let m = inst.margins(&w.w);
                let reason = tracker.record(t, &w, &m, &state.alpha, norm_sq(&w.w));
                margins = Some(m);
                if let Some(reason) = reason {
                    stop = reason;
                    if reason != StopReason::Diverged {
                        snapshot = (state.clone(), w.clone());
                    }
                    break;
                }
                snapshot = (state.clone(), w.clone());
            }
        }
    }
    if stop != StopReason::Diverged {
        snapshot = (state, w);
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("blocks".into(), partition.len().to_string());
    if kind == SolverKind::Sdiht {
        metadata.insert("block_sampling".into(), "uniform_with_replacement".into());
    }
    metadata.insert("initial_step".into(), format!("{}", rule.at(0)));
    Ok(finish(kind, tracker, snapshot.1, snapshot.0, iterations, stop, metadata))
}

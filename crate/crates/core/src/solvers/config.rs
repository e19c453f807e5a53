use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ProblemInstance;

/// Step-size rule η^(t), `t = 0, 1, …`; iteration `t ≥ 1` uses η^(t-1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    /// `N/(μ(t+1))`, times `m` for the block solver. Dual solvers only.
    TheoremMu,
    Constant { eta0: f64 },
    /// `η₀/(t+1)`.
    InvT { eta0: f64 },
    /// Constant `1/L` for the smooth part of the objective being optimized,
    /// with the spectral norm of the data estimated by power iteration.
    Lipschitz,
}

impl StepSchedule {
    pub fn id(&self) -> &'static str {
        match self {
            StepSchedule::TheoremMu => "theorem_mu",
            StepSchedule::Constant { .. } => "constant",
            StepSchedule::InvT { .. } => "inv_t",
            StepSchedule::Lipschitz => "lipschitz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_schedule: StepSchedule,
    /// Stop once `P - D` drops to this value; 0 disables the rule.
    pub stop_gap_tol: f64,
    /// Stop once `|P^(t) - P^(t-1)| / P^(t)` drops to this value; 0 disables the rule.
    pub stop_rel_primal_tol: f64,
    pub seed: u64,
    /// Number of blocks `m` for the stochastic dual solver.
    pub blocks: usize,
    /// Objectives are evaluated, and stopping rules checked, every this many iterations.
    pub record_every: usize,
    /// Recompute the dual accumulator from scratch every this many iterations.
    pub resync_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 100_000,
            step_schedule: StepSchedule::TheoremMu,
            stop_gap_tol: 1e-8,
            stop_rel_primal_tol: 1e-4,
            seed: 0,
            blocks: 1,
            record_every: 1,
            resync_every: 1000,
        }
    }
}

impl SolverConfig {
    /// Returns every violated constraint, not only the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let nonneg = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} must be a finite non-negative number, got {v}"));
            }
        };
        nonneg("stop_gap_tol", self.stop_gap_tol, &mut out);
        nonneg("stop_rel_primal_tol", self.stop_rel_primal_tol, &mut out);
        match self.step_schedule {
            StepSchedule::Constant { eta0 } | StepSchedule::InvT { eta0 } => {
                nonneg("step_schedule.eta0", eta0, &mut out)
            }
            _ => {}
        }
        if self.blocks == 0 {
            out.push("blocks must be at least 1".into());
        }
        if self.record_every == 0 {
            out.push("record_every must be at least 1".into());
        }
        if self.resync_every == 0 {
            out.push("resync_every must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Whether a schedule drives dual ascent or primal descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepSide {
    Dual { blocks: usize },
    Primal,
}

/// A schedule with its instance-dependent constants resolved once per run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepRule {
    schedule: StepSchedule,
    scale: f64,
}

impl StepRule {
    pub(crate) fn new(schedule: StepSchedule, inst: &ProblemInstance, side: StepSide) -> Result<Self> {
        let n = inst.n_samples() as f64;
        let mu = inst.loss().mu();
        let scale = match (schedule, side) {
            (StepSchedule::TheoremMu, StepSide::Dual { blocks }) => {
                if mu <= 0.0 {
                    return Err(Error::Config(format!(
                        "theorem_mu needs a smooth loss but {} has mu = 0; use constant or inv_t steps",
                        inst.loss().id()
                    )));
                }
                blocks as f64 * n / mu
            }
            (StepSchedule::TheoremMu, StepSide::Primal) => {
                return Err(Error::Config(
                    "theorem_mu is a dual schedule; primal solvers take constant, inv_t or lipschitz".into(),
                ))
            }
            (StepSchedule::Constant { eta0 }, _) | (StepSchedule::InvT { eta0 }, _) => eta0,
            (StepSchedule::Lipschitz, StepSide::Dual { .. }) => {
                // curvature of the conjugate term equals mu for all three losses
                n / (mu + inst.data().mean_gram_spectral_norm() / inst.lambda())
            }
            (StepSchedule::Lipschitz, StepSide::Primal) => {
                let curvature = match inst.loss() {
                    crate::losses::LossModel::Squared => 2.0,
                    crate::losses::LossModel::Huber { gamma } => 1.0 / gamma,
                    crate::losses::LossModel::Hinge => 1.0,
                };
                1.0 / (curvature * inst.data().mean_gram_spectral_norm() + inst.lambda())
            }
        };
        Ok(StepRule { schedule, scale })
    }

    /// η^(t).
    pub(crate) fn at(&self, t: usize) -> f64 {
        match self.schedule {
            StepSchedule::TheoremMu | StepSchedule::InvT { .. } => self.scale / (t as f64 + 1.0),
            StepSchedule::Constant { .. } | StepSchedule::Lipschitz => self.scale,
        }
    }
}

/// η^(t) for the dual solvers (`config.blocks` is the block count `m`).
pub fn step_size(t: usize, config: &SolverConfig, inst: &ProblemInstance) -> Result<f64> {
    let rule = StepRule::new(
        config.step_schedule,
        inst,
        StepSide::Dual {
            blocks: config.blocks,
        },
    )?;
    Ok(rule.at(t))
}

/// Disjoint blocks covering `0..N`, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::Config("partition contains an empty block".into()));
            }
            for &i in block {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, dim: n });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Config(format!("sample {i} appears in two blocks")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("sample {missing} is not covered by any block")));
        }
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        Ok(BlockPartition { blocks, n })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }
}

/// Seeded shuffle of `0..n` cut into `m` blocks whose sizes differ by at most one.
pub fn make_partition(n: usize, m: usize, seed: u64) -> Result<BlockPartition> {
    if m == 0 || m > n {
        return Err(Error::Config(format!(
            "block count must be between 1 and the sample count {n}, got {m}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / m, n % m);
    let mut blocks = Vec::with_capacity(m);
    let mut start = 0;
    for b in 0..m {
        let len = base + usize::from(b < extra);
        blocks.push(order[start..start + len].to_vec());
        start += len;
    }
    BlockPartition::new(blocks, n)
}

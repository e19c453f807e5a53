//! Experiment configuration: a flat JSON object with a schema version.
//!
//! Validation collects every problem it finds instead of stopping at the
//! first one, and unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sparse_dual::data::SyntheticSpec;
use sparse_dual::solvers::{SolverConfig, SolverKind, StepSchedule};
use sparse_dual::LossModel;

pub const SCHEMA_VERSION: u32 = 1;

/// Solver ids accepted by `train`; `oracle` enumerates every support.
pub const SOLVER_IDS: [&str; 5] = ["diht", "sdiht", "iht", "htp", "oracle"];

const KEYS: [&str; 22] = [
    "schema_version",
    "data_path",
    "data_dim",
    "synthetic",
    "normalize_rows",
    "loss",
    "huber_gamma",
    "lambda",
    "k",
    "solver",
    "max_iters",
    "step_schedule",
    "stop_gap_tol",
    "stop_rel_primal_tol",
    "blocks",
    "record_every",
    "resync_every",
    "seed",
    "output_dir",
    "certify_tol",
    "certify_scale_aware",
    "bench",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    pub normalize_rows: bool,
    pub loss: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub huber_gamma: Option<f64>,
    pub lambda: f64,
    pub k: usize,
    pub solver: String,
    pub max_iters: usize,
    pub step_schedule: StepSchedule,
    pub stop_gap_tol: f64,
    pub stop_rel_primal_tol: f64,
    pub blocks: usize,
    pub record_every: usize,
    pub resync_every: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub certify_tol: f64,
    pub certify_scale_aware: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
}

/// A solver entry of a benchmark; unset fields fall back to the top-level values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub solver: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_schedule: Option<StepSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_gap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_rel_primal_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchConfig {
    /// Estimation error and support recovery versus sample size on synthetic data.
    Pssr {
        n_values: Vec<usize>,
        #[serde(default = "default_replicates")]
        replicates: usize,
        #[serde(default = "default_validation")]
        validation: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_grid: Option<Vec<f64>>,
        solvers: Vec<SolverSpec>,
    },
    TimeToTarget {
        reference: SolverSpec,
        contenders: Vec<SolverSpec>,
    },
}

fn default_replicates() -> usize {
    30
}

fn default_validation() -> usize {
    10
}

impl ExperimentConfig {
    pub fn loss_model(&self) -> LossModel {
        LossModel::from_id(&self.loss, self.huber_gamma).expect("validated")
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            step_schedule: self.step_schedule,
            stop_gap_tol: self.stop_gap_tol,
            stop_rel_primal_tol: self.stop_rel_primal_tol,
            seed: self.seed,
            blocks: self.blocks,
            record_every: self.record_every,
            resync_every: self.resync_every,
        }
    }

    /// Top-level solver settings with the entry's overrides applied.
    pub fn solver_config_for(&self, spec: &SolverSpec) -> SolverConfig {
        let base = self.solver_config();
        SolverConfig {
            max_iters: spec.max_iters.unwrap_or(base.max_iters),
            step_schedule: spec.step_schedule.unwrap_or(base.step_schedule),
            stop_gap_tol: spec.stop_gap_tol.unwrap_or(base.stop_gap_tol),
            stop_rel_primal_tol: spec.stop_rel_primal_tol.unwrap_or(base.stop_rel_primal_tol),
            blocks: spec.blocks.unwrap_or(base.blocks),
            record_every: spec.record_every.unwrap_or(base.record_every),
            ..base
        }
    }
}

impl SolverSpec {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.solver)
    }
}

/// Reads and validates a configuration file, resolving `data_path` against the file's directory.
pub fn load(path: &Path) -> Result<ExperimentConfig, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| vec![format!("{}: invalid JSON: {e}", path.display())])?;
    let mut config = validate(&value)?;
    if let Some(p) = &config.data_path {
        if p.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.data_path = Some(base.join(p));
        }
    }
    let mut problems = Vec::new();
    if let Some(p) = &config.data_path {
        if !p.is_file() {
            problems.push(format!("data_path: {} does not exist", p.display()));
        }
    }
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(problems)
    }
}

fn take<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, problems: &mut Vec<String>) -> Option<T> {
    let value = obj.get(key)?;
    match serde_json::from_value(value.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            problems.push(format!("{key}: {e}"));
            None
        }
    }
}

fn required<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, problems: &mut Vec<String>) -> Option<T> {
    if !obj.contains_key(key) {
        problems.push(format!("{key}: missing required key"));
        return None;
    }
    take(obj, key, problems)
}

fn check_solver_id(id: &str, context: &str, problems: &mut Vec<String>) {
    if !SOLVER_IDS.contains(&id) {
        problems.push(format!(
            "{context}: unknown solver {id:?}; valid ids are {}",
            SOLVER_IDS.join(", ")
        ));
    }
}

/// Checks a parsed JSON value against the schema, reporting every problem.
pub fn validate(value: &Value) -> Result<ExperimentConfig, Vec<String>> {
    let Some(obj) = value.as_object() else {
        return Err(vec!["configuration must be a JSON object".into()]);
    };
    let mut problems = Vec::new();
    for key in obj.keys() {
        if !KEYS.contains(&key.as_str()) {
            problems.push(format!("unknown key {key:?}; allowed keys are {}", KEYS.join(", ")));
        }
    }

    let defaults = SolverConfig::default();
    let schema_version: Option<u32> = required(obj, "schema_version", &mut problems);
    if let Some(v) = schema_version {
        if v != SCHEMA_VERSION {
            problems.push(format!("schema_version: expected {SCHEMA_VERSION}, found {v}"));
        }
    }
    let data_path: Option<PathBuf> = take(obj, "data_path", &mut problems);
    let data_dim: Option<usize> = take(obj, "data_dim", &mut problems);
    let synthetic: Option<SyntheticSpec> = take(obj, "synthetic", &mut problems);
    if obj.contains_key("data_path") == obj.contains_key("synthetic") {
        problems.push("exactly one of data_path and synthetic must be given".into());
    }
    if let Some(spec) = &synthetic {
        problems.extend(spec.problems().into_iter().map(|p| format!("synthetic: {p}")));
    }
    let normalize_rows: bool = take(obj, "normalize_rows", &mut problems).unwrap_or(false);

    let loss: Option<String> = required(obj, "loss", &mut problems);
    let huber_gamma: Option<f64> = take(obj, "huber_gamma", &mut problems);
    if let Some(id) = &loss {
        if let Err(e) = LossModel::from_id(id, huber_gamma) {
            problems.push(format!("loss: {e}"));
        }
        if huber_gamma.is_some() && id != "huber" {
            problems.push("huber_gamma: only valid with the huber loss".into());
        }
    }
    let lambda: Option<f64> = required(obj, "lambda", &mut problems);
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            problems.push(format!("lambda: must be positive, got {l}"));
        }
    }
    let k: Option<usize> = required(obj, "k", &mut problems);
    if k == Some(0) {
        problems.push("k: must be at least 1".into());
    }
    if let (Some(k), Some(spec)) = (k, &synthetic) {
        if k > spec.d {
            problems.push(format!("k: {k} exceeds the synthetic dimension {}", spec.d));
        }
    }
    let solver: Option<String> = required(obj, "solver", &mut problems);
    if let Some(id) = &solver {
        check_solver_id(id, "solver", &mut problems);
    }

    let solver_config = SolverConfig {
        max_iters: take(obj, "max_iters", &mut problems).unwrap_or(defaults.max_iters),
        step_schedule: take(obj, "step_schedule", &mut problems).unwrap_or(defaults.step_schedule),
        stop_gap_tol: take(obj, "stop_gap_tol", &mut problems).unwrap_or(defaults.stop_gap_tol),
        stop_rel_primal_tol: take(obj, "stop_rel_primal_tol", &mut problems).unwrap_or(defaults.stop_rel_primal_tol),
        seed: take(obj, "seed", &mut problems).unwrap_or(defaults.seed),
        blocks: take(obj, "blocks", &mut problems).unwrap_or(defaults.blocks),
        record_every: take(obj, "record_every", &mut problems).unwrap_or(defaults.record_every),
        resync_every: take(obj, "resync_every", &mut problems).unwrap_or(defaults.resync_every),
    };
    problems.extend(solver_config.problems());
    let output_dir: Option<PathBuf> = take(obj, "output_dir", &mut problems);
    let certify_tol: f64 = take(obj, "certify_tol", &mut problems).unwrap_or(1e-6);
    if !(certify_tol >= 0.0 && certify_tol.is_finite()) {
        problems.push(format!("certify_tol: must be finite and non-negative, got {certify_tol}"));
    }
    let certify_scale_aware: bool = take(obj, "certify_scale_aware", &mut problems).unwrap_or(false);

    let bench: Option<BenchConfig> = take(obj, "bench", &mut problems);
    if let Some(bench) = &bench {
        match bench {
            BenchConfig::Pssr {
                n_values,
                replicates,
                validation,
                lambda_grid,
                solvers,
            } => {
                if n_values.is_empty() || n_values.contains(&0) {
                    problems.push("bench.n_values: needs at least one positive sample size".into());
                }
                if validation >= replicates {
                    problems.push("bench.validation: must be smaller than bench.replicates".into());
                }
                if lambda_grid.as_ref().is_some_and(|g| g.is_empty() || g.iter().any(|l| l.is_nan() || *l <= 0.0)) {
                    problems.push("bench.lambda_grid: must be a nonempty list of positive values".into());
                }
                if solvers.is_empty() {
                    problems.push("bench.solvers: needs at least one solver".into());
                }
                if synthetic.is_none() {
                    problems.push("bench: the pssr benchmark needs a synthetic dataset".into());
                }
                if normalize_rows {
                    problems.push(
                        "normalize_rows: not supported by the pssr benchmark, which rescales all rows by one factor"
                            .into(),
                    );
                }
                for s in solvers {
                    check_solver_id(&s.solver, "bench.solvers", &mut problems);
                }
            }
            BenchConfig::TimeToTarget { reference, contenders } => {
                check_solver_id(&reference.solver, "bench.reference", &mut problems);
                for s in contenders {
                    check_solver_id(&s.solver, "bench.contenders", &mut problems);
                }
            }
        }
        let specs: Vec<&SolverSpec> = match bench {
            BenchConfig::Pssr { solvers, .. } => solvers.iter().collect(),
            BenchConfig::TimeToTarget { reference, contenders } => {
                std::iter::once(reference).chain(contenders).collect()
            }
        };
        for s in specs {
            if s.solver == "oracle" {
                problems.push("bench: the oracle cannot be benchmarked".into());
            }
        }
    }

    if !problems.is_empty() {
        return Err(problems);
    }
    let config = ExperimentConfig {
        schema_version: schema_version.expect("checked"),
        data_path,
        data_dim,
        synthetic,
        normalize_rows,
        loss: loss.expect("checked"),
        huber_gamma,
        lambda: lambda.expect("checked"),
        k: k.expect("checked"),
        solver: solver.expect("checked"),
        max_iters: solver_config.max_iters,
        step_schedule: solver_config.step_schedule,
        stop_gap_tol: solver_config.stop_gap_tol,
        stop_rel_primal_tol: solver_config.stop_rel_primal_tol,
        blocks: solver_config.blocks,
        record_every: solver_config.record_every,
        resync_every: solver_config.resync_every,
        seed: solver_config.seed,
        output_dir,
        certify_tol,
        certify_scale_aware,
        bench,
    };
    // reported ids map onto library kinds
    debug_assert!(config.solver == "oracle" || SolverKind::from_id(&config.solver).is_some());
    Ok(config)
}

//! Subcommand implementations and the mapping from failures to exit codes.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context as _;
use serde::Serialize;
use serde_json::{json, Value};
use sparse_dual::data::{
    classification_labels, generate_synthetic, load_libsvm, normalize_rows, scale_by_max_row_norm, sign_labels,
    write_libsvm, LibsvmOptions, SyntheticSidecar, SyntheticSpec,
};
use sparse_dual::metrics::{decade_lambda_grid, pssr, time_to_target, write_csv_rows, Contender, Replicate, TrialBatch};
use sparse_dual::objective::{certify_saddle_point, duality_gap, CertifyOptions};
use sparse_dual::solvers::{brute_force_oracle, run_solver, RunOptions, SolverKind};
use sparse_dual::{Dataset, ProblemInstance};

use crate::config::{BenchConfig, ExperimentConfig, SolverSpec};
use crate::files;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_CERTIFICATE: u8 = 4;

/// A failed command together with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub messages: Vec<String>,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            messages: vec![message.into()],
        }
    }

    pub fn config(messages: Vec<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            messages,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.messages.join("\n"))
    }
}

impl From<sparse_dual::Error> for Failure {
    fn from(e: sparse_dual::Error) -> Self {
        let code = match e {
            sparse_dual::Error::Io { .. } => EXIT_OTHER,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::new(EXIT_OTHER, format!("{e:#}"))
    }
}

pub type CmdResult = Result<(), Failure>;

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Run-specific facts such as the timestamp, kept apart from the reproducible payload.
    pub run_metadata: Value,
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    text.push('\n');
    write_file(path, text)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_csv_rows(rows, &mut buf)?;
    Ok(write_file(path, buf)?)
}

pub fn synth(spec: &SyntheticSpec, name: &str, ctx: &RunContext) -> CmdResult {
    let problems = spec.problems();
    if !problems.is_empty() {
        return Err(Failure::config(problems));
    }
    let (data, true_w) = generate_synthetic(spec)?;
    create_dir(&ctx.out_dir)?;
    let svm = ctx.out_dir.join(format!("{name}.svm"));
    let sidecar = ctx.out_dir.join(format!("{name}.json"));
    write_libsvm(&svm, &data)?;
    write_json(&sidecar, &SyntheticSidecar::new(spec, &true_w))?;
    println!("wrote {} and {}", svm.display(), sidecar.display());
    Ok(())
}

/// Applies the loss-specific label mapping and optional row normalization.
fn prepare(data: Dataset, cfg: &ExperimentConfig, synthetic: bool) -> Result<Dataset, Failure> {
    let mut data = data;
    if cfg.loss_model().is_classification() {
        data = if synthetic {
            sign_labels(&data)
        } else {
            classification_labels(&data)?
        };
    }
    if cfg.normalize_rows {
        data = normalize_rows(&data);
    }
    Ok(data)
}

fn load_instance(cfg: &ExperimentConfig) -> Result<ProblemInstance, Failure> {
    let (data, synthetic) = match (&cfg.data_path, &cfg.synthetic) {
        (Some(path), _) => (load_libsvm(path, LibsvmOptions { dim: cfg.data_dim })?, false),
        (None, Some(spec)) => (generate_synthetic(spec)?.0, true),
        (None, None) => unreachable!("validated config names a data source"),
    };
    let data = prepare(data, cfg, synthetic)?;
    if cfg.k > data.dim() {
        return Err(Failure::config(vec![format!(
            "k: {} exceeds the data dimension {}",
            cfg.k,
            data.dim()
        )]));
    }
    Ok(ProblemInstance::new(data, cfg.lambda, cfg.k, cfg.loss_model())?)
}

fn solver_kind(id: &str) -> SolverKind {
    SolverKind::from_id(id).expect("validated solver id")
}

pub fn train(cfg: &ExperimentConfig, ctx: &RunContext) -> CmdResult {
    let inst = load_instance(cfg)?;
    create_dir(&ctx.out_dir)?;
    let out = &ctx.out_dir;

    if cfg.solver == "oracle" {
        let sol = brute_force_oracle(&inst)?;
        let gap = duality_gap(&inst, sol.w.w.as_slice(), &sol.alpha)?;
        write_file(&out.join("model.txt"), files::model_text(sol.w.w.as_slice()))?;
        write_file(&out.join("dual.txt"), files::dense_text(&sol.alpha))?;
        write_json(
            &out.join("report.json"),
            &json!({"config": cfg, "oracle": sol, "duality_gap": gap, "run_metadata": ctx.run_metadata}),
        )?;
        println!(
            "oracle: P = {:.12e}, gap = {gap:.3e}, {} supports checked",
            sol.primal, sol.supports_checked
        );
        return Ok(());
    }

    let report = run_solver(
        solver_kind(&cfg.solver),
        &inst,
        &cfg.solver_config(),
        &RunOptions::default(),
    )?;
    report.save_csv(&out.join("trace.csv"))?;
    write_file(&out.join("model.txt"), files::model_text(report.primal_state.w.as_slice()))?;
    write_file(&out.join("dual.txt"), files::dense_text(&report.dual_state.alpha))?;
    write_json(
        &out.join("report.json"),
        &json!({"config": cfg, "report": report, "run_metadata": ctx.run_metadata}),
    )?;
    println!(
        "{}: {} iterations, stop {:?}, P = {:.12e}, D = {:.12e}, gap = {:.3e}",
        cfg.solver,
        report.iterations,
        report.stop_reason,
        report.final_primal(),
        report.final_dual(),
        report.final_gap()
    );
    if report.diverged {
        return Err(Failure::new(
            EXIT_SOLVER,
            format!("{} diverged; outputs hold the last finite iterate", cfg.solver),
        ));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PssrRow {
    solver: String,
    n: usize,
    lambda: f64,
    mean_estimation_error: f64,
    pssr: f64,
    evaluation_count: usize,
}

pub fn bench(cfg: &ExperimentConfig, ctx: &RunContext) -> CmdResult {
    match cfg.bench.as_ref() {
        Some(BenchConfig::Pssr {
            n_values,
            replicates,
            validation,
            lambda_grid,
            solvers,
        }) => bench_pssr(cfg, ctx, n_values, *replicates, *validation, lambda_grid.as_deref(), solvers),
        Some(BenchConfig::TimeToTarget { reference, contenders }) => bench_time(cfg, ctx, reference, contenders),
        None => Err(Failure::config(vec!["bench: missing benchmark definition".into()])),
    }
}

fn bench_pssr(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    n_values: &[usize],
    replicates: usize,
    validation: usize,
    lambda_grid: Option<&[f64]>,
    solvers: &[SolverSpec],
) -> CmdResult {
    let base = cfg.synthetic.as_ref().expect("validated pssr config has a synthetic spec");
    let grid = lambda_grid.map(<[f64]>::to_vec).unwrap_or_else(decade_lambda_grid);
    let loss = cfg.loss_model();
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for &n in n_values {
        // every replicate is rescaled by its largest row norm; models are mapped back before scoring
        let mut scales = HashMap::new();
        let mut reps = Vec::with_capacity(replicates);
        for r in 0..replicates {
            let spec = SyntheticSpec {
                n,
                seed: base.seed.wrapping_add(1000 * n as u64 + r as u64),
                ..base.clone()
            };
            let (data, true_w) = generate_synthetic(&spec)?;
            let data = prepare(data, cfg, true)?;
            let (scaled, c) = scale_by_max_row_norm(&data);
            let data = Arc::new(scaled);
            scales.insert(Arc::as_ptr(&data) as usize, c);
            reps.push(Replicate { data, true_w });
        }
        let batch = TrialBatch::new(reps, validation)?;
        for spec in solvers {
            let kind = solver_kind(&spec.solver);
            let solver_cfg = cfg.solver_config_for(spec);
            let outcome = pssr(&batch, cfg.k, loss, &grid, |inst| {
                let report = run_solver(kind, inst, &solver_cfg, &RunOptions::default())?;
                let c = scales[&(Arc::as_ptr(inst.data()) as usize)];
                Ok(report.primal_state.w.as_slice().iter().map(|v| v / c).collect())
            })?;
            eprintln!(
                "pssr {} N={n}: lambda {:e}, error {:.4}, pssr {:.3}",
                spec.label(),
                outcome.lambda,
                outcome.mean_estimation_error,
                outcome.pssr
            );
            rows.push(PssrRow {
                solver: spec.label().to_string(),
                n,
                lambda: outcome.lambda,
                mean_estimation_error: outcome.mean_estimation_error,
                pssr: outcome.pssr,
                evaluation_count: outcome.evaluation_count,
            });
            details.push(json!({"solver": spec.label(), "n": n, "outcome": outcome}));
        }
    }
    create_dir(&ctx.out_dir)?;
    write_csv(&ctx.out_dir.join("bench_pssr.csv"), &rows)?;
    write_json(
        &ctx.out_dir.join("bench_pssr.json"),
        &json!({"config": cfg, "results": details, "run_metadata": ctx.run_metadata}),
    )?;
    println!("wrote {}", ctx.out_dir.join("bench_pssr.csv").display());
    Ok(())
}

fn bench_time(cfg: &ExperimentConfig, ctx: &RunContext, reference: &SolverSpec, contenders: &[SolverSpec]) -> CmdResult {
    let inst = load_instance(cfg)?;
    let contender = |s: &SolverSpec| Contender {
        label: s.label().to_string(),
        solver: solver_kind(&s.solver),
        config: cfg.solver_config_for(s),
    };
    let contenders: Vec<Contender> = contenders.iter().map(contender).collect();
    let table = time_to_target(&inst, &contender(reference), &contenders)?;
    for row in table.rows() {
        eprintln!(
            "time {}: {:.4}s, {} iterations, reached {}",
            row.solver, row.seconds, row.iterations, row.reached
        );
    }
    create_dir(&ctx.out_dir)?;
    let rows: Vec<_> = table.rows().collect();
    write_csv(&ctx.out_dir.join("bench_time.csv"), &rows)?;
    write_json(
        &ctx.out_dir.join("bench_time.json"),
        &json!({"config": cfg, "table": table, "run_metadata": ctx.run_metadata}),
    )?;
    println!(
        "target P = {:.12e}; wrote {}",
        table.target_primal,
        ctx.out_dir.join("bench_time.csv").display()
    );
    Ok(())
}

pub fn certify(cfg: &ExperimentConfig, model: &Path, dual: &Path, ctx: &RunContext) -> CmdResult {
    let inst = load_instance(cfg)?;
    let w = files::read_model(model, inst.dim()).map_err(|e| Failure::new(EXIT_CONFIG, format!("{e:#}")))?;
    let alpha = files::read_dense(dual, inst.n_samples()).map_err(|e| Failure::new(EXIT_CONFIG, format!("{e:#}")))?;
    let opts = CertifyOptions {
        tol: cfg.certify_tol,
        scale_aware: cfg.certify_scale_aware,
    };
    let cert = certify_saddle_point(&inst, &w, &alpha, opts)?;
    let gap = duality_gap(&inst, &w, &alpha)?;

    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    println!("tolerance            {:.3e}", cert.tol);
    println!(
        "subgradient          {}  residual {:.3e}",
        verdict(cert.subgradient_ok),
        cert.subgradient_residual
    );
    println!(
        "threshold            {}  residual {:.3e}",
        verdict(cert.threshold_ok),
        cert.threshold_residual
    );
    println!(
        "support gradient     {}  residual {:.3e}, margin {:.3e}",
        verdict(cert.support_ok),
        cert.support_gradient_residual,
        cert.support_margin
    );
    println!("duality gap          {}  {gap:.3e}", verdict(cert.gap_ok));
    println!("certificate          {}", verdict(cert.passed()));

    create_dir(&ctx.out_dir)?;
    write_json(
        &ctx.out_dir.join("certificate.json"),
        &json!({
            "config": cfg,
            "model": model,
            "dual": dual,
            "certificate": cert,
            "duality_gap": gap,
            "run_metadata": ctx.run_metadata,
        }),
    )?;
    if cert.passed() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CERTIFICATE, "certificate failed"))
    }
}

mod commands;
mod config;
mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;
use sparse_dual::data::SyntheticSpec;

use commands::{Failure, RunContext, EXIT_CONFIG, EXIT_OTHER};
use config::ExperimentConfig;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "SPARSE_DUAL_OUT";

#[derive(Debug, Parser)]
#[command(name = "sparse-dual", version, about = "Sparse dual solvers, certificates and benchmarks")]
struct Cli {
    /// Overrides the seed of the configuration (or of the generator for `synth`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's output_dir, then $SPARSE_DUAL_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic regression dataset with its sidecar.
    Synth {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k_bar: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0.25)]
        off_diag: f64,
        /// Base name of the written `.svm` and `.json` files.
        #[arg(long, default_value = "synthetic")]
        name: String,
    },
    /// Run the configured solver.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured benchmark.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the saddle-point conditions for a model and dual vector.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dual: PathBuf,
        /// Overrides certify_tol of the configuration.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn load_config(path: &Path, cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = config::load(path).map_err(Failure::config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::new(EXIT_CONFIG, "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(EXIT_OTHER, e.to_string()))?;
    }
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let run_metadata = json!({
        "timestamp_unix": timestamp,
        "threads": rayon::current_num_threads(),
        "deterministic": cli.deterministic,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let context = |cfg: Option<&ExperimentConfig>| RunContext {
        out_dir: out_dir(cli, cfg),
        run_metadata: run_metadata.clone(),
    };

    match &cli.command {
        Command::Synth {
            d,
            k_bar,
            n,
            noise_sd,
            off_diag,
            name,
        } => {
            let spec = SyntheticSpec {
                noise_sd: *noise_sd,
                off_diag: *off_diag,
                ..SyntheticSpec::new(*d, *k_bar, *n, cli.seed.unwrap_or(0))
            };
            commands::synth(&spec, name, &context(None))
        }
        Command::Train { config } => {
            let cfg = load_config(config, cli)?;
            commands::train(&cfg, &context(Some(&cfg)))
        }
        Command::Bench { config } => {
            let cfg = load_config(config, cli)?;
            if cfg.bench.is_none() {
                return Err(Failure::config(vec!["bench: missing benchmark definition".into()]));
            }
            commands::bench(&cfg, &context(Some(&cfg)))
        }
        Command::Certify {
            config,
            model,
            dual,
            tol,
        } => {
            let mut cfg = load_config(config, cli)?;
            if let Some(tol) = *tol {
                if !(tol >= 0.0 && tol.is_finite()) {
                    return Err(Failure::new(EXIT_CONFIG, "--tol must be finite and non-negative"));
                }
                cfg.certify_tol = tol;
            }
            commands::certify(&cfg, model, dual, &context(Some(&cfg)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            for m in &failure.messages {
                eprintln!("error: {m}");
            }
            ExitCode::from(failure.code)
        }
    }
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_dual::data::{generate_synthetic, normalize_rows, SyntheticSpec};
use sparse_dual::objective::Dataset;
use sparse_dual::{LossModel, ProblemInstance};

/// Small regression instance from the synthetic generator with rows scaled to unit norm.
pub fn small_instance(seed: u64, d: usize, k: usize, n: usize, lambda: f64) -> ProblemInstance {
    let (data, _) = generate_synthetic(&SyntheticSpec::new(d, k, n, seed)).unwrap();
    ProblemInstance::new(normalize_rows(&data), lambda, k, LossModel::Squared).unwrap()
}

/// Uniform random dense data; labels are ±1 for classification losses.
pub fn random_instance(seed: u64, n: usize, d: usize, k: usize, lambda: f64, loss: LossModel) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0) / (d as f64).sqrt()).collect())
        .collect();
    let labels = (0..n)
        .map(|_| {
            if loss.is_classification() {
                if rng.random_bool(0.5) { 1.0 } else { -1.0 }
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    ProblemInstance::new(Dataset::from_dense_rows(&rows, labels).unwrap(), lambda, k, loss).unwrap()
}

/// Random feasible dual point.
pub fn random_alpha(rng: &mut ChaCha8Rng, inst: &ProblemInstance, spread: f64) -> Vec<f64> {
    inst.labels()
        .iter()
        .map(|&y| {
            let iv = inst.loss().feasible_interval(y);
            if iv.is_bounded() {
                rng.random_range(iv.lo..=iv.hi)
            } else {
                rng.random_range(-spread..spread)
            }
        })
        .collect()
}

/// Trace CSV with the wall-clock column removed.
pub fn csv_without_seconds(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|line| {
            let mut cols: Vec<&str> = line.split(',').collect();
            cols.remove(1);
            cols.join(",")
        })
        .collect()
}

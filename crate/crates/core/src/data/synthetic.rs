use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::vecops::{DenseVector, SparseSample};

/// Gaussian sampler used by the generator, recorded in sidecars and reports.
pub const GAUSSIAN_SAMPLER: &str = "rand_distr::StandardNormal (ziggurat) on ChaCha8Rng";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub d: usize,
    /// Size of the true support.
    pub k_bar: usize,
    pub n: usize,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    /// Correlation between features of the true support.
    #[serde(default = "default_off_diag")]
    pub off_diag: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise_sd() -> f64 {
    1.0
}

fn default_off_diag() -> f64 {
    0.25
}

impl SyntheticSpec {
    pub fn new(d: usize, k_bar: usize, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            d,
            k_bar,
            n,
            noise_sd: default_noise_sd(),
            off_diag: default_off_diag(),
            seed,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d == 0 {
            out.push("d must be at least 1".into());
        }
        if self.k_bar > self.d {
            out.push(format!("k_bar = {} exceeds d = {}", self.k_bar, self.d));
        }
        if self.n == 0 {
            out.push("n must be at least 1".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            out.push(format!("noise_sd must be finite and non-negative, got {}", self.noise_sd));
        }
        if !(0.0..1.0).contains(&self.off_diag) {
            out.push(format!("off_diag must lie in [0, 1), got {}", self.off_diag));
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

/// Everything needed to reproduce a generated dataset, written next to the data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSidecar {
    pub spec: SyntheticSpec,
    pub true_w: Vec<f64>,
    pub gaussian_sampler: String,
    /// Feature means are drawn once per generated dataset.
    pub mean_draw: String,
}

impl SyntheticSidecar {
    pub fn new(spec: &SyntheticSpec, true_w: &DenseVector) -> Self {
        SyntheticSidecar {
            spec: spec.clone(),
            true_w: true_w.to_vec(),
            gaussian_sampler: GAUSSIAN_SAMPLER.into(),
            mean_draw: "per_dataset".into(),
        }
    }
}

/// Linear-model data with a correlated block of `k_bar` relevant features.
///
/// Relevant features follow `N(μ₁, Σ)` with unit variances and correlation
/// `off_diag`; the remaining features follow `N(μ₂, I)`. Both mean vectors
/// are standard normal draws made once per dataset. The true model has ones
/// on the relevant block and responses carry `N(0, noise_sd²)` noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, DenseVector)> {
    spec.validate()?;
    let (d, kb) = (spec.d, spec.k_bar);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };

    let mu1: Vec<f64> = (0..kb).map(|_| normal()).collect();
    let mu2: Vec<f64> = (0..d - kb).map(|_| normal()).collect();

    // Σ = (1-ρ)I + ρJ has the symmetric root √(1-ρ) I + cJ
    let rho = spec.off_diag;
    let diag = (1.0 - rho).sqrt();
    let c = if kb == 0 {
        0.0
    } else {
        ((1.0 - rho + rho * kb as f64).sqrt() - diag) / kb as f64
    };

    let mut samples = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    let mut row = vec![0.0; d];
    let mut z = vec![0.0; kb];
    for _ in 0..spec.n {
        z.iter_mut().for_each(|v| *v = normal());
        let total: f64 = z.iter().sum();
        for j in 0..kb {
            row[j] = mu1[j] + diag * z[j] + c * total;
        }
        for j in kb..d {
            row[j] = mu2[j - kb] + normal();
        }
        let signal: f64 = row[..kb].iter().sum();
        labels.push(signal + spec.noise_sd * normal());
        samples.push(SparseSample::from_dense(&row)?);
    }
    let mut true_w = vec![0.0; d];
    true_w[..kb].iter_mut().for_each(|v| *v = 1.0);
    Ok((Dataset::new(samples, labels, d)?, DenseVector::new(true_w)?))
}

//! Primal and dual objectives of sparsity-constrained regularized loss
//! minimization, the primal-dual map, and the saddle-point certificate.
//!
//! The primal problem is
//!
//! ```text
//! min_{‖w‖₀ ≤ k}  P(w) = (1/N) Σ l(wᵀxᵢ, yᵢ) + (λ/2)‖w‖²
//! ```
//!
//! and the dual objective is `D(α) = (1/N) Σ -l*(αᵢ) - (λ/2)‖w(α)‖²` with
//! `w(α) = H_k(w̃(α))`, `w̃(α) = -(1/λN) Σ αᵢxᵢ`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, check_budget, for_each_subset};
use crate::error::{Error, Result};
use crate::losses::LossModel;
use crate::vecops::{
    self, hard_threshold_k, inf_norm, min_abs_on_support, norm_sq, DenseVector, IndexSet,
    SparseSample,
};

/// Samples and labels without any optimization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<SparseSample>,
    labels: Vec<f64>,
    dim: usize,
    rows_normalized: bool,
}

impl Dataset {
    pub fn new(samples: Vec<SparseSample>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("dataset has no samples"));
        }
        if samples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: labels.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|s| s.min_dim() > dim) {
            return Err(Error::IndexOutOfRange {
                index: bad.min_dim() - 1,
                dim,
            });
        }
        if let Some(position) = labels.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonFinite {
                position,
                value: labels[position],
            });
        }
        let rows_normalized = samples.iter().all(|s| s.norm() <= 1.0 + 1e-12);
        Ok(Dataset {
            samples,
            labels,
            dim,
            rows_normalized,
        })
    }

    /// Builds a dataset from dense rows.
    pub fn from_dense_rows(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let samples = rows
            .iter()
            .map(|r| {
                if r.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: r.len(),
                    });
                }
                SparseSample::from_dense(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, labels, dim)
    }

    pub fn samples(&self) -> &[SparseSample] {
        &self.samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// True when every row has Euclidean norm at most one.
    pub fn rows_normalized(&self) -> bool {
        self.rows_normalized
    }

    pub(crate) fn replace_samples(&mut self, samples: Vec<SparseSample>) {
        self.rows_normalized = samples.iter().all(|s| s.norm() <= 1.0 + 1e-12);
        self.samples = samples;
    }

    pub(crate) fn labels_mut(&mut self) -> &mut Vec<f64> {
        &mut self.labels
    }

    pub fn nnz(&self) -> usize {
        self.samples.iter().map(SparseSample::nnz).sum()
    }

    /// Dense row-major copy, samples as rows.
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.to_dense(self.dim)).collect()
    }

    /// Largest eigenvalue of `(1/N) Σ xᵢxᵢᵀ` by power iteration.
    pub fn mean_gram_spectral_norm(&self) -> f64 {
        let n = self.n_samples() as f64;
        let mut v = vec![1.0 / (self.dim as f64).sqrt(); self.dim];
        let mut estimate = 0.0;
        for _ in 0..200 {
            let mut next = vec![0.0; self.dim];
            for s in &self.samples {
                let u = s.dot_unchecked(&v);
                s.axpy_into(u / n, &mut next);
            }
            let norm = norm_sq(&next).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let converged = (norm - estimate).abs() <= 1e-10 * norm;
            estimate = norm;
            v = next.into_iter().map(|x| x / norm).collect();
            if converged {
                break;
            }
        }
        estimate
    }
}

/// A dataset together with the loss, regularization strength and sparsity budget.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    data: Arc<Dataset>,
    lambda: f64,
    k: usize,
    loss: LossModel,
}

impl ProblemInstance {
    pub fn new(data: impl Into<Arc<Dataset>>, lambda: f64, k: usize, loss: LossModel) -> Result<Self> {
        let data = data.into();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        if k == 0 {
            return Err(Error::Config("sparsity budget k must be at least 1".into()));
        }
        if k > data.dim() {
            return Err(Error::BudgetExceedsDimension { k, dim: data.dim() });
        }
        for (i, &y) in data.labels().iter().enumerate() {
            loss.check_label_for(i, y)?;
        }
        Ok(ProblemInstance {
            data,
            lambda,
            k,
            loss,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        ProblemInstance::new(self.data.clone(), lambda, self.k, self.loss)
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        ProblemInstance::new(self.data.clone(), self.lambda, k, self.loss)
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn samples(&self) -> &[SparseSample] {
        self.data.samples()
    }

    pub fn labels(&self) -> &[f64] {
        self.data.labels()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn loss(&self) -> LossModel {
        self.loss
    }

    pub fn rows_normalized(&self) -> bool {
        self.data.rows_normalized()
    }

    fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: w.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_dual(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.n_samples() {
            return Err(Error::DimensionMismatch {
                expected: self.n_samples(),
                found: alpha.len(),
            });
        }
        for (i, (&a, &y)) in alpha.iter().zip(self.labels()).enumerate() {
            let iv = self.loss.feasible_interval(y);
            if !a.is_finite() || !iv.contains(a) {
                return Err(Error::Infeasible {
                    sample: i,
                    value: a,
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        Ok(())
    }

    /// Predictions `xᵢᵀw` for every sample.
    pub(crate) fn margins(&self, w: &[f64]) -> Vec<f64> {
        self.samples().iter().map(|s| s.dot_unchecked(w)).collect()
    }

    pub(crate) fn primal_from_margins(&self, margins: &[f64], w_norm_sq: f64) -> f64 {
        let loss: f64 = margins
            .iter()
            .zip(self.labels())
            .map(|(&u, &y)| self.loss.value(u, y))
            .sum();
        loss / self.n_samples() as f64 + 0.5 * self.lambda * w_norm_sq
    }

    pub(crate) fn conjugate_mean(&self, alpha: &[f64]) -> f64 {
        let s: f64 = alpha
            .iter()
            .zip(self.labels())
            .map(|(&a, &y)| self.loss.conjugate_value(a, y))
            .sum();
        s / self.n_samples() as f64
    }

    /// `w̃(α) = -(1/λN) Σ αᵢxᵢ`, accumulated in sample order.
    pub(crate) fn accumulator(&self, alpha: &[f64]) -> Vec<f64> {
        let scale = -1.0 / (self.lambda * self.n_samples() as f64);
        let mut out = vec![0.0; self.dim()];
        for (s, &a) in self.samples().iter().zip(alpha) {
            if a != 0.0 {
                s.axpy_into(scale * a, &mut out);
            }
        }
        out
    }
}

/// Dual iterate and the accumulated primal image `w̃ = -(1/λN) Σ αᵢxᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub accumulator: Vec<f64>,
}

impl DualState {
    pub fn zeros(inst: &ProblemInstance) -> Self {
        DualState {
            alpha: vec![0.0; inst.n_samples()],
            accumulator: vec![0.0; inst.dim()],
        }
    }

    pub fn from_alpha(inst: &ProblemInstance, alpha: Vec<f64>) -> Result<Self> {
        inst.check_dual(&alpha)?;
        let accumulator = inst.accumulator(&alpha);
        Ok(DualState { alpha, accumulator })
    }

    /// Recomputes the accumulator from scratch.
    pub fn resync(&mut self, inst: &ProblemInstance) {
        self.accumulator = inst.accumulator(&self.alpha);
    }

    /// Sup-norm distance between the stored and a freshly computed accumulator.
    pub fn accumulator_drift(&self, inst: &ProblemInstance) -> f64 {
        let fresh = inst.accumulator(&self.alpha);
        fresh
            .iter()
            .zip(&self.accumulator)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// A k-sparse primal vector with its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalState {
    pub w: DenseVector,
    pub support: IndexSet,
}

impl PrimalState {
    pub fn zeros(dim: usize) -> Self {
        PrimalState {
            w: DenseVector::zeros(dim),
            support: IndexSet::empty(),
        }
    }

    pub fn new(w: DenseVector, k: usize) -> Result<Self> {
        let support = vecops::support(&w);
        if support.len() > k {
            return Err(Error::BudgetExceedsDimension {
                k: support.len(),
                dim: k,
            });
        }
        Ok(PrimalState { w, support })
    }

    pub(crate) fn from_dense(w: DenseVector) -> Self {
        let support = vecops::support(&w);
        PrimalState { w, support }
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }
}

/// `P(w) = (1/N) Σ l(wᵀxᵢ, yᵢ) + (λ/2)‖w‖²`.
pub fn primal_value(inst: &ProblemInstance, w: &[f64]) -> Result<f64> {
    inst.check_dim(w)?;
    Ok(inst.primal_from_margins(&inst.margins(w), norm_sq(w)))
}

/// `(1/N) Σ l'(wᵀxᵢ, yᵢ) xᵢ + λw` with the loss's deterministic subgradient selection.
pub fn primal_subgradient(inst: &ProblemInstance, w: &[f64]) -> Result<DenseVector> {
    inst.check_dim(w)?;
    let n = inst.n_samples() as f64;
    let mut g: Vec<f64> = w.iter().map(|v| inst.lambda * v).collect();
    for (s, &y) in inst.samples().iter().zip(inst.labels()) {
        let d = inst.loss.loss_derivative(s.dot_unchecked(w), y);
        if d != 0.0 {
            s.axpy_into(d / n, &mut g);
        }
    }
    DenseVector::new(g)
}

/// `w(α) = H_k(-(1/λN) Σ αᵢxᵢ)`.
pub fn primal_from_dual(inst: &ProblemInstance, alpha: &[f64]) -> Result<PrimalState> {
    inst.check_dual(alpha)?;
    let acc = inst.accumulator(alpha);
    Ok(PrimalState::from_dense(hard_threshold_k(&acc, inst.k)?))
}

/// `D(α) = (1/N) Σ -l*(αᵢ) - (λ/2)‖w(α)‖²`.
pub fn dual_value(inst: &ProblemInstance, alpha: &[f64]) -> Result<f64> {
    let w = primal_from_dual(inst, alpha)?;
    Ok(-inst.conjugate_mean(alpha) - 0.5 * inst.lambda * norm_sq(&w.w))
}

/// Super-gradient `gᵢ = (1/N)(xᵢᵀw - l*'(αᵢ))` evaluated at the supplied primal point.
pub fn dual_supergradient(inst: &ProblemInstance, alpha: &[f64], w: &PrimalState) -> Result<Vec<f64>> {
    inst.check_dual(alpha)?;
    inst.check_dim(&w.w)?;
    let n = inst.n_samples() as f64;
    Ok(inst
        .samples()
        .iter()
        .zip(inst.labels())
        .zip(alpha)
        .map(|((s, &y), &a)| (s.dot_unchecked(&w.w) - inst.loss.conjugate_slope(a, y)) / n)
        .collect())
}

/// `P(w) - D(α)`.
pub fn duality_gap(inst: &ProblemInstance, w: &[f64], alpha: &[f64]) -> Result<f64> {
    Ok(primal_value(inst, w)? - dual_value(inst, alpha)?)
}

/// `(1/N) Σ (l(wᵀxᵢ) + l*(αᵢ) - αᵢwᵀxᵢ)`; equals the gap when `w = w(α)`.
pub fn gap_closed_form(inst: &ProblemInstance, w: &[f64], alpha: &[f64]) -> Result<f64> {
    inst.check_dim(w)?;
    inst.check_dual(alpha)?;
    let loss = inst.loss;
    let total: f64 = inst
        .samples()
        .iter()
        .zip(inst.labels())
        .zip(alpha)
        .map(|((s, &y), &a)| {
            let u = s.dot_unchecked(w);
            loss.value(u, y) + loss.conjugate_value(a, y) - a * u
        })
        .sum();
    Ok(total / inst.n_samples() as f64)
}

/// `w_min - (1/λ)‖P'(w)‖∞`; positive values certify a stable support.
pub fn margin_epsilon_bar(inst: &ProblemInstance, w: &[f64]) -> Result<f64> {
    let w_min = min_abs_on_support(w)?;
    let g = primal_subgradient(inst, w)?;
    Ok(w_min - inf_norm(&g) / inst.lambda)
}

/// Options for [`certify_saddle_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub tol: f64,
    /// Multiply the tolerance by `max(1, ‖w̃(α)‖∞)`.
    pub scale_aware: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol: 1e-6,
            scale_aware: false,
        }
    }
}

/// Residuals of the sparse saddle-point conditions for a pair `(w, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Effective tolerance after optional scaling.
    pub tol: f64,
    /// Largest distance from `αᵢ` to `∂lᵢ(wᵀxᵢ)`.
    pub subgradient_residual: f64,
    pub subgradient_ok: bool,
    /// `‖w - H_k(w̃(α))‖`.
    pub threshold_residual: f64,
    pub threshold_ok: bool,
    /// `‖H_F(P'(w))‖∞` with `P'(w) = (1/N) Σ αᵢxᵢ + λw`.
    pub support_gradient_residual: f64,
    /// `w_min - (1/λ)‖P'(w)‖∞` (negative infinity for `w = 0`).
    pub support_margin: f64,
    pub support_ok: bool,
    /// `P(w) - D(α)`.
    pub gap: f64,
    pub gap_ok: bool,
    /// Global optimality of `w`: claimed only when every check passes,
    /// including the gap.
    pub optimality_certified: bool,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.optimality_certified
    }
}

/// Checks the sparse saddle-point conditions for `(w, α)`.
///
/// Subgradient condition: `αᵢ ∈ ∂lᵢ(wᵀxᵢ)`. Threshold condition:
/// `w = H_k(w̃(α))`, also checked in the equivalent form
/// `H_F(P'(w)) = 0, w_min ≥ (1/λ)‖P'(w)‖∞`. Primal optimality is never
/// inferred from these alone; it additionally needs a zero duality gap.
pub fn certify_saddle_point(
    inst: &ProblemInstance,
    w: &[f64],
    alpha: &[f64],
    opts: CertifyOptions,
) -> Result<CertificateReport> {
    inst.check_dim(w)?;
    if alpha.len() != inst.n_samples() {
        return Err(Error::DimensionMismatch {
            expected: inst.n_samples(),
            found: alpha.len(),
        });
    }
    let acc = inst.accumulator(alpha);
    let tol = if opts.scale_aware {
        opts.tol * inf_norm(&acc).max(1.0)
    } else {
        opts.tol
    };

    let margins = inst.margins(w);
    let mut subgradient_residual: f64 = 0.0;
    for ((&u, &y), &a) in margins.iter().zip(inst.labels()).zip(alpha) {
        // the hinge kink is widened by the tolerance
        let iv = match inst.loss {
            LossModel::Hinge if (y * u - 1.0).abs() <= tol => inst.loss.subdifferential(y, y),
            loss => loss.subdifferential(u, y),
        };
        let dist = if a < iv.lo {
            iv.lo - a
        } else if a > iv.hi {
            a - iv.hi
        } else {
            0.0
        };
        subgradient_residual = subgradient_residual.max(dist);
    }

    let thresholded = hard_threshold_k(&acc, inst.k)?;
    let threshold_residual = w
        .iter()
        .zip(thresholded.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    // P'(w) = (1/N) Σ αᵢxᵢ + λw = λ(w - w̃)
    let grad: Vec<f64> = w
        .iter()
        .zip(&acc)
        .map(|(wi, ai)| inst.lambda * (wi - ai))
        .collect();
    let support = vecops::support(w);
    let support_gradient_residual = support.iter().fold(0.0f64, |m, i| m.max(grad[i].abs()));
    let support_margin = match min_abs_on_support(w) {
        Ok(w_min) => w_min - inf_norm(&grad) / inst.lambda,
        Err(_) => f64::NEG_INFINITY,
    };
    let support_ok = support.len() <= inst.k
        && support_gradient_residual <= tol
        && (support_margin >= -tol || (support.is_empty() && inf_norm(&grad) <= tol));

    let primal = inst.primal_from_margins(&margins, norm_sq(w));
    let dual = if inst.check_dual(alpha).is_ok() {
        -inst.conjugate_mean(alpha) - 0.5 * inst.lambda * norm_sq(&thresholded)
    } else {
        f64::NEG_INFINITY
    };
    let gap = primal - dual;

    let subgradient_ok = subgradient_residual <= tol && inst.check_dual(alpha).is_ok();
    let threshold_ok = threshold_residual <= tol;
    let gap_ok = gap <= tol;
    Ok(CertificateReport {
        tol,
        subgradient_residual,
        subgradient_ok,
        threshold_residual,
        threshold_ok,
        support_gradient_residual,
        support_margin,
        support_ok,
        gap,
        gap_ok,
        optimality_certified: subgradient_ok && threshold_ok && support_ok && gap_ok,
    })
}

/// Restricted extreme singular values `(σ_max(X,s), σ_min(X,s))` by enumeration.
///
/// `X` is the d×N matrix whose columns are samples; `X_F` keeps the feature
/// rows in `F`. Every nonempty `F` with `|F| ≤ s` is visited, and for each
/// the largest and the smallest of its `min(|F|, N)` singular values enter
/// the sup and the inf respectively.
pub fn restricted_singular_values(data: &Dataset, s: usize) -> Result<(f64, f64)> {
    let d = data.dim();
    if s == 0 || s > d {
        return Err(Error::BudgetExceedsDimension { k: s, dim: d });
    }
    let count: u128 = (1..=s).map(|j| binomial(d, j)).sum();
    check_budget(count)?;

    let n = data.n_samples();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for sample in data.samples() {
        for (a, va) in sample.iter() {
            for (b, vb) in sample.iter() {
                gram[(a, b)] += va * vb;
            }
        }
    }

    let mut sigma_max: f64 = 0.0;
    let mut sigma_min = f64::INFINITY;
    for size in 1..=s {
        let rank_cap = size.min(n);
        for_each_subset(d, size, |f| {
            let sub = DMatrix::from_fn(size, size, |i, j| gram[(f[i], f[j])]);
            let mut eig: Vec<f64> = SymmetricEigen::new(sub).eigenvalues.iter().copied().collect();
            eig.sort_by(|a, b| b.total_cmp(a));
            sigma_max = sigma_max.max(eig[0].max(0.0).sqrt());
            sigma_min = sigma_min.min(eig[rank_cap - 1].max(0.0).sqrt());
        });
    }
    Ok((sigma_max, sigma_min))
}

//! Exact minimization over a fixed support, and the global oracle that
//! enumerates every support.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::combin::{binomial, check_budget, for_each_subset};
use crate::error::{Error, Result};
use crate::losses::LossModel;
use crate::objective::{primal_value, PrimalState, ProblemInstance};
use crate::vecops::{DenseVector, IndexSet};

/// Supports up to this size use the normal equations for the squared loss.
const CLOSED_FORM_LIMIT: usize = 200;

const ORACLE_GAP_TOL: f64 = 1e-12;
const MAX_EPOCHS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub w: PrimalState,
    pub primal: f64,
    pub support: IndexSet,
    /// Dual optimum of the problem restricted to `support`.
    pub alpha: Vec<f64>,
    pub supports_checked: u128,
}

/// Global minimizer of `P` over `‖w‖₀ ≤ k` by enumerating all size-k supports.
pub fn brute_force_oracle(inst: &ProblemInstance) -> Result<OracleSolution> {
    let (d, k) = (inst.dim(), inst.k());
    let count = binomial(d, k);
    check_budget(count)?;

    let gram = match inst.loss() {
        LossModel::Squared => Some(RidgeSystem::new(inst)),
        _ => None,
    };
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut failure = None;
    for_each_subset(d, k, |f| {
        if failure.is_some() {
            return;
        }
        let solved = match &gram {
            Some(sys) => sys.solve(f).map(|w| {
                let alpha = squared_alpha(inst, &w);
                (w, alpha)
            }),
            None => dual_coordinate_ascent(inst, f, None, ORACLE_GAP_TOL),
        };
        match solved {
            Ok((w, alpha)) => {
                let p = primal_value(inst, &w).expect("dimension matches");
                if best.as_ref().is_none_or(|(bp, _, _)| p < *bp) {
                    best = Some((p, w, alpha));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (primal, w, alpha) = best.ok_or(Error::Empty("no support to enumerate"))?;
    let w = PrimalState::from_dense(DenseVector::new(w)?);
    let support = w.support.clone();
    Ok(OracleSolution {
        w,
        primal,
        support,
        alpha,
        supports_checked: count,
    })
}

/// `argmin P(w)` subject to `supp(w) ⊆ support`, with the matching dual point.
///
/// The squared loss on supports of at most 200 features solves the ridge
/// normal equations; everything else runs cyclic dual coordinate ascent on
/// the restricted problem until the duality gap is at most `gap_tol`.
pub fn restricted_minimizer(
    inst: &ProblemInstance,
    support: &IndexSet,
    warm_alpha: Option<&[f64]>,
    gap_tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(&last) = support.as_slice().last() {
        if last >= inst.dim() {
            return Err(Error::IndexOutOfRange {
                index: last,
                dim: inst.dim(),
            });
        }
    }
    if inst.loss() == LossModel::Squared && support.len() <= CLOSED_FORM_LIMIT {
        let w = restricted_ridge(inst, support.as_slice())?;
        let alpha = squared_alpha(inst, &w);
        return Ok((w, alpha));
    }
    dual_coordinate_ascent(inst, support.as_slice(), warm_alpha, gap_tol)
}

fn squared_alpha(inst: &ProblemInstance, w: &[f64]) -> Vec<f64> {
    inst.margins(w)
        .iter()
        .zip(inst.labels())
        .map(|(&u, &y)| 2.0 * (u - y))
        .collect()
}

/// Samples projected onto a support, as `(position in support, value)` pairs.
fn compact_rows(inst: &ProblemInstance, support: &[usize]) -> Vec<Vec<(usize, f64)>> {
    let mut position = vec![usize::MAX; inst.dim()];
    for (p, &j) in support.iter().enumerate() {
        position[j] = p;
    }
    inst.samples()
        .iter()
        .map(|s| {
            s.iter()
                .filter(|(j, _)| position[*j] != usize::MAX)
                .map(|(j, v)| (position[j], v))
                .collect()
        })
        .collect()
}

fn restricted_ridge(inst: &ProblemInstance, support: &[usize]) -> Result<Vec<f64>> {
    let s = support.len();
    let n = inst.n_samples() as f64;
    let mut a = DMatrix::<f64>::identity(s, s) * inst.lambda();
    let mut b = DVector::<f64>::zeros(s);
    for (row, &y) in compact_rows(inst, support).iter().zip(inst.labels()) {
        for &(p, vp) in row {
            b[p] += 2.0 / n * vp * y;
            for &(q, vq) in row {
                a[(p, q)] += 2.0 / n * vp * vq;
            }
        }
    }
    let solution = a
        .cholesky()
        .ok_or_else(|| Error::Config("restricted ridge system is not positive definite".into()))?
        .solve(&b);
    let mut w = vec![0.0; inst.dim()];
    for (p, &j) in support.iter().enumerate() {
        w[j] = solution[p];
    }
    Ok(w)
}

/// Full Gram matrix and correlations, reused across every support.
struct RidgeSystem {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    lambda: f64,
    n: f64,
    dim: usize,
}

impl RidgeSystem {
    fn new(inst: &ProblemInstance) -> Self {
        let d = inst.dim();
        let mut gram = DMatrix::<f64>::zeros(d, d);
        let mut xty = DVector::<f64>::zeros(d);
        for (s, &y) in inst.samples().iter().zip(inst.labels()) {
            for (a, va) in s.iter() {
                xty[a] += va * y;
                for (b, vb) in s.iter() {
                    gram[(a, b)] += va * vb;
                }
            }
        }
        RidgeSystem {
            gram,
            xty,
            lambda: inst.lambda(),
            n: inst.n_samples() as f64,
            dim: d,
        }
    }

    fn solve(&self, f: &[usize]) -> Result<Vec<f64>> {
        let s = f.len();
        let c = 2.0 / self.n;
        let a = DMatrix::from_fn(s, s, |i, j| {
            c * self.gram[(f[i], f[j])] + if i == j { self.lambda } else { 0.0 }
        });
        let b = DVector::from_fn(s, |i, _| c * self.xty[f[i]]);
        let solution = a
            .cholesky()
            .ok_or_else(|| Error::Config("restricted ridge system is not positive definite".into()))?
            .solve(&b);
        let mut w = vec![0.0; self.dim];
        for (p, &j) in f.iter().enumerate() {
            w[j] = solution[p];
        }
        Ok(w)
    }
}

/// Cyclic exact dual coordinate ascent on the problem restricted to `support`.
fn dual_coordinate_ascent(
    inst: &ProblemInstance,
    support: &[usize],
    warm_alpha: Option<&[f64]>,
    gap_tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let loss = inst.loss();
    let labels = inst.labels();
    let n = inst.n_samples() as f64;
    let lambda = inst.lambda();
    let rows = compact_rows(inst, support);
    let curvature = loss.mu();

    let mut alpha: Vec<f64> = match warm_alpha {
        Some(a) => {
            inst.check_dual(a)?;
            a.to_vec()
        }
        None => vec![0.0; rows.len()],
    };
    let link = |alpha: &[f64]| {
        let mut v = vec![0.0; support.len()];
        for (row, &a) in rows.iter().zip(alpha) {
            for &(p, x) in row {
                v[p] -= a * x / (lambda * n);
            }
        }
        v
    };
    let q: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|(_, x)| x * x).sum::<f64>() / (lambda * n))
        .collect();
    let mut v = link(&alpha);

    for epoch in 1..=MAX_EPOCHS {
        for (i, row) in rows.iter().enumerate() {
            let y = labels[i];
            let u: f64 = row.iter().map(|&(p, x)| v[p] * x).sum();
            let old = alpha[i];
            let denom = curvature + q[i];
            let target = if denom > 0.0 {
                (u - y + q[i] * old) / denom
            } else if u > y {
                f64::INFINITY
            } else if u < y {
                f64::NEG_INFINITY
            } else {
                old
            };
            let new = loss.project_feasible(target, y);
            let delta = new - old;
            if delta != 0.0 {
                alpha[i] = new;
                for &(p, x) in row {
                    v[p] -= delta * x / (lambda * n);
                }
            }
        }
        if epoch % 50 == 0 {
            v = link(&alpha);
        }
        let (primal, dual) = restricted_objectives(inst, &rows, &v, &alpha);
        if primal - dual <= gap_tol * primal.abs().max(1.0) {
            break;
        }
    }

    let mut w = vec![0.0; inst.dim()];
    for (p, &j) in support.iter().enumerate() {
        w[j] = v[p];
    }
    Ok((w, alpha))
}

fn restricted_objectives(inst: &ProblemInstance, rows: &[Vec<(usize, f64)>], v: &[f64], alpha: &[f64]) -> (f64, f64) {
    let loss = inst.loss();
    let norm: f64 = v.iter().map(|x| x * x).sum();
    let mut total = 0.0;
    for (row, &y) in rows.iter().zip(inst.labels()) {
        let u: f64 = row.iter().map(|&(p, x)| v[p] * x).sum();
        total += loss.value(u, y);
    }
    let n = inst.n_samples() as f64;
    let primal = total / n + 0.5 * inst.lambda() * norm;
    let dual = -inst.conjugate_mean(alpha) - 0.5 * inst.lambda() * norm;
    (primal, dual)
}

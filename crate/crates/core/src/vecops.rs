//! Dense and sparse vector primitives plus the hard-thresholding operators.
//!
//! Top-k selection uses the total order "larger magnitude first, then smaller
//! index first", so every selection is deterministic.

use std::cmp::Ordering;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite-valued dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(DenseVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        DenseVector::new(values)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Vec<f64> {
        v.0
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(position) => Err(Error::NonFinite {
            position,
            value: values[position],
        }),
        None => Ok(()),
    }
}

/// Sorted, duplicate-free coordinate indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    /// Validates that `indices` is strictly increasing and below `dim`.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        if let Some(position) = indices.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedIndices {
                position: position + 1,
            });
        }
        if let Some(&index) = indices.last() {
            if index >= dim {
                return Err(Error::IndexOutOfRange { index, dim });
            }
        }
        Ok(IndexSet(indices))
    }

    /// Sorts and deduplicates arbitrary indices.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet(indices)
    }

    pub fn full(dim: usize) -> Self {
        IndexSet((0..dim).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// 64-bit FNV-1a hash of the index list; stable across builds.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for &i in &self.0 {
            for byte in (i as u64).to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}

/// One row of the data matrix in compressed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSample {
    indices: IndexSet,
    values: Vec<f64>,
}

impl SparseSample {
    pub fn new(indices: IndexSet, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                found: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(SparseSample { indices, values })
    }

    /// Keeps the nonzero entries of a dense row.
    pub fn from_dense(row: &[f64]) -> Result<Self> {
        check_finite(row)?;
        let (indices, values) = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Ok(SparseSample {
            indices: IndexSet(indices),
            values,
        })
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(self.values.iter().copied())
    }

    /// Largest stored index plus one (zero for an empty row).
    pub fn min_dim(&self) -> usize {
        self.indices.as_slice().last().map_or(0, |&i| i + 1)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> SparseSample {
        SparseSample {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Dot product with a dense vector without bounds validation.
    #[inline]
    pub(crate) fn dot_unchecked(&self, x: &[f64]) -> f64 {
        self.indices
            .0
            .iter()
            .zip(&self.values)
            .map(|(&i, v)| x[i] * v)
            .sum()
    }

    /// `x += scale * self`.
    #[inline]
    pub(crate) fn axpy_into(&self, scale: f64, x: &mut [f64]) {
        for (&i, v) in self.indices.0.iter().zip(&self.values) {
            x[i] += scale * v;
        }
    }
}

#[inline]
fn magnitude_order(x: &[f64], a: usize, b: usize) -> Ordering {
    x[b].abs()
        .partial_cmp(&x[a].abs())
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// Indices of the `k` largest-magnitude entries; ties go to the smaller index.
pub fn top_k_indices(x: &[f64], k: usize) -> Result<IndexSet> {
    let d = x.len();
    if k > d {
        return Err(Error::BudgetExceedsDimension { k, dim: d });
    }
    if k == 0 {
        return Ok(IndexSet::empty());
    }
    let mut order: Vec<usize> = (0..d).collect();
    if k < d {
        order.select_nth_unstable_by(k - 1, |&a, &b| magnitude_order(x, a, b));
        order.truncate(k);
    }
    order.sort_unstable();
    Ok(IndexSet(order))
}

/// Keeps the top-k entries of `x` and zeroes the rest.
pub fn hard_threshold_k(x: &[f64], k: usize) -> Result<DenseVector> {
    let keep = top_k_indices(x, k)?;
    Ok(DenseVector(restrict_unchecked(x, &keep)))
}

/// Keeps the entries of `x` on `support` and zeroes the rest.
pub fn restrict_to_support(x: &[f64], support: &IndexSet) -> Result<DenseVector> {
    if let Some(&index) = support.as_slice().last() {
        if index >= x.len() {
            return Err(Error::IndexOutOfRange {
                index,
                dim: x.len(),
            });
        }
    }
    Ok(DenseVector(restrict_unchecked(x, support)))
}

fn restrict_unchecked(x: &[f64], support: &IndexSet) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in support.iter() {
        out[i] = x[i];
    }
    out
}

/// Smallest magnitude among the nonzero entries.
pub fn min_abs_on_support(x: &[f64]) -> Result<f64> {
    x.iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .min_by(|a, b| a.total_cmp(b))
        .ok_or(Error::EmptySupport)
}

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn support(x: &[f64]) -> IndexSet {
    IndexSet(
        x.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Dot product of a dense vector with a sparse sample.
pub fn dot(x: &[f64], s: &SparseSample) -> Result<f64> {
    if s.min_dim() > x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: s.min_dim(),
        });
    }
    Ok(s.dot_unchecked(x))
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

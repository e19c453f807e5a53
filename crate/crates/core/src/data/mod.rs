//! Synthetic instance generation, LibSVM text input/output, and row scaling.

mod libsvm;
mod synthetic;

pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm, LibsvmOptions};
pub use synthetic::{generate_synthetic, SyntheticSidecar, SyntheticSpec, GAUSSIAN_SAMPLER};

use crate::error::{Error, Result};
use crate::objective::Dataset;

/// Scales every row with norm above one to unit norm; other rows are untouched.
pub fn normalize_rows(data: &Dataset) -> Dataset {
    let mut out = data.clone();
    let samples = data
        .samples()
        .iter()
        .map(|s| {
            let norm = s.norm();
            if norm > 1.0 {
                s.scaled(1.0 / norm)
            } else {
                s.clone()
            }
        })
        .collect();
    out.replace_samples(samples);
    out
}

/// Divides every row by the largest row norm, returning the scaled data and that norm.
///
/// Unlike [`normalize_rows`] this keeps the relative geometry of the rows, so
/// a model `w` fitted to the scaled data predicts like `w / c` on the original.
pub fn scale_by_max_row_norm(data: &Dataset) -> (Dataset, f64) {
    let c = data.samples().iter().map(|s| s.norm()).fold(0.0, f64::max);
    if c == 0.0 {
        return (data.clone(), 1.0);
    }
    let mut out = data.clone();
    out.replace_samples(data.samples().iter().map(|s| s.scaled(1.0 / c)).collect());
    (out, c)
}

/// Maps labels to `{-1, +1}`: zero becomes -1 and anything outside `{-1, 0, +1}` is an error.
pub fn classification_labels(data: &Dataset) -> Result<Dataset> {
    let mut out = data.clone();
    for (sample, y) in out.labels_mut().iter_mut().enumerate() {
        *y = match *y {
            1.0 => 1.0,
            v if v == -1.0 || v == 0.0 => -1.0,
            label => return Err(Error::InvalidLabel { sample, label }),
        };
    }
    Ok(out)
}

/// Replaces labels by their sign (`+1` for non-negative values).
pub fn sign_labels(data: &Dataset) -> Dataset {
    let mut out = data.clone();
    for y in out.labels_mut().iter_mut() {
        *y = if *y >= 0.0 { 1.0 } else { -1.0 };
    }
    out
}

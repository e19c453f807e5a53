//! Plain-text model and dual files: one `index:value` pair per line, 0-based.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Nonzero entries only, in index order.
pub fn model_text(w: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in w.iter().enumerate().filter(|(_, v)| **v != 0.0) {
        writeln!(out, "{i}:{v:?}").expect("writing to a String");
    }
    out
}

/// Every entry, including zeros.
pub fn dense_text(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i}:{v:?}").expect("writing to a String");
    }
    out
}

fn parse_pairs(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = line
            .split_once(':')
            .and_then(|(i, v)| Some((i.trim().parse::<usize>().ok()?, v.trim().parse::<f64>().ok()?)));
        let Some((i, v)) = parsed else {
            bail!("{}:{}: expected index:value, found {line:?}", path.display(), n + 1);
        };
        if !v.is_finite() {
            bail!("{}:{}: non-finite value {v}", path.display(), n + 1);
        }
        if pairs.last().is_some_and(|&(prev, _)| prev >= i) {
            bail!("{}:{}: indices must be strictly increasing", path.display(), n + 1);
        }
        pairs.push((i, v));
    }
    Ok(pairs)
}

/// Reads a sparse model into a dense vector of length `dim`.
pub fn read_model(path: &Path, dim: usize) -> Result<Vec<f64>> {
    let mut w = vec![0.0; dim];
    for (i, v) in parse_pairs(path)? {
        if i >= dim {
            bail!("{}: index {i} out of range for dimension {dim}", path.display());
        }
        w[i] = v;
    }
    Ok(w)
}

/// Reads a dense vector that must list exactly the indices `0..len`.
pub fn read_dense(path: &Path, len: usize) -> Result<Vec<f64>> {
    let pairs = parse_pairs(path)?;
    if pairs.len() != len || pairs.iter().enumerate().any(|(j, &(i, _))| i != j) {
        bail!(
            "{}: expected {len} entries indexed 0..{len}, found {}",
            path.display(),
            pairs.len()
        );
    }
    Ok(pairs.into_iter().map(|(_, v)| v).collect())
}

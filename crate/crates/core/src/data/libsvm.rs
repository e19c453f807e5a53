use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::objective::Dataset;
use crate::vecops::{IndexSet, SparseSample};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LibsvmOptions {
    /// Feature count; inferred from the largest index when absent.
    pub dim: Option<usize>,
}

/// Reads `label idx:val ...` lines with 1-based, strictly increasing indices.
///
/// Text after `#` is a comment and comment-only lines are ignored; any other
/// line, including a blank one, must parse.
pub fn load_libsvm(path: &Path, opts: LibsvmOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(file), path, opts)
}

pub fn parse_libsvm<R: BufRead>(reader: R, path: &Path, opts: LibsvmOptions) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut max_dim = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let (content, comment) = match line.split_once('#') {
            Some((c, _)) => (c, true),
            None => (line.as_str(), false),
        };
        let mut tokens = content.split_whitespace();
        let Some(label) = tokens.next() else {
            if comment {
                continue;
            }
            return Err(err("empty line".into()));
        };
        let label: f64 = label
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("invalid label {label:?}")))?;

        let mut indices = Vec::new();
        let mut values = Vec::new();
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, found {token:?}")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|i| *i >= 1)
                .ok_or_else(|| err(format!("invalid feature index {idx:?} (indices are 1-based)")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("invalid feature value {val:?}")))?;
            if indices.last().is_some_and(|&last| idx - 1 <= last) {
                return Err(err(format!("feature index {idx} is not strictly increasing")));
            }
            indices.push(idx - 1);
            values.push(val);
        }
        max_dim = max_dim.max(indices.last().map_or(0, |&i| i + 1));
        let indices = IndexSet::new(indices, usize::MAX).map_err(|e| err(e.to_string()))?;
        samples.push(SparseSample::new(indices, values).map_err(|e| err(e.to_string()))?);
        labels.push(label);
    }
    let dim = match opts.dim {
        Some(d) if d < max_dim => {
            return Err(Error::Config(format!(
                "{}: dimension override {d} is smaller than the largest feature index {max_dim}",
                path.display()
            )))
        }
        Some(d) => d,
        None => max_dim,
    };
    Dataset::new(samples, labels, dim)
}

/// Shortest decimal text that parses back to the same `f64`.
fn shortest(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_libsvm(path: &Path, data: &Dataset) -> Result<()> {
    let mut text = String::new();
    for (s, &y) in data.samples().iter().zip(data.labels()) {
        text.push_str(&shortest(y));
        for (i, v) in s.iter() {
            write!(text, " {}:{}", i + 1, shortest(v)).expect("writing to a string");
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default limit on stored nonzeros.
pub const DEFAULT_NNZ_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct LibsvmOptions {
    /// Scale every row to unit ℓ2 norm.
    pub normalize: bool,
    /// Feature count; inferred from the largest index when `None`.
    pub dim: Option<usize>,
    pub nnz_cap: usize,
}

impl Default for LibsvmOptions {
    fn default() -> Self {
        Self { normalize: false, dim: None, nnz_cap: DEFAULT_NNZ_CAP }
    }
}

/// Dense samples with labels in `{0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// One sample per row.
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

fn parse_label(tok: &str) -> Option<f64> {
    let v: f64 = tok.parse().ok()?;
    if v == 1.0 {
        Some(1.0)
    } else if v == -1.0 || v == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Parses LIBSVM text: `label idx:val idx:val …`, 1-based indices.
///
/// Labels `±1` and `0/1` are accepted. Blank lines and `#` comments are skipped.
pub fn parse_libsvm(text: &str, source: &str, opts: &LibsvmOptions) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse { path: source.to_string(), line, msg };
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut nnz = 0usize;
    let mut max_index = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label_tok = toks.next().expect("line is non-empty");
        let label = parse_label(label_tok).ok_or_else(|| err(lineno, format!("bad label {label_tok:?}")))?;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for tok in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx.parse().map_err(|_| err(lineno, format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| err(lineno, format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(lineno, format!("non-finite value {val}")));
            }
            if entries.iter().any(|&(j, _)| j + 1 == idx) {
                return Err(err(lineno, format!("duplicate index {idx}")));
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, val));
        }
        nnz += entries.len();
        if nnz > opts.nnz_cap {
            return Err(err(lineno, format!("more than {} nonzeros", opts.nnz_cap)));
        }
        rows.push(entries);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(err(0, "no samples".into()));
    }
    let d = match opts.dim {
        Some(d) if d < max_index => {
            return Err(err(0, format!("index {max_index} exceeds declared dimension {d}")));
        }
        Some(d) => d,
        None => max_index,
    };
    if d == 0 {
        return Err(err(0, "no features".into()));
    }
    let mut features = DMatrix::zeros(rows.len(), d);
    for (r, entries) in rows.iter().enumerate() {
        for &(c, v) in entries {
            features[(r, c)] = v;
        }
        if opts.normalize {
            let norm = features.row(r).norm();
            if norm > 0.0 {
                features.row_mut(r).unscale_mut(norm);
            }
        }
    }
    Ok(Dataset { features, labels })
}

pub fn load_libsvm(path: &Path, opts: &LibsvmOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_libsvm(&text, &path.display().to_string(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_libsvm(text, "t", &LibsvmOptions::default())
    }

    #[test]
    fn format_examples() {
        let ds = parse("+1 1:0.5 3:2\n-1 2:1\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 3);
        assert_eq!(ds.features.row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.0, 2.0]);
        assert_eq!(ds.labels, vec![1.0, 0.0]);
    }

    #[test]
    fn out_of_order_tolerated() {
        let ds = parse("1 3:2 1:0.5\n").unwrap();
        assert_eq!(ds.features[(0, 0)], 0.5);
        assert_eq!(ds.features[(0, 2)], 2.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("+1 1:1\n\n-1 2:1 2:3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse("+1 1:1\n+2 1:1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("1 0:1\n").is_err());
        assert!(parse("1 1-1\n").is_err());
        assert!(parse("1 1:x\n").is_err());
    }

    #[test]
    fn normalization_and_cap() {
        let opts = LibsvmOptions { normalize: true, ..Default::default() };
        let ds = parse_libsvm("1 1:3 2:4\n", "t", &opts).unwrap();
        assert!((ds.features[(0, 0)] - 0.6).abs() < 1e-15);
        let opts = LibsvmOptions { nnz_cap: 1, ..Default::default() };
        assert!(parse_libsvm("1 1:3 2:4\n", "t", &opts).is_err());
        let opts = LibsvmOptions { dim: Some(5), ..Default::default() };
        assert_eq!(parse_libsvm("1 1:3\n", "t", &opts).unwrap().dim(), 5);
    }
}

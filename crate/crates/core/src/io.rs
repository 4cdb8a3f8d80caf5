//! Kernel ingestion from CSV or JSON text.
//!
//! CSV: `n` lines of `n` comma-separated probabilities. Blank lines and
//! lines starting with `#` are skipped.
//!
//! JSON: `{"n": 2, "rows": [[0, 1], [1, 0]], "v": [1, 2], "labels": ["a", "b"]}`
//! where `v` and `labels` are optional.

use serde::{Deserialize, Serialize};

use crate::chain::{Kernel, LyapunovWeight, StateSpace};
use crate::error::{HarrisError, Result};

/// A parsed kernel with whatever else the input carried.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInput {
    pub kernel: Kernel,
    pub space: StateSpace,
    pub v: Option<LyapunovWeight>,
    /// Largest `|row sum − 1|` before renormalization.
    pub row_deviation: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonKernel {
    n: usize,
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    v: Option<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

/// Parses a kernel, choosing JSON when the text starts with `{`.
pub fn parse_kernel(text: &str) -> Result<KernelInput> {
    if text.trim_start().starts_with('{') {
        parse_kernel_json(text)
    } else {
        let rows = parse_csv_rows(text)?;
        build(rows, None, None)
    }
}

pub fn parse_kernel_json(text: &str) -> Result<KernelInput> {
    let parsed: JsonKernel = serde_json::from_str(text).map_err(|e| HarrisError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if parsed.rows.len() != parsed.n {
        return Err(HarrisError::InvalidKernel(format!(
            "\"n\" is {} but {} rows were given",
            parsed.n,
            parsed.rows.len()
        )));
    }
    build(parsed.rows, parsed.v, parsed.labels)
}

/// Serializes a kernel (and optionally `V`) in the JSON input layout.
pub fn kernel_to_json(kernel: &Kernel, v: Option<&LyapunovWeight>, labels: Option<&[String]>) -> String {
    let doc = JsonKernel {
        n: kernel.n(),
        rows: kernel.to_rows(),
        v: v.map(|v| v.values().to_vec()),
        labels: labels.map(<[String]>::to_vec),
    };
    serde_json::to_string_pretty(&doc).expect("plain data")
}

/// Parses CSV rows of decimal numbers, reporting the 1-based line and
/// column of the first bad field.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        let mut column = 1;
        for field in line.split(',') {
            let value = field.trim();
            let offset = field.len() - field.trim_start().len();
            let parsed: f64 = value.parse().map_err(|_| HarrisError::Parse {
                line: i + 1,
                column: column + offset,
                message: format!("expected a number, found {value:?}"),
            })?;
            row.push(parsed);
            column += field.len() + 1;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarrisError::Parse {
            line: 1,
            column: 1,
            message: "no rows".into(),
        });
    }
    Ok(rows)
}

/// Parses a vector given as a JSON array, one CSV line, or one value per line.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| HarrisError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        });
    }
    Ok(parse_csv_rows(text)?.concat())
}

fn build(rows: Vec<Vec<f64>>, v: Option<Vec<f64>>, labels: Option<Vec<String>>) -> Result<KernelInput> {
    let n = rows.len();
    let row_deviation = rows
        .iter()
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let kernel = Kernel::new(rows)?;
    let space = match labels {
        Some(l) if l.len() != n => {
            return Err(HarrisError::Dimension {
                expected: n,
                actual: l.len(),
            })
        }
        Some(l) => StateSpace::with_labels(l)?,
        None => StateSpace::new(n)?,
    };
    let v = v
        .map(|vals| {
            if vals.len() != n {
                return Err(HarrisError::Dimension {
                    expected: n,
                    actual: vals.len(),
                });
            }
            LyapunovWeight::new(vals)
        })
        .transpose()?;
    Ok(KernelInput {
        kernel,
        space,
        v,
        row_deviation,
    })
}

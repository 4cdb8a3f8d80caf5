//! Loading kernels, weights and starting measures from paths, inline text
//! and `demo:` names.

use std::fs;
use std::path::Path;

use harris_core::examples;
use harris_core::io::{parse_kernel, parse_vector};
use harris_core::{HarrisError, Kernel, LyapunovWeight, Measure};

use crate::CliError;

/// A kernel together with the weight that will be used for it.
pub struct Loaded {
    pub source: String,
    pub kernel: Kernel,
    pub v: LyapunovWeight,
    pub row_deviation: f64,
}

fn read(path: &str, what: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {what} file {path:?}: {e}")))
}

fn located(path: &str, err: HarrisError) -> CliError {
    match err {
        HarrisError::Parse { line, column, message } => {
            CliError::Input(format!("{path}:{line}:{column}: {message}"))
        }
        other => CliError::Core(other),
    }
}

/// Loads `demo:<name>` or a CSV/JSON kernel file. `v_arg` (path or inline
/// vector) overrides any weight carried by the input.
pub fn load(kernel_arg: &str, v_arg: Option<&str>) -> Result<Loaded, CliError> {
    let (kernel, embedded_v, row_deviation) = match kernel_arg.strip_prefix("demo:") {
        Some(name) => {
            let ex = examples::by_name(name).ok_or_else(|| {
                CliError::Input(format!(
                    "unknown demo {name:?}; available: {}",
                    examples::NAMES.join(", ")
                ))
            })?;
            (ex.kernel, Some(ex.v), 0.0)
        }
        None => {
            let text = read(kernel_arg, "kernel")?;
            let input = parse_kernel(&text).map_err(|e| located(kernel_arg, e))?;
            (input.kernel, input.v, input.row_deviation)
        }
    };
    let v = match v_arg {
        Some(arg) => load_vector(arg, "V")?,
        None => embedded_v
            .map(|v| v.values().to_vec())
            .ok_or_else(|| CliError::Input("no Lyapunov weight: pass --v <file or values>".into()))?,
    };
    let v = LyapunovWeight::new(v)?;
    if v.len() != kernel.n() {
        return Err(HarrisError::Dimension {
            expected: kernel.n(),
            actual: v.len(),
        }
        .into());
    }
    Ok(Loaded {
        source: kernel_arg.to_string(),
        kernel,
        v,
        row_deviation,
    })
}

/// A vector from a file, or given inline as `1,2,3` or `[1, 2, 3]`.
fn load_vector(arg: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if Path::new(arg).is_file() {
        let text = read(arg, what)?;
        return parse_vector(&text).map_err(|e| located(arg, e));
    }
    parse_vector(arg).map_err(|_| CliError::Input(format!("cannot read {what} file {arg:?}: not found")))
}

/// `uniform`, `delta:<i>`, or a vector file/inline list.
pub fn load_mu0(arg: Option<&str>, n: usize) -> Result<Measure, CliError> {
    match arg {
        None | Some("uniform") => Ok(Measure::uniform(n)?),
        Some(a) => match a.strip_prefix("delta:") {
            Some(i) => {
                let i: usize = i
                    .parse()
                    .map_err(|_| CliError::Input(format!("bad state index in {a:?}")))?;
                Ok(Measure::dirac(n, i)?)
            }
            None => {
                let w = load_vector(a, "mu0")?;
                if w.len() != n {
                    return Err(HarrisError::Dimension { expected: n, actual: w.len() }.into());
                }
                Ok(Measure::new(w)?)
            }
        },
    }
}

/// State indices given as `0,2,5`.
pub fn parse_indices(arg: &str) -> Result<Vec<usize>, CliError> {
    arg.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad state index {s:?} in {arg:?}")))
        })
        .collect()
}

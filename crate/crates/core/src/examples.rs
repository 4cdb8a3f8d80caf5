//! Built-in chains with known behaviour, used by tests and the CLI `demo:` inputs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::chain::{Kernel, LyapunovWeight};
use crate::error::{param, Result};

/// Localized drift and minorization constants known to hold for an example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownAlt {
    pub s: Vec<usize>,
    pub gamma_tilde: f64,
    pub b: f64,
    pub alpha_tilde: f64,
    pub nu_tilde: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedExample {
    pub name: String,
    pub kernel: Kernel,
    pub v: LyapunovWeight,
    pub known: Option<KnownAlt>,
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 5] = ["flip", "avg-flip", "rrw", "ar1", "identity"];

/// The deterministic flip `P(x,·) = δ_{1−x}` on `{0,1}` with `V(x) = 1 + x`.
pub fn flip_chain() -> NamedExample {
    NamedExample {
        name: "flip".into(),
        kernel: Kernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).expect("stochastic"),
        v: LyapunovWeight::new(vec![1.0, 2.0]).expect("nonnegative"),
        known: Some(KnownAlt {
            s: vec![0],
            gamma_tilde: 0.5,
            b: 1.5,
            alpha_tilde: 1.0,
            nu_tilde: vec![0.0, 1.0],
        }),
    }
}

/// The flip chain averaged over `N = 6` steps: `[[4/7, 3/7], [3/7, 4/7]]`.
pub fn averaged_flip_chain() -> NamedExample {
    let flip = flip_chain();
    NamedExample {
        name: "avg-flip".into(),
        kernel: flip.kernel.cesaro_average(6),
        v: flip.v,
        known: None,
    }
}

/// Walk on `{0, …, size−1}` stepping up with probability `p` and down with
/// `1−p`, holding at either end instead of leaving; `V(x) = x`.
pub fn reflected_random_walk(size: usize, p: f64) -> Result<NamedExample> {
    if size < 3 {
        return Err(param(format!("size = {size} must be at least 3")));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(param(format!("p = {p} must lie in (0, 1/2)")));
    }
    let q = 1.0 - p;
    let rows = (0..size)
        .map(|x| {
            let mut row = vec![0.0; size];
            if x == 0 {
                row[0] += q;
            } else {
                row[x - 1] += q;
            }
            if x + 1 == size {
                row[x] += p;
            } else {
                row[x + 1] += p;
            }
            row
        })
        .collect();
    Ok(NamedExample {
        name: format!("rrw-{size}-{p}"),
        kernel: Kernel::new(rows)?,
        v: LyapunovWeight::new((0..size).map(|x| x as f64).collect())?,
        known: None,
    })
}

/// Grid discretization of `X' = aX + σξ`, `ξ ~ N(0,1)`, on `n` equal cells of
/// `[grid_min, grid_max]`, with `V(x) = 1 + x²` at cell midpoints.
///
/// Row `i` takes the transition density at each midpoint times the cell
/// width; the Gaussian tail mass beyond either end of the grid is added to
/// the corresponding boundary cell before renormalizing.
pub fn discretized_ar1(a: f64, sigma: f64, grid_min: f64, grid_max: f64, n: usize) -> Result<NamedExample> {
    if a.is_nan() || a.abs() >= 1.0 {
        return Err(param(format!("|a| = {} must be < 1", a.abs())));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(param(format!("sigma = {sigma} must be > 0")));
    }
    if n < 10 {
        return Err(param(format!("n = {n} must be at least 10")));
    }
    if !(grid_min < grid_max && grid_min.is_finite() && grid_max.is_finite()) {
        return Err(param(format!("grid [{grid_min}, {grid_max}] is empty or unbounded")));
    }
    let h = (grid_max - grid_min) / n as f64;
    let mid: Vec<f64> = (0..n).map(|i| grid_min + (i as f64 + 0.5) * h).collect();
    let rows = mid
        .iter()
        .map(|&x| {
            let law = Normal::new(a * x, sigma).expect("sigma > 0");
            let mut row: Vec<f64> = mid.iter().map(|&y| law.pdf(y) * h).collect();
            row[0] += law.cdf(grid_min);
            row[n - 1] += law.sf(grid_max);
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            row
        })
        .collect();
    Ok(NamedExample {
        name: format!("ar1-{a}-{sigma}-{n}"),
        kernel: Kernel::new(rows)?,
        v: LyapunovWeight::new(mid.iter().map(|x| 1.0 + x * x).collect())?,
        known: None,
    })
}

/// Looks up a built-in example: `flip`, `avg-flip`, `rrw` (5 states,
/// `p = 0.25`), `ar1` (`a = 0.5`, `σ = 1`, 61 cells on `[−6, 6]`) or
/// `identity` (two absorbing states, `V = (0, 1)`).
pub fn by_name(name: &str) -> Option<NamedExample> {
    match name {
        "flip" => Some(flip_chain()),
        "avg-flip" => Some(averaged_flip_chain()),
        "rrw" => reflected_random_walk(5, 0.25).ok(),
        "ar1" => discretized_ar1(0.5, 1.0, -6.0, 6.0, 61).ok(),
        "identity" => Some(NamedExample {
            name: "identity".into(),
            kernel: Kernel::identity(2),
            v: LyapunovWeight::new(vec![0.0, 1.0]).expect("nonnegative"),
            known: None,
        }),
        _ => None,
    }
}

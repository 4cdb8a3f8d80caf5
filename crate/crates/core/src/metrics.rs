//! Weighted norms and distances indexed by a scale `β > 0`.
//!
//! With the weight `w_β(x) = 1 + βV(x)`:
//!
//! ```text
//! ‖φ‖_β      = max_x |φ(x)| / w_β(x)
//! d_β(x,y)   = w_β(x) + w_β(y)            (x ≠ y), 0 on the diagonal
//! ⫴φ⫴_β      = max_{x≠y} |φ(x) − φ(y)| / d_β(x,y)
//! ρ_β(μ₁,μ₂) = Σ_x w_β(x) |μ₁(x) − μ₂(x)|
//! ```
//!
//! `ρ_β` is simultaneously the dual distance of `‖·‖_β` and of `⫴·⫴_β` on
//! probability measures. The second identity rests on the shift
//! [`optimal_shift`]: every `φ` with `⫴φ⫴_β ≤ s` can be moved by a constant
//! into the `‖·‖_β` ball of radius `s`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{check_dim, check_index, LyapunovWeight, Measure, STOCHASTIC_TOL};
use crate::error::{HarrisError, Result};

/// The scale parameter `β` of the weighted norms.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BetaScale(f64);

impl BetaScale {
    /// `β = 1`, the unscaled weighted norm.
    pub const ONE: BetaScale = BetaScale(1.0);

    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self(beta))
        } else {
            Err(HarrisError::Param(format!("beta = {beta} must be finite and > 0")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 + βV(x)`.
    #[inline]
    pub fn weight(self, v: f64) -> f64 {
        1.0 + self.0 * v
    }
}

impl TryFrom<f64> for BetaScale {
    type Error = HarrisError;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BetaScale> for f64 {
    fn from(b: BetaScale) -> f64 {
        b.0
    }
}

/// `‖φ‖_β = max_x |φ(x)| / (1 + βV(x))`.
pub fn weighted_sup_norm(phi: &[f64], v: &LyapunovWeight, beta: BetaScale) -> Result<f64> {
    check_dim(v.len(), phi.len())?;
    Ok(phi
        .iter()
        .zip(v.values())
        .map(|(f, &vx)| f.abs() / beta.weight(vx))
        .fold(0.0, f64::max))
}

/// The point metric `d_β(x, y)`.
pub fn dbeta_point(x: usize, y: usize, v: &LyapunovWeight, beta: BetaScale) -> Result<f64> {
    check_index(x, v.len())?;
    check_index(y, v.len())?;
    Ok(dbeta_unchecked(x, y, v.values(), beta))
}

#[inline]
fn dbeta_unchecked(x: usize, y: usize, v: &[f64], beta: BetaScale) -> f64 {
    // Summed in index order so that ρ_β(δ_x, δ_y) reproduces it bit for bit.
    match x.cmp(&y) {
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Less => beta.weight(v[x]) + beta.weight(v[y]),
        std::cmp::Ordering::Greater => beta.weight(v[y]) + beta.weight(v[x]),
    }
}

/// `⫴φ⫴_β`, by exhaustive enumeration of state pairs.
pub fn lipschitz_seminorm(phi: &[f64], v: &LyapunovWeight, beta: BetaScale) -> Result<f64> {
    check_dim(v.len(), phi.len())?;
    let vals = v.values();
    let n = phi.len();
    let row_max = |x: usize| {
        ((x + 1)..n)
            .map(|y| (phi[x] - phi[y]).abs() / dbeta_unchecked(x, y, vals, beta))
            .fold(0.0, f64::max)
    };
    Ok(if n >= 256 {
        (0..n).into_par_iter().map(row_max).reduce(|| 0.0, f64::max)
    } else {
        (0..n).map(row_max).fold(0.0, f64::max)
    })
}

/// The constant `c` with `‖φ + c‖_β ≤ ⫴φ⫴_β`.
///
/// For `s = ⫴φ⫴_β > 0` this is `min_x (s(1 + βV(x)) − φ(x))`, the unit-ball
/// construction applied to `φ/s` and scaled back. For constant `φ` the
/// unit-ball form `min_x (1 + βV(x) − φ(x))` is returned, which lands
/// `φ + c` on the boundary of the unit ball.
pub fn optimal_shift(phi: &[f64], v: &LyapunovWeight, beta: BetaScale) -> Result<f64> {
    let s = lipschitz_seminorm(phi, v, beta)?;
    let scale = if s > 0.0 { s } else { 1.0 };
    Ok(phi
        .iter()
        .zip(v.values())
        .map(|(f, &vx)| scale * beta.weight(vx) - f)
        .fold(f64::INFINITY, f64::min))
}

/// `ρ_β(μ₁, μ₂) = Σ_x (1 + βV(x)) |μ₁(x) − μ₂(x)|`.
pub fn rho_beta(mu1: &Measure, mu2: &Measure, v: &LyapunovWeight, beta: BetaScale) -> Result<f64> {
    rho_beta_weights(mu1.weights(), mu2.weights(), v, beta)
}

/// [`rho_beta`] on raw nonnegative weight vectors of equal total mass.
pub fn rho_beta_weights(a: &[f64], b: &[f64], v: &LyapunovWeight, beta: BetaScale) -> Result<f64> {
    check_dim(v.len(), a.len())?;
    check_dim(v.len(), b.len())?;
    let (ma, mb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    if (ma - mb).abs() > STOCHASTIC_TOL * ma.abs().max(mb.abs()).max(1.0) {
        return Err(HarrisError::MassMismatch(ma, mb));
    }
    Ok(a.iter()
        .zip(b)
        .zip(v.values())
        .map(|((p, q), &vx)| beta.weight(vx) * (p - q).abs())
        .sum())
}

/// `ρ_β` evaluated as `∫φ d(μ₁ − μ₂)` at the maximizing test function
/// `φ(x) = sign(μ₁(x) − μ₂(x)) (1 + βV(x))`, which has `‖φ‖_β ≤ 1`.
pub fn rho_beta_dual(
    mu1: &Measure,
    mu2: &Measure,
    v: &LyapunovWeight,
    beta: BetaScale,
) -> Result<f64> {
    let phi = extremal_test_function(mu1, mu2, v, beta)?;
    Ok(phi
        .iter()
        .zip(mu1.weights().iter().zip(mu2.weights()))
        .map(|(f, (p, q))| f * (p - q))
        .sum())
}

/// The maximizer used by [`rho_beta_dual`].
pub fn extremal_test_function(
    mu1: &Measure,
    mu2: &Measure,
    v: &LyapunovWeight,
    beta: BetaScale,
) -> Result<Vec<f64>> {
    check_dim(v.len(), mu1.len())?;
    check_dim(v.len(), mu2.len())?;
    Ok(mu1
        .weights()
        .iter()
        .zip(mu2.weights())
        .zip(v.values())
        .map(|((p, q), &vx)| {
            let d = p - q;
            let sign = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            sign * beta.weight(vx)
        })
        .collect())
}

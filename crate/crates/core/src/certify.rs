//! Drift and minorization certificates and the resulting contraction rate.
//!
//! A kernel `P` with Lyapunov weight `V` is certified in three stages:
//!
//! 1. **Drift**: `PV ≤ γV + K` pointwise ([`check_drift`], [`fit_k`]).
//! 2. **Minorization** on the level set `C = {V ≤ R}` with
//!    `R > 2K/(1−γ)`: `P(x,·) ≥ αν` for `x ∈ C` ([`extract_minorization`]).
//! 3. **Contraction**: for `α₀ ∈ (0, α)` and `β = α₀/K`,
//!    `ρ_β(Pμ₁, Pμ₂) ≤ ᾱ ρ_β(μ₁, μ₂)` with
//!
//! ```text
//! γ₀ = γ + 2K/R
//! γ₁ = (2 + βRγ₀) / (2 + βR)
//! γ₂ = max(1 − (α − α₀), γ)
//! ᾱ  = max(γ₁, γ₂)
//! ```
//!
//! ([`contraction_constants`]). The claim is then checked numerically on
//! every pair of Dirac masses and on random measure pairs
//! ([`verify_pointwise_contraction`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{check_index, Kernel, LyapunovWeight, Measure};
use crate::error::{param, HarrisError, Result};
use crate::metrics::{rho_beta_weights, BetaScale};

/// Pointwise tolerance on drift slack and residual positivity.
pub const SLACK_TOL: f64 = 1e-12;
/// Relative margin enforcing strict inequalities.
pub const STRICT_MARGIN: f64 = 1e-9;
/// Floor substituted for a fitted `K = 0`, which would make `β = α₀/K` undefined.
pub const K_FLOOR: f64 = 1e-12;
/// Tolerance of the pointwise contraction check.
pub const CONTRACTION_TOL: f64 = 1e-10;
/// Number of random measure pairs drawn by [`verify_pointwise_contraction`].
pub const RANDOM_PAIRS: usize = 1000;

const VERIFY_SEED: u64 = 0x4841_5252_4953;

/// `PV ≤ γV + K`, with the per-state slack `γV(x) + K − PV(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCertificate {
    pub gamma: f64,
    pub k: f64,
    pub slack: Vec<f64>,
    pub valid: bool,
}

impl DriftCertificate {
    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `P(x,·) ≥ αν` for every `x` in the level set `{V ≤ R}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorizationCertificate {
    pub r: f64,
    pub level_set: Vec<usize>,
    pub alpha: f64,
    pub nu: Measure,
    pub residual_ok: bool,
}

impl MinorizationCertificate {
    /// Whether `R > 2K/(1−γ)` holds for the given drift constants.
    pub fn satisfies_level_bound(&self, drift: &DriftCertificate) -> bool {
        check_level_bound(drift.gamma, drift.k, self.r).is_ok()
    }
}

/// The constants of the contraction estimate in `ρ_β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub gamma: f64,
    pub k: f64,
    pub alpha: f64,
    pub r: f64,
    pub alpha0: f64,
    pub beta: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha_bar: f64,
    /// The fitted `K` was zero and has been replaced by [`K_FLOOR`].
    pub k_clamped: bool,
    /// `α = 1`: outside the open interval `(0,1)` of the minorization
    /// condition, but every formula stays valid since `α₀ < α`.
    pub alpha_is_one: bool,
    pub empirically_verified: bool,
}

impl ContractionCertificate {
    pub fn beta_scale(&self) -> BetaScale {
        BetaScale::new(self.beta).expect("beta > 0 by construction")
    }

    pub fn with_verification(mut self, report: &ContractionReport) -> Self {
        self.empirically_verified = report.passed;
        self
    }
}

/// Outcome of [`verify_pointwise_contraction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub alpha_bar: f64,
    /// `max_{x≠y} ρ_β(Pδ_x, Pδ_y) / d_β(x,y)`.
    pub max_dirac_ratio: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub dirac_pass: bool,
    pub random_pairs: usize,
    /// Largest `ρ_β(Pμ₁, Pμ₂) / ρ_β(μ₁, μ₂)` over the random pairs.
    pub max_random_ratio: f64,
    pub random_pass: bool,
    pub passed: bool,
}

/// `2K/(1−γ)`, the threshold that `R` must exceed.
pub fn level_bound(gamma: f64, k: f64) -> f64 {
    2.0 * k / (1.0 - gamma)
}

/// `R > 2K/(1−γ)`, enforced with relative margin [`STRICT_MARGIN`].
pub fn check_level_bound(gamma: f64, k: f64, r: f64) -> Result<()> {
    let bound = level_bound(gamma, k);
    if r >= (1.0 + STRICT_MARGIN) * bound && r > 0.0 {
        Ok(())
    } else {
        Err(HarrisError::RTooSmall { r, bound })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(param(format!("gamma = {gamma} must lie in (0,1)")))
    }
}

pub fn check_drift(
    kernel: &Kernel,
    v: &LyapunovWeight,
    gamma: f64,
    k: f64,
) -> Result<DriftCertificate> {
    check_gamma(gamma)?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(param(format!("K = {k} must be finite and >= 0")));
    }
    v.check_len(kernel.n())?;
    let pv = kernel.apply_to_function(v.values())?;
    let slack: Vec<f64> = v
        .values()
        .iter()
        .zip(&pv)
        .map(|(&vx, &pvx)| gamma * vx + k - pvx)
        .collect();
    let valid = slack.iter().all(|&s| s >= -SLACK_TOL);
    Ok(DriftCertificate {
        gamma,
        k,
        slack,
        valid,
    })
}

/// The smallest `K ≥ 0` making `PV ≤ γV + K` hold.
pub fn fit_k(kernel: &Kernel, v: &LyapunovWeight, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    v.check_len(kernel.n())?;
    let pv = kernel.apply_to_function(v.values())?;
    Ok(pv
        .iter()
        .zip(v.values())
        .map(|(pvx, &vx)| pvx - gamma * vx)
        .fold(0.0, f64::max))
}

/// Componentwise row minimum over `C = {V ≤ R}`, normalized into `(α, ν)`.
///
/// For a fixed `C` this gives the largest `α` of any valid pair.
pub fn extract_minorization(
    kernel: &Kernel,
    v: &LyapunovWeight,
    r: f64,
) -> Result<MinorizationCertificate> {
    v.check_len(kernel.n())?;
    let level_set = v.level_set(r);
    let (alpha, nu) = row_minimum(kernel, &level_set).ok_or(HarrisError::EmptyLevelSet { r })??;
    let residual_ok = residual_nonnegative(kernel, &level_set, alpha, &nu);
    Ok(MinorizationCertificate {
        r,
        level_set,
        alpha,
        nu,
        residual_ok,
    })
}

/// `None` for an empty set; `NoMinorization` when the rows share no mass.
pub(crate) fn row_minimum(kernel: &Kernel, set: &[usize]) -> Option<Result<(f64, Measure)>> {
    let (&first, rest) = set.split_first()?;
    let mut m = kernel.row(first).to_vec();
    for &x in rest {
        m.iter_mut().zip(kernel.row(x)).for_each(|(a, &b)| *a = a.min(b));
    }
    let alpha: f64 = m.iter().sum();
    if alpha <= 0.0 {
        return Some(Err(HarrisError::NoMinorization));
    }
    Some(Measure::from_unnormalized(m).map(|nu| (alpha.min(1.0), nu)))
}

/// `P(x,y) − αν(y) ≥ −SLACK_TOL` for all `x ∈ set`, i.e. the residual kernel
/// `(P − αν)/(1 − α)` is a genuine Markov kernel on `set`.
pub(crate) fn residual_nonnegative(kernel: &Kernel, set: &[usize], alpha: f64, nu: &Measure) -> bool {
    set.iter().all(|&x| {
        kernel
            .row(x)
            .iter()
            .zip(nu.weights())
            .all(|(p, n)| p - alpha * n >= -SLACK_TOL)
    })
}

/// Evaluates the contraction constants for `β = α₀/K`.
pub fn contraction_constants(
    gamma: f64,
    k: f64,
    alpha: f64,
    r: f64,
    alpha0: f64,
) -> Result<ContractionCertificate> {
    check_gamma(gamma)?;
    if !(k.is_finite() && k > 0.0) {
        return Err(param(format!("K = {k} must be finite and > 0")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(param(format!("alpha = {alpha} must lie in (0,1]")));
    }
    if !(alpha0 > 0.0 && alpha0 < alpha) {
        return Err(param(format!("alpha0 = {alpha0} must lie in (0, alpha = {alpha})")));
    }
    if !r.is_finite() {
        return Err(param(format!("R = {r} must be finite")));
    }
    check_level_bound(gamma, k, r)?;
    let gamma0 = gamma + 2.0 * k / r;
    if gamma0 >= 1.0 {
        return Err(HarrisError::RTooSmall {
            r,
            bound: level_bound(gamma, k),
        });
    }
    let beta = alpha0 / k;
    let gamma1 = (2.0 + beta * r * gamma0) / (2.0 + beta * r);
    let gamma2 = (1.0 - (alpha - alpha0)).max(gamma);
    let alpha_bar = gamma1.max(gamma2);
    Ok(ContractionCertificate {
        gamma,
        k,
        alpha,
        r,
        alpha0,
        beta,
        gamma0,
        gamma1,
        gamma2,
        alpha_bar,
        k_clamped: false,
        alpha_is_one: alpha == 1.0,
        empirically_verified: false,
    })
}

/// `max_{x≠y} ρ_β(Pδ_x, Pδ_y) / d_β(x,y)` and the pair attaining it.
pub fn max_dirac_ratio(
    kernel: &Kernel,
    v: &LyapunovWeight,
    beta: BetaScale,
) -> Result<(f64, Option<(usize, usize)>)> {
    v.check_len(kernel.n())?;
    let n = kernel.n();
    let w: Vec<f64> = v.values().iter().map(|&x| beta.weight(x)).collect();
    let best_in_row = |x: usize| {
        let rx = kernel.row(x);
        let mut best = (0.0_f64, None);
        for y in (x + 1)..n {
            let ry = kernel.row(y);
            let rho: f64 = rx
                .iter()
                .zip(ry)
                .zip(&w)
                .map(|((p, q), wz)| wz * (p - q).abs())
                .sum();
            let ratio = rho / (w[x] + w[y]);
            if best.1.is_none() || ratio > best.0 {
                best = (ratio, Some((x, y)));
            }
        }
        best
    };
    let pick = |a: (f64, Option<(usize, usize)>), b: (f64, Option<(usize, usize)>)| match (a.1, b.1) {
        (None, _) => b,
        (_, None) => a,
        _ if b.0 > a.0 => b,
        _ => a,
    };
    Ok((0..n)
        .into_par_iter()
        .map(best_in_row)
        .reduce(|| (0.0, None), pick))
}

/// Checks `ρ_β(Pμ₁, Pμ₂) ≤ ᾱ ρ_β(μ₁, μ₂)` on all Dirac pairs and on
/// [`RANDOM_PAIRS`] seeded random pairs.
pub fn verify_pointwise_contraction(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &ContractionCertificate,
) -> Result<ContractionReport> {
    verify_with_pairs(kernel, v, cert, RANDOM_PAIRS, VERIFY_SEED)
}

/// [`verify_pointwise_contraction`] with an explicit pair count and seed.
pub fn verify_with_pairs(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &ContractionCertificate,
    pairs: usize,
    seed: u64,
) -> Result<ContractionReport> {
    let beta = cert.beta_scale();
    let alpha_bar = cert.alpha_bar;
    let (max_dirac, worst_pair) = max_dirac_ratio(kernel, v, beta)?;
    let dirac_pass = max_dirac <= alpha_bar + CONTRACTION_TOL;

    let n = kernel.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_random = 0.0_f64;
    let mut random_pass = true;
    for _ in 0..pairs {
        let m1 = random_measure(&mut rng, n);
        let m2 = random_measure(&mut rng, n);
        let before = rho_beta_weights(&m1, &m2, v, beta)?;
        let after = rho_beta_weights(&kernel.push_forward(&m1)?, &kernel.push_forward(&m2)?, v, beta)?;
        if after > alpha_bar * before + CONTRACTION_TOL {
            random_pass = false;
        }
        if before > 0.0 {
            max_random = max_random.max(after / before);
        }
    }
    Ok(ContractionReport {
        alpha_bar,
        max_dirac_ratio: max_dirac,
        worst_pair,
        dirac_pass,
        random_pairs: pairs,
        max_random_ratio: max_random,
        random_pass,
        passed: dirac_pass && random_pass,
    })
}

/// Draws a probability vector: flat Dirichlet, sparse, or a Dirac mass.
pub fn random_measure<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match rng.random_range(0..3) {
        0 => w.iter_mut().for_each(|x| *x = -(1.0 - rng.random::<f64>()).ln()),
        1 => {
            let k = rng.random_range(1..=n.min(3));
            for _ in 0..k {
                w[rng.random_range(0..n)] += rng.random::<f64>() + 1e-3;
            }
        }
        _ => w[rng.random_range(0..n)] = 1.0,
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

const GAMMA_GRID: usize = 19;
const R_SCALES: [f64; 4] = [1.0 + 1e-6, 1.25, 1.5, 2.0];

/// Grid search for the certificate with the smallest `ᾱ`.
///
/// `γ ∈ {0.05, …, 0.95}` with `K` fitted, `R` among the distinct values of
/// `V` scaled by 1+1e-6, 1.25, 1.5 and 2, and `α₀ ∈ {α/4, α/2, 3α/4}`. Ties
/// go to the smaller `γ`, then the smaller `R`, then the larger `α₀`. The
/// winner is run through [`verify_pointwise_contraction`].
pub fn optimize_constants(kernel: &Kernel, v: &LyapunovWeight) -> Result<ContractionCertificate> {
    optimize_constants_with(kernel, v, &[])
}

/// [`optimize_constants`] with additional candidate values of `R`.
pub fn optimize_constants_with(
    kernel: &Kernel,
    v: &LyapunovWeight,
    extra_r: &[f64],
) -> Result<ContractionCertificate> {
    v.check_len(kernel.n())?;
    let mut levels: Vec<f64> = v.values().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut radii: Vec<f64> = levels
        .iter()
        .flat_map(|&l| R_SCALES.iter().map(move |s| l * s))
        .chain(extra_r.iter().copied().filter(|r| r.is_finite()))
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();

    let minorizations: Vec<(f64, Option<f64>)> = radii
        .iter()
        .map(|&r| {
            let alpha = extract_minorization(kernel, v, r).ok().map(|m| m.alpha);
            (r, alpha)
        })
        .collect();

    let pv = kernel.apply_to_function(v.values())?;
    let mut best: Option<ContractionCertificate> = None;
    for i in 1..=GAMMA_GRID {
        let gamma = i as f64 / 20.0;
        let fitted = pv
            .iter()
            .zip(v.values())
            .map(|(pvx, &vx)| pvx - gamma * vx)
            .fold(0.0, f64::max);
        let (k, k_clamped) = if fitted < K_FLOOR {
            (K_FLOOR, true)
        } else {
            (fitted, false)
        };
        for &(r, alpha) in &minorizations {
            let Some(alpha) = alpha else { continue };
            if check_level_bound(gamma, k, r).is_err() {
                continue;
            }
            for alpha0 in [0.75 * alpha, 0.5 * alpha, 0.25 * alpha] {
                let Ok(mut cert) = contraction_constants(gamma, k, alpha, r, alpha0) else {
                    continue;
                };
                cert.k_clamped = k_clamped;
                if best.as_ref().is_none_or(|b| cert.alpha_bar < b.alpha_bar) {
                    best = Some(cert);
                }
            }
        }
    }
    let best = best.ok_or(HarrisError::NoFeasiblePoint)?;
    let report = verify_pointwise_contraction(kernel, v, &best)?;
    Ok(best.with_verification(&report))
}

/// Drift, minorization and contraction certificates for one set of constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub drift: DriftCertificate,
    pub minorization: MinorizationCertificate,
    pub contraction: ContractionCertificate,
    pub verification: ContractionReport,
}

/// User-fixed constants; anything left `None` is fitted or defaulted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FixedConstants {
    pub gamma: Option<f64>,
    pub k: Option<f64>,
    pub r: Option<f64>,
    pub alpha0: Option<f64>,
    pub beta: Option<f64>,
}

impl FixedConstants {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Runs [`optimize_constants`] and assembles the full certificate bundle.
pub fn certify(kernel: &Kernel, v: &LyapunovWeight) -> Result<Certification> {
    let cert = optimize_constants(kernel, v)?;
    assemble(kernel, v, cert)
}

/// Certification at user-supplied constants.
///
/// `γ` is required. `K` defaults to [`fit_k`], `R` to `1.05 · 2K/(1−γ)`
/// and `α₀` to `β·K` when `β` is given, else `α/2`.
pub fn certify_fixed(
    kernel: &Kernel,
    v: &LyapunovWeight,
    fixed: &FixedConstants,
) -> Result<Certification> {
    let gamma = fixed
        .gamma
        .ok_or_else(|| param("gamma must be given when fixing constants"))?;
    let (k, k_clamped) = match fixed.k {
        Some(k) => (k, false),
        None => {
            let fitted = fit_k(kernel, v, gamma)?;
            if fitted < K_FLOOR {
                (K_FLOOR, true)
            } else {
                (fitted, false)
            }
        }
    };
    let drift = check_drift(kernel, v, gamma, k)?;
    if !drift.valid {
        return Err(param(format!(
            "drift inequality fails with gamma = {gamma}, K = {k} (min slack {})",
            drift.min_slack()
        )));
    }
    let r = fixed.r.unwrap_or(1.05 * level_bound(gamma, k));
    let minor = extract_minorization(kernel, v, r)?;
    let alpha0 = match (fixed.alpha0, fixed.beta) {
        (Some(a0), _) => a0,
        (None, Some(beta)) => beta * k,
        (None, None) => 0.5 * minor.alpha,
    };
    let mut cert = contraction_constants(gamma, k, minor.alpha, r, alpha0)?;
    cert.k_clamped = k_clamped;
    let report = verify_pointwise_contraction(kernel, v, &cert)?;
    Ok(Certification {
        drift,
        minorization: minor,
        contraction: cert.with_verification(&report),
        verification: report,
    })
}

fn assemble(kernel: &Kernel, v: &LyapunovWeight, cert: ContractionCertificate) -> Result<Certification> {
    let drift = check_drift(kernel, v, cert.gamma, cert.k)?;
    let minorization = extract_minorization(kernel, v, cert.r)?;
    let verification = verify_pointwise_contraction(kernel, v, &cert)?;
    Ok(Certification {
        drift,
        minorization,
        contraction: cert.with_verification(&verification),
        verification,
    })
}

pub(crate) fn check_set(set: &[usize], n: usize) -> Result<()> {
    if set.is_empty() {
        return Err(param("state set must be nonempty"));
    }
    for &x in set {
        check_index(x, n)?;
    }
    Ok(())
}

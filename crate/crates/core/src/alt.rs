//! Drift localized to a set `S` and minorization on that same set.
//!
//! The conditions are
//!
//! ```text
//! PV ≤ γ̃V + b·1_S,   V ≥ 1
//! P(x,·) ≥ α̃ν̃        for x ∈ S
//! ```
//!
//! They imply the plain drift condition with `K = b`, but not a one-step
//! contraction: the deterministic flip on two states satisfies both with
//! `S = {0}` and has spectrum `{−1, 1}`. What does hold is that the Cesàro
//! average `Q = (N+1)⁻¹ Σ_{k≤N} P^k` satisfies plain drift and minorization
//! for a constructive `N = n + 1 + ℓ`, where
//!
//! - `n` is the smallest integer with `γ̃^{−n−1}/2 ≥ R`, so that on
//!   `{V ≤ γ̃^{−n−1}/2}` the chain has visited `S` with weighted frequency at
//!   least `1/(2b)` ([`lower_bound_chain`]);
//! - `ℓ ≥ 1` is the first time with `(P^{ℓ−1}ν̃)(S) > 0`, which yields
//!   `P^ℓν̃ ≥ α̂ν̃` and, for `ν = ℓ⁻¹ Σ_{k<ℓ} P^kν̃`, `Pν ≥ α̂ν`.
//!
//! The plain certificate for `Q` is then obtained from `γ_Q = (N+1)⁻¹
//! Σ_{k≤N} γ̃^k`, for which iterating the localized drift gives
//! `QV ≤ γ_Q V + b(1−γ_Q)/(1−γ̃)`, so that `2K_Q/(1−γ_Q) ≤ 2b/(1−γ̃) < R`.

use serde::{Deserialize, Serialize};

use crate::certify::{
    check_level_bound, check_set, contraction_constants, extract_minorization, fit_k,
    optimize_constants_with, residual_nonnegative, row_minimum, verify_pointwise_contraction,
    Certification, ContractionCertificate, DriftCertificate, K_FLOOR, SLACK_TOL, STRICT_MARGIN,
};
use crate::chain::{Kernel, LyapunovWeight, Measure};
use crate::error::{param, HarrisError, Result};

/// Default factor applied to `2b/(1−γ̃)` when no `R` is given.
pub const DEFAULT_R_FACTOR: f64 = 1.05;
/// `ℓ` is searched up to this multiple of the number of states.
pub const ELL_CAP_FACTOR: usize = 10;

/// Localized drift and minorization certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltCertificate {
    pub s: Vec<usize>,
    pub gamma_tilde: f64,
    pub b: f64,
    pub alpha_tilde: f64,
    pub nu_tilde: Measure,
    /// `γ̃V(x) + b·1_S(x) − PV(x)`.
    pub slack: Vec<f64>,
    pub drift_ok: bool,
    pub valid: bool,
}

/// The constructive averaging depth and its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingCertificate {
    pub n_star: usize,
    pub ell: usize,
    pub alpha_hat: f64,
    pub nu: Measure,
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    /// `1 + log((2b/(1−γ̃)) ∫V dν̃) / log γ̃`. Advisory: may be negative.
    pub remark_bound: f64,
    /// `min_{V(x) ≤ γ̃^{−n−1}/2} Σ_{k≤n} γ̃^k P^{n−k}(x,S)` at `n = n_star`.
    pub visit_lower_bound: f64,
    /// Smallest `(Pν)(y)/ν(y)` on the support of `ν`; at least `alpha_hat`.
    pub p_nu_ratio: f64,
    /// `α_m` with `min_{x∈S} Σ_{k=m}^{m+ℓ} P^k(x,·) ≥ α_m ν`, `m = n_star + 1`.
    pub alpha_m: f64,
}

/// Result of certifying the averaged operator `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedCertification {
    pub averaging: AveragingCertificate,
    pub q: Kernel,
    /// Drift of `Q` at `γ_Q = (N+1)⁻¹ Σ γ̃^k` with fitted `K`.
    pub drift: DriftCertificate,
    /// `b(1−γ_Q)/(1−γ̃)`, the analytic bound on the fitted `K`.
    pub k_bound: f64,
    /// Contraction constants of `Q` at `(γ_Q, K_Q, R)` with `α₀ = α/2`.
    pub direct: ContractionCertificate,
    /// The better of `direct` and the grid-optimized certificate, verified.
    pub certification: Certification,
}

pub fn check_alt(
    kernel: &Kernel,
    v: &LyapunovWeight,
    s: &[usize],
    gamma_tilde: f64,
    b: f64,
) -> Result<AltCertificate> {
    v.check_len(kernel.n())?;
    v.require_at_least_one()?;
    if !(gamma_tilde > 0.0 && gamma_tilde < 1.0) {
        return Err(param(format!("gamma_tilde = {gamma_tilde} must lie in (0,1)")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(param(format!("b = {b} must be finite and >= 0")));
    }
    check_set(s, kernel.n())?;
    let mut s = s.to_vec();
    s.sort_unstable();
    s.dedup();

    let indicator = indicator(kernel.n(), &s);
    let pv = kernel.apply_to_function(v.values())?;
    let slack: Vec<f64> = v
        .values()
        .iter()
        .zip(&pv)
        .zip(&indicator)
        .map(|((&vx, &pvx), &ind)| gamma_tilde * vx + b * ind - pvx)
        .collect();
    let drift_ok = slack.iter().all(|&x| x >= -SLACK_TOL);

    let (alpha_tilde, nu_tilde) = row_minimum(kernel, &s).expect("S is nonempty")?;
    let residual = residual_nonnegative(kernel, &s, alpha_tilde, &nu_tilde);
    Ok(AltCertificate {
        s,
        gamma_tilde,
        b,
        alpha_tilde,
        nu_tilde,
        slack,
        drift_ok,
        valid: drift_ok && residual,
    })
}

/// The localized drift implies the plain one with `(γ, K) = (γ̃, b)`.
pub fn derive_plain_from_alt(cert: &AltCertificate) -> Result<(f64, f64)> {
    if !cert.valid {
        return Err(HarrisError::Cert("localized certificate is not valid".into()));
    }
    Ok((cert.gamma_tilde, cert.b))
}

/// `1.05 · 2b/(1−γ̃)`.
pub fn default_pipeline_r(cert: &AltCertificate) -> f64 {
    DEFAULT_R_FACTOR * 2.0 * cert.b / (1.0 - cert.gamma_tilde)
}

/// Smallest `n ≥ 0` with `γ̃^{−n−1}/2 ≥ R`.
pub fn drift_depth(gamma_tilde: f64, r: f64) -> usize {
    let reach = |n: usize| gamma_tilde.powf(-((n + 1) as f64)) / 2.0;
    let estimate = ((2.0 * r).ln() / (1.0 / gamma_tilde).ln()).ceil() - 1.0;
    let mut n = if estimate.is_finite() && estimate > 0.0 {
        estimate as usize
    } else {
        0
    };
    while n > 0 && reach(n - 1) >= r {
        n -= 1;
    }
    while reach(n) < r {
        n += 1;
    }
    n
}

/// `min_{x : V(x) ≤ γ̃^{−n−1}/2} Σ_{k=0}^{n} γ̃^k (P^{n−k} 1_S)(x)`, or `+∞`
/// if that level set is empty.
pub fn lower_bound_chain(kernel: &Kernel, v: &LyapunovWeight, cert: &AltCertificate, n: usize) -> Result<f64> {
    v.check_len(kernel.n())?;
    let mut f = indicator(kernel.n(), &cert.s);
    // f_j = P^j 1_S; the sum weights f_j by γ̃^{n−j}.
    let mut acc = vec![0.0; kernel.n()];
    for j in 0..=n {
        if j > 0 {
            f = kernel.apply_to_function(&f)?;
        }
        let w = cert.gamma_tilde.powi((n - j) as i32);
        acc.iter_mut().zip(&f).for_each(|(a, fx)| *a += w * fx);
    }
    let threshold = cert.gamma_tilde.powf(-((n + 1) as f64)) / 2.0;
    Ok(v.level_set(threshold)
        .into_iter()
        .map(|x| acc[x])
        .fold(f64::INFINITY, f64::min))
}

/// `ℓ`: the first `ℓ ≥ 1` with `(P^{ℓ−1} ν)(S) > 0`.
///
/// Fails with `Unreachable` when `S` is not charged within
/// `ELL_CAP_FACTOR · n` steps. For a valid localized certificate this cannot
/// happen (the drift forces returns to `S`); it is useful as a diagnosis
/// when a certificate is rejected.
pub fn reach_depth(kernel: &Kernel, nu: &Measure, s: &[usize]) -> Result<usize> {
    check_set(s, kernel.n())?;
    Ok(pushforwards_until_hit(kernel, nu, s)?.len())
}

/// `[ν, Pν, …, P^{ℓ−1}ν]`.
fn pushforwards_until_hit(kernel: &Kernel, nu: &Measure, s: &[usize]) -> Result<Vec<Vec<f64>>> {
    if nu.len() != kernel.n() {
        return Err(HarrisError::Dimension {
            expected: kernel.n(),
            actual: nu.len(),
        });
    }
    let cap = ELL_CAP_FACTOR * kernel.n();
    let mut iterates = vec![nu.weights().to_vec()];
    loop {
        let last = iterates.last().expect("nonempty");
        if last.iter().enumerate().any(|(x, &w)| w > 0.0 && s.contains(&x)) {
            return Ok(iterates);
        }
        if iterates.len() >= cap {
            return Err(HarrisError::Unreachable { cap });
        }
        let next = kernel.push_forward(last)?;
        iterates.push(next);
    }
}

/// Constructs `N`, `ν` and `α̂` following the averaging argument.
pub fn compute_averaging_n(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &AltCertificate,
    r: f64,
) -> Result<AveragingCertificate> {
    if !cert.valid {
        return Err(HarrisError::Cert("localized certificate is not valid".into()));
    }
    v.check_len(kernel.n())?;
    let gt = cert.gamma_tilde;
    let bound = 2.0 * cert.b / (1.0 - gt);
    if !(r.is_finite() && r >= (1.0 + STRICT_MARGIN) * bound && r > 0.0) {
        return Err(HarrisError::RTooSmall { r, bound });
    }
    let n_star = drift_depth(gt, r);

    let iterates = pushforwards_until_hit(kernel, &cert.nu_tilde, &cert.s)?;
    let ell = iterates.len();
    // iterates = [ν̃, Pν̃, …, P^{ℓ−1}ν̃]
    let p_ell = kernel.push_forward(&iterates[ell - 1])?;
    let nu_t = cert.nu_tilde.weights();
    let alpha_hat = support_ratio(&p_ell, nu_t);
    if alpha_hat.is_nan() || alpha_hat <= 0.0 {
        return Err(HarrisError::SupportMismatch);
    }

    let mut nu_w = vec![0.0; kernel.n()];
    for it in &iterates {
        nu_w.iter_mut().zip(it).for_each(|(a, w)| *a += w);
    }
    let nu = Measure::from_unnormalized(nu_w)?;
    let p_nu_ratio = support_ratio(&kernel.push_forward(nu.weights())?, nu.weights());

    let m = n_star + 1;
    let alpha_m = cert
        .s
        .iter()
        .map(|&x| -> Result<f64> {
            let mut mu = Measure::dirac(kernel.n(), x)?.weights().to_vec();
            let mut window = vec![0.0; kernel.n()];
            for k in 1..=(m + ell) {
                mu = kernel.push_forward(&mu)?;
                if k >= m {
                    window.iter_mut().zip(&mu).for_each(|(a, p)| *a += p);
                }
            }
            Ok(support_ratio(&window, nu.weights()))
        })
        .try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r)))?;

    let nu_tilde_v = cert.nu_tilde.integrate(v.values())?;
    let remark_bound = 1.0 + (bound * nu_tilde_v).ln() / gt.ln();

    Ok(AveragingCertificate {
        n_star,
        ell,
        alpha_hat,
        nu,
        big_n: n_star + 1 + ell,
        r,
        remark_bound,
        visit_lower_bound: lower_bound_chain(kernel, v, cert, n_star)?,
        p_nu_ratio,
        alpha_m,
    })
}

/// Certifies `Q = cesaro_average(P, N)` for the constructive `N`.
pub fn certify_averaged(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &AltCertificate,
    r: f64,
) -> Result<AveragedCertification> {
    let averaging = compute_averaging_n(kernel, v, cert, r)?;
    let big_n = averaging.big_n;
    let (q, drift, k_bound, direct, certification) = certify_cesaro(kernel, v, cert, r, big_n)?;
    Ok(AveragedCertification {
        averaging,
        q,
        drift,
        k_bound,
        direct,
        certification,
    })
}

type CesaroParts = (Kernel, DriftCertificate, f64, ContractionCertificate, Certification);

/// Plain drift, minorization and contraction of the `N`-step Cesàro average.
pub fn certify_cesaro(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &AltCertificate,
    r: f64,
    big_n: usize,
) -> Result<CesaroParts> {
    let q = kernel.cesaro_average(big_n);
    let minorization = extract_minorization(&q, v, r)?;

    let gt = cert.gamma_tilde;
    let gamma_q = (0..=big_n).map(|k| gt.powi(k as i32)).sum::<f64>() / (big_n + 1) as f64;
    let k_bound = cert.b * (1.0 - gamma_q) / (1.0 - gt);
    let fitted = fit_k(&q, v, gamma_q)?;
    let k_q = fitted.max(K_FLOOR);
    let drift = crate::certify::check_drift(&q, v, gamma_q, k_q)?;
    if !drift.valid {
        return Err(HarrisError::Cert(format!(
            "averaged drift fails at gamma_Q = {gamma_q}, K = {k_q}"
        )));
    }
    check_level_bound(gamma_q, k_q, r)?;
    let mut direct = contraction_constants(gamma_q, k_q, minorization.alpha, r, 0.5 * minorization.alpha)?;
    direct.k_clamped = fitted < K_FLOOR;

    let chosen = match optimize_constants_with(&q, v, &[r]) {
        Ok(opt) if opt.alpha_bar < direct.alpha_bar => opt,
        Ok(_) | Err(HarrisError::NoFeasiblePoint) => direct.clone(),
        Err(e) => return Err(e),
    };
    let verification = verify_pointwise_contraction(&q, v, &chosen)?;
    let certification = Certification {
        drift: crate::certify::check_drift(&q, v, chosen.gamma, chosen.k)?,
        minorization: extract_minorization(&q, v, chosen.r)?,
        contraction: chosen.with_verification(&verification),
        verification,
    };
    Ok((q, drift, k_bound, direct, certification))
}

fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut ind = vec![0.0; n];
    set.iter().for_each(|&x| ind[x] = 1.0);
    ind
}

/// `min_{y : den(y) > 0} num(y) / den(y)`.
fn support_ratio(num: &[f64], den: &[f64]) -> f64 {
    num.iter()
        .zip(den)
        .filter(|(_, &d)| d > 0.0)
        .map(|(n, d)| n / d)
        .fold(f64::INFINITY, f64::min)
}

//! Invariant measures: certified fixed-point iteration and a direct solver.
//!
//! With a contraction certificate `ρ_β(Pμ₁, Pμ₂) ≤ ᾱ ρ_β(μ₁, μ₂)`, the orbit
//! `μ_{n+1} = Pμ_n` satisfies `ρ_β(μ_{n+1}, μ_n) ≤ ᾱ^n ρ_β(μ₁, μ₀)`, so it is
//! Cauchy and the geometric tail gives the a-priori bound
//!
//! ```text
//! ρ_β(μ_n, μ⋆) ≤ ᾱ^n ρ_β(μ₁, μ₀) / (1 − ᾱ).
//! ```
//!
//! # Decay constant
//!
//! For the weighted norm `‖φ‖ = max_x |φ(x)|/(1 + V(x))` and `ψ = φ − μ⋆(φ)`:
//!
//! ```text
//! |P^nφ(x) − μ⋆(φ)| ≤ ⫴ψ⫴_β ρ_β(P^nδ_x, μ⋆) ≤ ‖ψ‖_β ᾱ^n ρ_β(δ_x, μ⋆)
//! ρ_β(δ_x, μ⋆) ≤ 2 + βV(x) + βμ⋆(V),   ‖ψ‖_β ≤ max(1, 1/β) ‖ψ‖
//! ```
//!
//! so `‖P^nφ − μ⋆(φ)‖ ≤ C ᾱ^n ‖φ − μ⋆(φ)‖` with
//! `C = max(1, 1/β) · max_x (2 + βV(x) + βμ⋆(V)) / (1 + V(x))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certify::{ContractionCertificate, CONTRACTION_TOL};
use crate::chain::{Kernel, LyapunovWeight, Measure};
use crate::error::{param, HarrisError, Result};
use crate::metrics::{rho_beta, BetaScale};

/// Singular values below this count towards the fixed-point space.
pub const NULLSPACE_TOL: f64 = 1e-8;
/// Upper limit on the number of iterations a run may need.
pub const MAX_ITERATIONS: usize = 10_000_000;

/// Outcome of [`invariant_measure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRun {
    /// Index `n` of the returned iterate `μ_n`.
    pub iterates: usize,
    /// `ρ_β(μ_{k+1}, μ_k)` for `k = 0, …, n−1`.
    pub distances: Vec<f64>,
    /// A-priori bound on `ρ_β(μ_k, μ⋆)` for `k = 1, …, n`.
    pub bounds: Vec<f64>,
    pub certified_error: f64,
    pub mu_star: Measure,
    /// `μ⋆(V)`.
    pub mu_star_v: f64,
    pub alpha_bar: f64,
    pub beta: f64,
}

/// Iterates `μ ↦ Pμ` until the certified error drops to `tol`.
pub fn invariant_measure(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &ContractionCertificate,
    tol: f64,
    mu0: &Measure,
) -> Result<ConvergenceRun> {
    invariant_measure_observed(kernel, v, cert, tol, mu0, |_, _, _| {})
}

/// [`invariant_measure`], calling `observe(n, μ_n, bound_n)` after every step.
pub fn invariant_measure_observed<F>(
    kernel: &Kernel,
    v: &LyapunovWeight,
    cert: &ContractionCertificate,
    tol: f64,
    mu0: &Measure,
    mut observe: F,
) -> Result<ConvergenceRun>
where
    F: FnMut(usize, &Measure, f64),
{
    if !cert.empirically_verified {
        return Err(HarrisError::Cert("contraction certificate has not been verified".into()));
    }
    if !(cert.alpha_bar > 0.0 && cert.alpha_bar < 1.0) {
        return Err(HarrisError::Cert(format!("alpha_bar = {} is not in (0,1)", cert.alpha_bar)));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(param(format!("tol = {tol} must be finite and > 0")));
    }
    v.check_len(kernel.n())?;
    if mu0.len() != kernel.n() {
        return Err(HarrisError::Dimension {
            expected: kernel.n(),
            actual: mu0.len(),
        });
    }
    let rate = cert.alpha_bar;
    let beta = cert.beta_scale();

    let mut current = kernel.apply_to_measure(mu0)?;
    let d0 = rho_beta(&current, mu0, v, beta)?;
    let tail = |n: usize| rate.powi(n as i32) * d0 / (1.0 - rate);
    if d0 > 0.0 {
        let needed = ((tol * (1.0 - rate) / d0).ln() / rate.ln()).ceil();
        if needed > MAX_ITERATIONS as f64 {
            return Err(param(format!(
                "tol = {tol} needs about {needed} iterations at rate {rate}"
            )));
        }
    }

    let mut distances = vec![d0];
    let mut bounds = vec![tail(1)];
    let mut n = 1;
    observe(n, &current, bounds[0]);
    while tail(n) > tol {
        let next = kernel.apply_to_measure(&current)?;
        let d = rho_beta(&next, &current, v, beta)?;
        let previous = *distances.last().expect("nonempty");
        if d > rate * previous + CONTRACTION_TOL {
            return Err(HarrisError::ContractViolation {
                step: n,
                previous,
                current: d,
                rate,
            });
        }
        distances.push(d);
        current = next;
        n += 1;
        bounds.push(tail(n));
        observe(n, &current, tail(n));
    }

    let mu_star_v = current.integrate(v.values())?;
    Ok(ConvergenceRun {
        iterates: n,
        distances,
        certified_error: tail(n),
        bounds,
        mu_star: current,
        mu_star_v,
        alpha_bar: rate,
        beta: beta.get(),
    })
}

/// Solves `πP = π`, `Σπ = 1` directly.
///
/// Fails with `NonUniqueStationary` when `P^T − I` has more than one
/// singular value below [`NULLSPACE_TOL`].
pub fn exact_invariant(kernel: &Kernel) -> Result<Measure> {
    let n = kernel.n();
    let p = DMatrix::from_row_slice(n, n, kernel.to_rows().concat().as_slice());
    let a = p.transpose() - DMatrix::<f64>::identity(n, n);

    let sv = a.clone().singular_values();
    let dim = sv.iter().filter(|&&s| s <= NULLSPACE_TOL).count();
    if dim > 1 {
        return Err(HarrisError::NonUniqueStationary { dim });
    }

    let mut system = a;
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = system.clone().lu();
    let mut pi = lu
        .solve(&rhs)
        .ok_or(HarrisError::NonUniqueStationary { dim: 2 })?;
    // One step of iterative refinement.
    let residual = &system * &pi - &rhs;
    if let Some(delta) = lu.solve(&residual) {
        pi -= delta;
    }

    let weights: Vec<f64> = pi
        .iter()
        .map(|&x| if x < 0.0 && x > -1e-10 { 0.0 } else { x })
        .collect();
    Measure::from_unnormalized(weights)
}

/// The constant `C` of the weighted-norm decay estimate (see module docs).
pub fn decay_constant(
    cert: &ContractionCertificate,
    v: &LyapunovWeight,
    mu_star: &Measure,
) -> Result<f64> {
    let beta = cert.beta_scale().get();
    let mean_v = mu_star.integrate(v.values())?;
    let worst = v
        .values()
        .iter()
        .map(|&vx| (2.0 + beta * vx + beta * mean_v) / (1.0 + vx))
        .fold(0.0, f64::max);
    Ok(1.0_f64.max(1.0 / beta) * worst)
}

/// `[(n, ρ_β(P^n μ₀, μ⋆)) for n = 0..=n_max]` against [`exact_invariant`].
pub fn convergence_curve(
    kernel: &Kernel,
    v: &LyapunovWeight,
    beta: BetaScale,
    mu0: &Measure,
    n_max: usize,
) -> Result<Vec<(usize, f64)>> {
    let mu_star = exact_invariant(kernel)?;
    let mut mu = mu0.clone();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            mu = kernel.apply_to_measure(&mu)?;
        }
        out.push((n, rho_beta(&mu, &mu_star, v, beta)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::optimize_constants;

    fn flip() -> Kernel {
        Kernel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn v12() -> LyapunovWeight {
        LyapunovWeight::new(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn exact_solutions() {
        let q = flip().cesaro_average(6);
        let pi = exact_invariant(&q).unwrap();
        assert!((pi.weights()[0] - 0.5).abs() < 1e-14);
        let p = Kernel::new(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        let pi = exact_invariant(&p).unwrap();
        assert!((pi.weights()[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((pi.weights()[1] - 2.0 / 3.0).abs() < 1e-14);
        let back = p.apply_to_measure(&pi).unwrap();
        assert!(back.weights().iter().zip(pi.weights()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn identity_has_no_unique_stationary_law() {
        assert_eq!(
            exact_invariant(&Kernel::identity(3)).unwrap_err(),
            HarrisError::NonUniqueStationary { dim: 3 }
        );
    }

    #[test]
    fn averaged_flip_converges_to_uniform() {
        let q = flip().cesaro_average(6);
        let cert = optimize_constants(&q, &v12()).unwrap();
        for start in [Measure::dirac(2, 0).unwrap(), Measure::new(vec![0.1, 0.9]).unwrap()] {
            let run = invariant_measure(&q, &v12(), &cert, 1e-12, &start).unwrap();
            assert!(run.certified_error <= 1e-12);
            assert!((run.mu_star.weights()[0] - 0.5).abs() < 1e-12);
            for w in run.distances.windows(2) {
                assert!(w[1] <= cert.alpha_bar * w[0] + 1e-10);
            }
        }
    }

    #[test]
    fn invariant_start_stops_after_one_step() {
        let q = flip().cesaro_average(6);
        let cert = optimize_constants(&q, &v12()).unwrap();
        let run = invariant_measure(&q, &v12(), &cert, 1e-10, &Measure::uniform(2).unwrap()).unwrap();
        assert_eq!(run.iterates, 1);
        assert!(run.certified_error <= 1e-10);
    }

    #[test]
    fn reflected_walk_matches_direct_solution() {
        use crate::alt::{certify_averaged, check_alt, default_pipeline_r};
        use crate::certify::optimize_constants;
        use crate::examples::reflected_random_walk;

        let ex = reflected_random_walk(5, 0.25).unwrap();
        // Minorization needs C ⊆ {0, 1}, which the one-step level-set
        // condition cannot reach; the averaged kernel has the same μ⋆.
        assert_eq!(optimize_constants(&ex.kernel, &ex.v), Err(HarrisError::NoFeasiblePoint));
        let v = LyapunovWeight::new((0..5).map(|x| 2f64.powi(x)).collect()).unwrap();
        let alt = check_alt(&ex.kernel, &v, &[0, 1], 0.875, 0.375).unwrap();
        assert!(alt.valid);
        let q = certify_averaged(&ex.kernel, &v, &alt, default_pipeline_r(&alt)).unwrap();
        let cert = &q.certification.contraction;
        let exact = exact_invariant(&ex.kernel).unwrap();
        for start in [Measure::dirac(5, 4).unwrap(), Measure::uniform(5).unwrap()] {
            let run = invariant_measure(&q.q, &v, cert, 1e-10, &start).unwrap();
            assert!(rho_beta(&run.mu_star, &exact, &v, cert.beta_scale()).unwrap() <= 1e-10);
        }
        // Detailed balance: π(x+1)/π(x) = p/(1−p) = 1/3.
        for x in 0..4 {
            assert!((exact.weights()[x + 1] / exact.weights()[x] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solver_input_checks() {
        let q = flip().cesaro_average(6);
        let mut cert = optimize_constants(&q, &v12()).unwrap();
        let mu = Measure::uniform(2).unwrap();
        assert!(matches!(invariant_measure(&q, &v12(), &cert, 0.0, &mu), Err(HarrisError::Param(_))));
        cert.empirically_verified = false;
        assert!(matches!(invariant_measure(&q, &v12(), &cert, 1e-6, &mu), Err(HarrisError::Cert(_))));
    }

    #[test]
    fn bogus_rate_is_caught() {
        let q = flip().cesaro_average(6);
        let mut cert = optimize_constants(&q, &v12()).unwrap();
        // The true one-step factor on differences is 1/7.
        cert.alpha_bar = 0.05;
        let err = invariant_measure(&q, &v12(), &cert, 1e-12, &Measure::dirac(2, 0).unwrap()).unwrap_err();
        assert!(matches!(err, HarrisError::ContractViolation { .. }));
    }

    #[test]
    fn decay_constant_examples() {
        let mut cert = crate::certify::contraction_constants(0.5, 1.0, 0.5, 5.0, 0.25).unwrap();
        let zero = LyapunovWeight::new(vec![0.0, 0.0]).unwrap();
        cert.beta = 1.0;
        assert_eq!(decay_constant(&cert, &zero, &Measure::dirac(2, 1).unwrap()).unwrap(), 2.0);
        cert.beta = 0.25;
        let c = decay_constant(&cert, &v12(), &Measure::uniform(2).unwrap()).unwrap();
        assert!((c - 4.0 * 1.3125).abs() < 1e-14);
    }

    #[test]
    fn curves() {
        let q = flip().cesaro_average(6);
        let beta = BetaScale::new(0.5).unwrap();
        let flat = convergence_curve(&q, &v12(), beta, &Measure::uniform(2).unwrap(), 5).unwrap();
        assert_eq!(flat.len(), 6);
        assert!(flat.iter().all(|&(_, d)| d.abs() < 1e-14));

        let dec = convergence_curve(&q, &v12(), beta, &Measure::dirac(2, 0).unwrap(), 6).unwrap();
        for w in dec.windows(2) {
            assert!(w[1].1 < w[0].1);
            assert!((w[1].1 / w[0].1 - 1.0 / 7.0).abs() < 1e-6);
        }

        let per = convergence_curve(&flip(), &v12(), beta, &Measure::dirac(2, 0).unwrap(), 6).unwrap();
        assert!(per.iter().all(|&(_, d)| (d - per[0].1).abs() < 1e-14));
    }
}

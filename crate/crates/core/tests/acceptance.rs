//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p harris-core --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

mod common;

use std::time::{Duration, Instant};

use harris_core::alt::{certify_averaged, check_alt, compute_averaging_n, drift_depth, lower_bound_chain};
use harris_core::certify::{
    contraction_constants, fit_k, optimize_constants, random_measure, verify_pointwise_contraction,
    K_FLOOR,
};
use harris_core::examples::{self, discretized_ar1, flip_chain};
use harris_core::metrics::{
    dbeta_point, lipschitz_seminorm, optimal_shift, rho_beta, rho_beta_dual, weighted_sup_norm,
};
use harris_core::solve::{decay_constant, exact_invariant, invariant_measure_observed};
use harris_core::{BetaScale, HarrisError, Kernel, LyapunovWeight, Measure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{drifting_chain, grid_min_shifted_norm, sup_norm};

type Outcome = Result<String, String>;

fn report(id: &str, title: &str, outcome: Outcome) {
    match outcome {
        Ok(detail) => println!("[PASS] {id} {title}: {detail}"),
        Err(why) => {
            println!("[FAIL] {id} {title}: {why}");
            panic!("{id} failed: {why}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

#[test]
fn ac1_flip_chain_counterexample() {
    let outcome = (|| -> Outcome {
        let start = Instant::now();
        let ex = flip_chain();
        let cert = check_alt(&ex.kernel, &ex.v, &[0], 0.5, 1.5).map_err(|e| e.to_string())?;
        ensure(cert.valid, || "localized conditions rejected".into())?;
        ensure(cert.s == vec![0] && cert.gamma_tilde == 0.5 && cert.b == 1.5, || "constants altered".into())?;
        ensure(cert.alpha_tilde == 1.0, || format!("alpha_tilde = {}", cert.alpha_tilde))?;
        ensure(cert.nu_tilde.weights() == [0.0, 1.0], || "nu_tilde != delta_1".into())?;

        let mut eig: Vec<f64> = ex.kernel.spectrum().iter().map(|z| z.re).collect();
        eig.sort_by(f64::total_cmp);
        ensure(
            (eig[0] + 1.0).abs() <= 1e-12 && (eig[1] - 1.0).abs() <= 1e-12,
            || format!("spectrum {eig:?}"),
        )?;
        match optimize_constants(&ex.kernel, &ex.v) {
            Err(HarrisError::NoFeasiblePoint) => {}
            other => return Err(format!("expected NoFeasiblePoint, got {other:?}")),
        }
        within(start.elapsed(), Duration::from_secs(1))?;
        Ok(format!("spectrum {eig:?}, no feasible grid point, {:?}", start.elapsed()))
    })();
    report("AC1", "flip-chain counterexample", outcome);
}

#[test]
fn ac2_averaged_operator() {
    let outcome = (|| -> Outcome {
        let ex = flip_chain();
        let cert = check_alt(&ex.kernel, &ex.v, &[0], 0.5, 1.5).map_err(|e| e.to_string())?;
        let r = 1.05 * 2.0 * cert.b / (1.0 - cert.gamma_tilde);
        ensure((r - 6.3).abs() < 1e-12, || format!("R = {r}"))?;

        // n*: first n with 2^(n+1)/2 ≥ 6.3; ℓ: first ℓ with (P^{ℓ−1} δ₁)({0}) > 0.
        let n_star = (0..).find(|&n| 0.5f64.powi(-(n + 1)) / 2.0 >= r).unwrap() as usize;
        let mut mu = cert.nu_tilde.clone();
        let mut ell = 1;
        while mu.weights()[0] == 0.0 {
            mu = ex.kernel.apply_to_measure(&mu).unwrap();
            ell += 1;
        }
        let expected_n = n_star + 1 + ell;
        ensure(expected_n == 6, || format!("re-derived N = {expected_n}"))?;
        ensure(drift_depth(0.5, r) == n_star, || "drift depth mismatch".into())?;

        let avg = compute_averaging_n(&ex.kernel, &ex.v, &cert, r).map_err(|e| e.to_string())?;
        ensure(avg.big_n == expected_n, || format!("N = {}", avg.big_n))?;

        let out = certify_averaged(&ex.kernel, &ex.v, &cert, r).map_err(|e| e.to_string())?;
        let abar = out.certification.contraction.alpha_bar;
        ensure(abar < 1.0, || format!("alpha_bar = {abar}"))?;
        ensure(out.certification.verification.passed, || "Q contraction check failed".into())?;

        let lb = lower_bound_chain(&ex.kernel, &ex.v, &cert, avg.n_star).map_err(|e| e.to_string())?;
        ensure(lb >= 1.0 / (2.0 * cert.b) - 1e-10, || format!("lower bound {lb}"))?;
        Ok(format!("N = {}, alpha_bar = {abar:.6}, visit bound {lb:.4} >= {:.4}", avg.big_n, 1.0 / (2.0 * cert.b)))
    })();
    report("AC2", "averaged-operator theorem", outcome);
}

#[test]
fn ac3_contraction_constant_sweep() {
    let outcome = (|| -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..1000 {
            let gamma = rng.random_range(0.001..0.999);
            let k = rng.random_range(1e-3..20.0);
            let alpha = rng.random_range(1e-3..=1.0);
            let alpha0 = alpha * rng.random_range(1e-3..0.999);
            let r = 2.0 * k / (1.0 - gamma) * (1.0 + rng.random_range(1e-6..10.0));
            let c = contraction_constants(gamma, k, alpha, r, alpha0).map_err(|e| format!("point {i}: {e}"))?;

            let beta = alpha0 / k;
            let gamma0 = gamma + 2.0 * k / r;
            let gamma1 = (2.0 + beta * r * gamma0) / (2.0 + beta * r);
            let gamma2 = (1.0 - (alpha - alpha0)).max(gamma);
            let alpha_bar = gamma1.max(gamma2);
            for (name, got, want) in [
                ("beta", c.beta, beta),
                ("gamma0", c.gamma0, gamma0),
                ("gamma1", c.gamma1, gamma1),
                ("gamma2", c.gamma2, gamma2),
                ("alpha_bar", c.alpha_bar, alpha_bar),
            ] {
                ensure((got - want).abs() <= 1e-14, || format!("point {i}: {name} {got} vs {want}"))?;
            }
            ensure(c.gamma0 < c.gamma1 && c.gamma1 < 1.0, || format!("point {i}: gamma1 = {}", c.gamma1))?;
            ensure(c.alpha_bar < 1.0, || format!("point {i}: alpha_bar = {}", c.alpha_bar))?;
        }
        Ok("1000 points".into())
    })();
    report("AC3", "contraction constants", outcome);
}

#[test]
fn ac4_contraction_on_random_chains() {
    let outcome = (|| -> Outcome {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut certified = 0;
        let mut attempts = 0;
        let mut worst = 0.0_f64;
        while certified < 50 {
            attempts += 1;
            ensure(attempts <= 500, || format!("only {certified} of {attempts} chains certified"))?;
            let (kernel, v) = drifting_chain(&mut rng, 20);
            let Ok(cert) = optimize_constants(&kernel, &v) else { continue };
            certified += 1;
            let beta = cert.beta_scale();
            let dirac = verify_pointwise_contraction(&kernel, &v, &cert).map_err(|e| e.to_string())?;
            ensure(dirac.dirac_pass, || format!("Dirac ratio {} > {}", dirac.max_dirac_ratio, cert.alpha_bar))?;
            for _ in 0..1000 {
                let m1 = Measure::new(random_measure(&mut rng, 20)).unwrap();
                let m2 = Measure::new(random_measure(&mut rng, 20)).unwrap();
                let before = rho_beta(&m1, &m2, &v, beta).unwrap();
                let after = rho_beta(
                    &kernel.apply_to_measure(&m1).unwrap(),
                    &kernel.apply_to_measure(&m2).unwrap(),
                    &v,
                    beta,
                )
                .unwrap();
                ensure(after <= cert.alpha_bar * before + 1e-10, || {
                    format!("{after} > {} * {before}", cert.alpha_bar)
                })?;
                if before > 0.0 {
                    worst = worst.max(after / before / cert.alpha_bar);
                }
            }
        }
        within(start.elapsed(), Duration::from_secs(60))?;
        Ok(format!(
            "50 chains ({attempts} drawn), worst ratio/alpha_bar {worst:.4}, {:?}",
            start.elapsed()
        ))
    })();
    report("AC4", "contraction on random chains", outcome);
}

#[test]
fn ac5_optimal_shift() {
    let outcome = (|| -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut max_gap = 0.0_f64;
        for i in 0..500 {
            let v = LyapunovWeight::new((0..10).map(|_| rng.random_range(0.0..5.0)).collect()).unwrap();
            let beta = BetaScale::new(rng.random_range(0.05..5.0)).unwrap();
            let phi: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
            let semi = lipschitz_seminorm(&phi, &v, beta).unwrap();
            let grid = grid_min_shifted_norm(&phi, &v, beta);
            max_gap = max_gap.max((semi - grid).abs());
            ensure((semi - grid).abs() <= 1e-8, || format!("triple {i}: {semi} vs grid {grid}"))?;
            let c = optimal_shift(&phi, &v, beta).unwrap();
            let shifted: Vec<f64> = phi.iter().map(|x| x + c).collect();
            let norm = weighted_sup_norm(&shifted, &v, beta).unwrap();
            ensure(norm <= semi + 1e-12, || format!("triple {i}: shifted norm {norm} > {semi}"))?;
        }
        Ok(format!("500 triples, max |seminorm - grid min| = {max_gap:.2e}"))
    })();
    report("AC5", "optimal shift identity", outcome);
}

#[test]
fn ac6_duality() {
    let outcome = (|| -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for i in 0..500 {
            let n = rng.random_range(1..=12);
            let v = LyapunovWeight::new((0..n).map(|_| rng.random_range(0.0..10.0)).collect()).unwrap();
            let beta = BetaScale::new(rng.random_range(0.01..10.0)).unwrap();
            let m1 = Measure::new(random_measure(&mut rng, n)).unwrap();
            let m2 = Measure::new(random_measure(&mut rng, n)).unwrap();
            let p = rho_beta(&m1, &m2, &v, beta).unwrap();
            let d = rho_beta_dual(&m1, &m2, &v, beta).unwrap();
            ensure((p - d).abs() <= 1e-12, || format!("pair {i}: {p} vs {d}"))?;
        }
        let mut pairs = 0;
        for name in examples::NAMES {
            let ex = examples::by_name(name).unwrap();
            let n = ex.kernel.n();
            for beta in [0.1, 1.0, 3.0] {
                let beta = BetaScale::new(beta).unwrap();
                for x in 0..n {
                    for y in 0..n {
                        if x == y {
                            continue;
                        }
                        let rho = rho_beta(&Measure::dirac(n, x).unwrap(), &Measure::dirac(n, y).unwrap(), &ex.v, beta).unwrap();
                        let d = dbeta_point(x, y, &ex.v, beta).unwrap();
                        ensure(rho == d, || format!("{name} ({x},{y}): {rho} != {d}"))?;
                        pairs += 1;
                    }
                }
            }
        }
        Ok(format!("500 random pairs, {pairs} Dirac pairs exact"))
    })();
    report("AC6", "duality identity", outcome);
}

#[test]
fn ac7_certified_solver_on_ar1() {
    let outcome = (|| -> Outcome {
        let start = Instant::now();
        let ex = discretized_ar1(0.5, 1.0, -6.0, 6.0, 61).map_err(|e| e.to_string())?;
        let (kernel, v) = (&ex.kernel, &ex.v);
        let n = kernel.n();
        let cert = optimize_constants(kernel, v).map_err(|e| e.to_string())?;
        ensure(cert.empirically_verified, || "certificate failed verification".into())?;
        let beta = cert.beta_scale();
        let exact = exact_invariant(kernel).map_err(|e| e.to_string())?;
        let tol = 1e-10;

        let mut worst_excess = f64::NEG_INFINITY;
        let run_a = invariant_measure_observed(kernel, v, &cert, tol, &Measure::dirac(n, 0).unwrap(), |_, mu, bound| {
            let actual = rho_beta(mu, &exact, v, beta).unwrap();
            worst_excess = worst_excess.max(actual - bound);
        })
        .map_err(|e| e.to_string())?;
        ensure(worst_excess <= 1e-9, || format!("true error exceeds bound by {worst_excess}"))?;

        let run_b = invariant_measure_observed(kernel, v, &cert, tol, &Measure::uniform(n).unwrap(), |_, _, _| {})
            .map_err(|e| e.to_string())?;
        let gap = rho_beta(&run_a.mu_star, &run_b.mu_star, v, beta).unwrap();
        ensure(gap <= 2.0 * tol, || format!("starts disagree by {gap}"))?;

        let drift_bound = cert.k / (1.0 - cert.gamma);
        ensure(run_a.mu_star_v <= drift_bound + 1e-6, || {
            format!("mu*(V) = {} > K/(1-gamma) = {drift_bound}", run_a.mu_star_v)
        })?;

        let c = decay_constant(&cert, v, &exact).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst_decay = 0.0_f64;
        for _ in 0..100 {
            let phi: Vec<f64> = v
                .values()
                .iter()
                .map(|&vx| rng.random_range(-1.0..1.0) * (1.0 + vx).powf(rng.random_range(0.0..1.0)))
                .collect();
            let mean = exact.integrate(&phi).unwrap();
            let centered: Vec<f64> = phi.iter().map(|f| f - mean).collect();
            let base = sup_norm(&centered, v);
            let mut current = phi.clone();
            for step in 0..=50 {
                if step > 0 {
                    current = kernel.apply_to_function(&current).unwrap();
                }
                let dev: Vec<f64> = current.iter().map(|f| f - mean).collect();
                let lhs = sup_norm(&dev, v);
                let rhs = c * cert.alpha_bar.powi(step) * base;
                ensure(lhs <= rhs + 1e-9, || format!("step {step}: {lhs} > {rhs}"))?;
                if rhs > 0.0 {
                    worst_decay = worst_decay.max(lhs / rhs);
                }
            }
        }
        within(start.elapsed(), Duration::from_secs(30))?;
        Ok(format!(
            "alpha_bar = {:.6}, {} iterations, certified error {:.2e}, C = {c:.3}, worst decay ratio {worst_decay:.3}, {:?}",
            cert.alpha_bar,
            run_a.iterates,
            run_a.certified_error,
            start.elapsed()
        ))
    })();
    report("AC7", "certified solver on AR(1)", outcome);
}

#[test]
fn ac8_degenerate_inputs() {
    let outcome = (|| -> Outcome {
        let id = Kernel::identity(3);
        match exact_invariant(&id) {
            Err(HarrisError::NonUniqueStationary { .. }) => {}
            other => return Err(format!("exact_invariant(I): {other:?}")),
        }
        let v = LyapunovWeight::new(vec![0.0, 1.0, 2.0]).unwrap();
        match optimize_constants(&id, &v) {
            Err(HarrisError::NoFeasiblePoint) => {}
            other => return Err(format!("optimize_constants(I): {other:?}")),
        }

        let to_zero = Kernel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let v01 = LyapunovWeight::new(vec![0.0, 1.0]).unwrap();
        ensure(fit_k(&to_zero, &v01, 0.5).unwrap() == 0.0, || "fitted K not zero".into())?;
        let cert = optimize_constants(&to_zero, &v01).map_err(|e| e.to_string())?;
        ensure(cert.k_clamped && cert.k == K_FLOOR, || format!("K = {}, flagged = {}", cert.k, cert.k_clamped))?;

        let (gamma, k) = (0.5, 1.0);
        match contraction_constants(gamma, k, 0.5, 2.0 * k / (1.0 - gamma), 0.25) {
            Err(HarrisError::RTooSmall { .. }) => {}
            other => return Err(format!("boundary R: {other:?}")),
        }
        Ok("NonUniqueStationary, NoFeasiblePoint, K=0 flagged, RTooSmall".into())
    })();
    report("AC8", "degenerate handling", outcome);
}

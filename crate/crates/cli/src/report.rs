//! The serialized outcome of one CLI run.

use std::fmt::Write as _;

use harris_core::alt::{AltCertificate, AveragedCertification};
use harris_core::certify::Certification;
use harris_core::solve::ConvergenceRun;
use serde::{Deserialize, Serialize};

use crate::input::Loaded;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarrisReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub input: InputDigest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certification: Option<Certification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt: Option<AltCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged: Option<AveragedCertification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSummary>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub source: String,
    pub n: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub row_sum_max_deviation: f64,
}

/// Quantities reported for information only; they certify nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    pub remark_bound: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub tol: f64,
    pub iterations: usize,
    pub certified_error: f64,
    pub mu_star: Vec<f64>,
    pub mu_star_v: f64,
    pub alpha_bar: f64,
    pub beta: f64,
}

impl ConvergenceSummary {
    pub fn new(run: &ConvergenceRun, tol: f64) -> Self {
        Self {
            tol,
            iterations: run.iterates,
            certified_error: run.certified_error,
            mu_star: run.mu_star.weights().to_vec(),
            mu_star_v: run.mu_star_v,
            alpha_bar: run.alpha_bar,
            beta: run.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub stage: String,
    pub passed: bool,
}

impl HarrisReport {
    pub fn new(command: &str, input: &Loaded) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input: InputDigest {
                source: input.source.clone(),
                n: input.kernel.n(),
                v_min: input.v.min(),
                v_max: input.v.max(),
                row_sum_max_deviation: input.row_deviation,
            },
            certification: None,
            alt: None,
            averaged: None,
            advisory: None,
            convergence: None,
            verdicts: Vec::new(),
        }
    }

    pub fn verdict(&mut self, stage: &str, passed: bool) {
        self.verdicts.push(Verdict {
            stage: stage.to_string(),
            passed,
        });
    }

    /// Records the per-stage verdicts of a plain certification.
    pub fn record_certification(&mut self, prefix: &str, cert: Certification) {
        self.verdict(&format!("{prefix}drift"), cert.drift.valid);
        self.verdict(
            &format!("{prefix}minorization"),
            cert.minorization.residual_ok && cert.minorization.satisfies_level_bound(&cert.drift),
        );
        self.verdict(
            &format!("{prefix}contraction"),
            cert.contraction.alpha_bar < 1.0 && cert.contraction.empirically_verified,
        );
        if prefix.is_empty() {
            self.certification = Some(cert);
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        let i = &self.input;
        let _ = writeln!(out, "harris {} — {}", self.tool_version, self.command);
        let _ = writeln!(
            out,
            "input: {} (n = {}, V in [{}, {}], row-sum deviation {:.3e})",
            i.source, i.n, i.v_min, i.v_max, i.row_sum_max_deviation
        );
        if let Some(c) = &self.certification {
            contraction_lines(&mut out, "", c);
        }
        if let Some(a) = &self.alt {
            let _ = writeln!(
                out,
                "localized: S = {:?}, gamma_tilde = {}, b = {}, alpha_tilde = {:.6}, valid = {}",
                a.s, a.gamma_tilde, a.b, a.alpha_tilde, a.valid
            );
        }
        if let Some(q) = &self.averaged {
            let av = &q.averaging;
            let _ = writeln!(
                out,
                "averaging: N = {} (n* = {}, ell = {}), R = {}, alpha_hat = {:.6}",
                av.big_n, av.n_star, av.ell, av.r, av.alpha_hat
            );
            contraction_lines(&mut out, "Q ", &q.certification);
        }
        if let Some(a) = &self.advisory {
            let _ = writeln!(out, "advisory: remark_bound = {:.6} ({})", a.remark_bound, a.note);
        }
        if let Some(c) = &self.convergence {
            let _ = writeln!(
                out,
                "invariant: {} iterations, certified error {:.3e} (tol {:.1e}), mu*(V) = {:.6}",
                c.iterations, c.certified_error, c.tol, c.mu_star_v
            );
            let mu: Vec<String> = c.mu_star.iter().map(|p| format!("{p:.10}")).collect();
            let _ = writeln!(out, "mu* = [{}]", mu.join(", "));
        }
        for v in &self.verdicts {
            let _ = writeln!(out, "{:<5} {}", if v.passed { "PASS" } else { "FAIL" }, v.stage);
        }
        out
    }
}

fn contraction_lines(out: &mut String, prefix: &str, c: &Certification) {
    let k = &c.contraction;
    let _ = writeln!(
        out,
        "{prefix}drift: gamma = {}, K = {:.6}{}; minorization: R = {:.6}, alpha = {:.6}, |C| = {}",
        k.gamma,
        k.k,
        if k.k_clamped { " (clamped)" } else { "" },
        k.r,
        k.alpha,
        c.minorization.level_set.len()
    );
    let _ = writeln!(
        out,
        "{prefix}contraction: alpha_bar = {:.6} (gamma1 = {:.6}, gamma2 = {:.6}), beta = {:.6}, verified = {}",
        k.alpha_bar, k.gamma1, k.gamma2, k.beta, k.empirically_verified
    );
}

//! Certified geometric ergodicity for finite Markov kernels.
//!
//! Given a row-stochastic kernel `P` and a Lyapunov weight `V`, this crate
//! checks a drift condition `PV ≤ γV + K` and a minorization condition on a
//! level set of `V`, turns the constants into an explicit contraction rate
//! `ᾱ < 1` for the weighted total-variation distance
//! `ρ_β(μ₁,μ₂) = Σ (1 + βV)|μ₁ − μ₂|`, and uses it to compute the invariant
//! measure with a certified error.
//!
//! ```
//! use harris_core::{certify, examples, solve, Measure};
//!
//! let ex = examples::averaged_flip_chain();
//! let cert = certify::optimize_constants(&ex.kernel, &ex.v)?;
//! assert!(cert.alpha_bar < 1.0);
//!
//! let start = Measure::dirac(2, 0)?;
//! let run = solve::invariant_measure(&ex.kernel, &ex.v, &cert, 1e-10, &start)?;
//! assert!((run.mu_star.weights()[0] - 0.5).abs() < 1e-10);
//! # Ok::<(), harris_core::HarrisError>(())
//! ```
//!
//! Chains that only satisfy drift towards a set `S` with minorization on
//! `S` (for instance periodic ones) are handled through a Cesàro average of
//! the kernel; see [`alt`].
//!
//! The guide in `book/` walks through each step with runnable snippets.

pub mod alt;
pub mod certify;
pub mod chain;
pub mod error;
pub mod examples;
pub mod io;
pub mod metrics;
pub mod solve;

pub use chain::{Kernel, LyapunovWeight, Measure, StateSpace};
pub use error::{HarrisError, Result};
pub use metrics::BetaScale;

// The guide's code blocks run as doctests of these empty modules.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub mod kernels {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub mod metrics {}
    #[doc = include_str!("../../../book/src/contraction.md")]
    pub mod contraction {}
    #[doc = include_str!("../../../book/src/averaging.md")]
    pub mod averaging {}
    #[doc = include_str!("../../../book/src/invariant.md")]
    pub mod invariant {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

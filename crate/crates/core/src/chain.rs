//! Finite state spaces, Lyapunov weights, probability measures and Markov
//! kernels, together with the two actions of a kernel:
//!
//! ```text
//! (P φ)(x) = Σ_y P(x,y) φ(y)        on functions
//! (P μ)(y) = Σ_x μ(x) P(x,y)        on measures
//! ```
//!
//! Kernels are dense row-major matrices. Row sums within [`STOCHASTIC_TOL`]
//! of one are renormalized at construction; anything further off is
//! rejected.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarrisError, Result};

/// Tolerance on row sums (kernels) and total mass (measures) at construction.
pub const STOCHASTIC_TOL: f64 = 1e-9;

// Below this size the rayon split costs more than the row work.
const PAR_THRESHOLD: usize = 64;

/// A finite, indexed set of states with optional display labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    n: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HarrisError::Param("state space must be nonempty".into()));
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(HarrisError::Param("state space must be nonempty".into()));
        }
        Ok(Self {
            n,
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of state `x`, falling back to its index.
    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }
}

/// A nonnegative, finite Lyapunov weight `V` over the states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LyapunovWeight {
    values: Vec<f64>,
}

impl LyapunovWeight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(HarrisError::Param("Lyapunov weight must be nonempty".into()));
        }
        if let Some((x, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(HarrisError::Param(format!(
                "V({x}) = {v} must be finite and nonnegative"
            )));
        }
        Ok(Self { values })
    }

    /// The constant weight `V ≡ c`.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks the stricter range `V ≥ 1` used by the `S`-localized drift.
    pub fn require_at_least_one(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 1.0) {
            Some(x) => Err(HarrisError::Param(format!(
                "V({x}) = {} but the localized drift condition needs V >= 1",
                self.values[x]
            ))),
            None => Ok(()),
        }
    }

    /// States of the level set `{x : V(x) ≤ r}`, in index order.
    pub fn level_set(&self, r: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= r)
            .map(|(x, _)| x)
            .collect()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        check_dim(n, self.values.len())
    }
}

/// A probability measure on a finite state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    /// Builds a measure from nonnegative weights whose sum is within
    /// [`STOCHASTIC_TOL`] of one; the stored weights are renormalized.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(HarrisError::InvalidMeasure("empty weight vector".into()));
        }
        if let Some((x, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(HarrisError::InvalidMeasure(format!(
                "weight {w} at state {x} is negative or non-finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(HarrisError::InvalidMeasure(format!(
                "total mass {total} is not 1"
            )));
        }
        Ok(Self::renormalized(weights, total))
    }

    /// Normalizes an arbitrary nonnegative, nonzero vector to unit mass.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(HarrisError::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(HarrisError::InvalidMeasure("zero total mass".into()));
        }
        Ok(Self::renormalized(weights, total))
    }

    fn renormalized(mut weights: Vec<f64>, total: f64) -> Self {
        if total != 1.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        Self { weights }
    }

    pub fn dirac(n: usize, x: usize) -> Result<Self> {
        if x >= n {
            return Err(HarrisError::IndexOutOfRange { index: x, n });
        }
        let mut w = vec![0.0; n];
        w[x] = 1.0;
        Ok(Self { weights: w })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HarrisError::InvalidMeasure("empty state space".into()));
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `μ(φ) = Σ_x μ(x) φ(x)`.
    pub fn integrate(&self, phi: &[f64]) -> Result<f64> {
        check_dim(self.len(), phi.len())?;
        Ok(self.weights.iter().zip(phi).map(|(m, p)| m * p).sum())
    }

    /// `μ(A)` for a set of state indices.
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.weights[x]).sum()
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(x, _)| x)
            .collect()
    }
}

/// A row-stochastic transition matrix `P(x, y)` on `n` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    n: usize,
    data: Vec<f64>,
}

impl Kernel {
    /// Validates and renormalizes a square matrix of transition probabilities.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(HarrisError::InvalidKernel("kernel has no rows".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(HarrisError::InvalidKernel(format!(
                    "row {x} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_row_major(n, data)
    }

    /// Same as [`Kernel::new`] but from a flat row-major buffer.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(HarrisError::InvalidKernel(format!(
                "expected {} entries for {n} states, got {}",
                n * n,
                data.len()
            )));
        }
        for (x, row) in data.chunks_mut(n).enumerate() {
            if let Some((y, p)) = row
                .iter()
                .enumerate()
                .find(|(_, p)| !p.is_finite() || **p < 0.0)
            {
                return Err(HarrisError::InvalidKernel(format!(
                    "P({x},{y}) = {p} is negative or non-finite"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOL {
                return Err(HarrisError::InvalidKernel(format!(
                    "row {x} sums to {total}"
                )));
            }
            if total != 1.0 {
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for x in 0..n {
            data[x * n + x] = 1.0;
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// `(Pφ)(x) = Σ_y P(x,y) φ(y)`.
    pub fn apply_to_function(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, phi.len())?;
        let dot = |row: &[f64]| row.iter().zip(phi).map(|(p, f)| p * f).sum::<f64>();
        Ok(if self.n >= PAR_THRESHOLD {
            self.data.par_chunks(self.n).map(dot).collect()
        } else {
            self.rows().map(dot).collect()
        })
    }

    /// `(Pμ)(y) = Σ_x μ(x) P(x,y)`.
    pub fn apply_to_measure(&self, mu: &Measure) -> Result<Measure> {
        let out = self.push_forward(mu.weights())?;
        let total: f64 = out.iter().sum();
        Ok(Measure::renormalized(out, total))
    }

    /// The measure-side action on an arbitrary (possibly signed) vector.
    pub fn push_forward(&self, weights: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, weights.len())?;
        let mut out = vec![0.0; self.n];
        for (row, &w) in self.rows().zip(weights) {
            if w == 0.0 {
                continue;
            }
            out.iter_mut().zip(row).for_each(|(o, p)| *o += w * p);
        }
        Ok(out)
    }

    /// Matrix product `self · other`, i.e. first `self` then `other`.
    pub fn compose(&self, other: &Kernel) -> Result<Kernel> {
        check_dim(self.n, other.n)?;
        let n = self.n;
        let mut data = vec![0.0; n * n];
        let fill = |(x, out): (usize, &mut [f64])| {
            for (z, &p) in self.row(x).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                out.iter_mut().zip(other.row(z)).for_each(|(o, q)| *o += p * q);
            }
        };
        if n >= PAR_THRESHOLD {
            data.par_chunks_mut(n).enumerate().for_each(fill);
        } else {
            data.chunks_mut(n).enumerate().for_each(fill);
        }
        Ok(Kernel { n, data })
    }

    /// `P^m` by iterated multiplication; `P^0` is the identity.
    pub fn power(&self, m: usize) -> Kernel {
        let mut acc = Kernel::identity(self.n);
        for _ in 0..m {
            acc = acc.compose(self).expect("same dimension");
        }
        acc
    }

    /// `[P^0, P^1, …, P^m]`.
    pub fn powers_up_to(&self, m: usize) -> Vec<Kernel> {
        let mut out = Vec::with_capacity(m + 1);
        out.push(Kernel::identity(self.n));
        for k in 1..=m {
            let next = out[k - 1].compose(self).expect("same dimension");
            out.push(next);
        }
        out
    }

    /// The Cesàro average `(1/(N+1)) Σ_{k=0}^{N} P^k`.
    pub fn cesaro_average(&self, big_n: usize) -> Kernel {
        let n = self.n;
        let mut acc = Kernel::identity(n).data;
        let mut current = Kernel::identity(n);
        for _ in 0..big_n {
            current = current.compose(self).expect("same dimension");
            acc.iter_mut().zip(&current.data).for_each(|(a, c)| *a += c);
        }
        let scale = (big_n + 1) as f64;
        acc.iter_mut().for_each(|a| *a /= scale);
        Kernel { n, data: acc }
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the transition matrix (dense, unsymmetric solver).
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        let m = DMatrix::from_row_slice(self.n, self.n, &self.data);
        m.complex_eigenvalues().iter().copied().collect()
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(HarrisError::Dimension { expected, actual })
    }
}

pub(crate) fn check_index(index: usize, n: usize) -> Result<()> {
    if index < n {
        Ok(())
    } else {
        Err(HarrisError::IndexOutOfRange { index, n })
    }
}

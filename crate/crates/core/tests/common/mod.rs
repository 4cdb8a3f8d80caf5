#![allow(dead_code)]

use harris_core::metrics::weighted_sup_norm;
use harris_core::{BetaScale, Kernel, LyapunovWeight};
use rand::Rng;

pub const SHIFT_GRID_POINTS: usize = 10_000;

/// `min_c ‖φ + c‖_β` by a uniform grid over the bracketing interval
/// `[−M, M]`, `M = max|φ| + 1 + β max V`, refined by ternary search inside
/// the best grid cell. The objective is convex in `c`.
pub fn grid_min_shifted_norm(phi: &[f64], v: &LyapunovWeight, beta: BetaScale) -> f64 {
    let f = |c: f64| {
        let shifted: Vec<f64> = phi.iter().map(|x| x + c).collect();
        weighted_sup_norm(&shifted, v, beta).unwrap()
    };
    let half = phi.iter().fold(0.0_f64, |m, x| m.max(x.abs())) + 1.0 + beta.get() * v.max();
    let step = 2.0 * half / (SHIFT_GRID_POINTS - 1) as f64;
    let grid = |i: usize| -half + i as f64 * step;
    let best = (0..SHIFT_GRID_POINTS)
        .min_by(|&a, &b| f(grid(a)).total_cmp(&f(grid(b))))
        .unwrap();
    let (mut lo, mut hi) = (grid(best.saturating_sub(1)), grid((best + 1).min(SHIFT_GRID_POINTS - 1)));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(grid(best)))
}

/// Dense random stochastic matrix with occasional zeros.
pub fn random_kernel<R: Rng>(rng: &mut R, n: usize) -> Kernel {
    let rows = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..n)
                .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
                .collect();
            let pick = rng.random_range(0..n);
            row[pick] += 0.1;
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            row
        })
        .collect();
    Kernel::new(rows).unwrap()
}

/// A downward-drifting chain on `0..n` with `V(x) = x`: each row mixes a
/// shared distribution on the lowest states (weight `lambda`) with a local
/// move biased downward.
pub fn drifting_chain<R: Rng>(rng: &mut R, n: usize) -> (Kernel, LyapunovWeight) {
    let lambda = 0.2 + 0.3 * rng.random::<f64>();
    let mut base: Vec<f64> = (0..4.min(n)).map(|_| rng.random::<f64>() + 0.05).collect();
    let bs: f64 = base.iter().sum();
    base.iter_mut().for_each(|p| *p /= bs);
    let rows = (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            for (y, p) in base.iter().enumerate() {
                row[y] += lambda * p;
            }
            let down = 0.55 + 0.4 * rng.random::<f64>();
            let stay = (1.0 - down) * rng.random::<f64>();
            let up = 1.0 - down - stay;
            row[x.saturating_sub(1)] += (1.0 - lambda) * down;
            row[x] += (1.0 - lambda) * stay;
            row[(x + 1).min(n - 1)] += (1.0 - lambda) * up;
            row
        })
        .collect();
    let v = LyapunovWeight::new((0..n).map(|x| x as f64).collect()).unwrap();
    (Kernel::new(rows).unwrap(), v)
}

pub fn sup_norm(phi: &[f64], v: &LyapunovWeight) -> f64 {
    weighted_sup_norm(phi, v, BetaScale::ONE).unwrap()
}

//! Synthetic benchmark data.

use alloc::vec::Vec;

use rand::Rng;

use crate::math::{exp, sqrt, PI};
use crate::model::Dataset;
use crate::rng::{standard_normal, uniform_open};

/// Weights, means and standard deviations of the two-component benchmark
/// mixture `0.75 N(-2.5, 1) + 0.25 N(2.5, 1)`.
pub const TWO_GAUSSIAN: [(f64, f64, f64); 2] = [(0.75, -2.5, 1.0), (0.25, 2.5, 1.0)];

/// `n` draws from the two-component benchmark mixture.
pub fn two_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dataset {
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let (_, mean, sd) = if uniform_open(rng) < TWO_GAUSSIAN[0].0 {
                TWO_GAUSSIAN[0]
            } else {
                TWO_GAUSSIAN[1]
            };
            mean + sd * standard_normal(rng)
        })
        .collect();
    // normal draws are finite
    Dataset::univariate(values).unwrap_or_else(|_| unreachable!())
}

/// Density of the two-component benchmark mixture.
pub fn two_gaussian_density(x: f64) -> f64 {
    TWO_GAUSSIAN
        .iter()
        .map(|&(w, m, s)| {
            let z = (x - m) / s;
            w * exp(-0.5 * z * z) / (s * sqrt(2.0 * PI))
        })
        .sum()
}

/// Two groups sharing one component: group 1 from `0.5 N(-2, 1) + 0.5 N(2, 1)`
/// and group 2 from `0.5 N(-2, 1) + 0.5 N(5, 1)`. Returns group labels (1 and
/// 2) alongside the observations.
pub fn two_group<R: Rng + ?Sized>(rng: &mut R, n_per_group: usize) -> (Vec<usize>, Dataset) {
    let mut groups = Vec::with_capacity(2 * n_per_group);
    let mut values = Vec::with_capacity(2 * n_per_group);
    for (g, other) in [(1, 2.0), (2, 5.0)] {
        for _ in 0..n_per_group {
            let mean = if uniform_open(rng) < 0.5 { -2.0 } else { other };
            groups.push(g);
            values.push(mean + standard_normal(rng));
        }
    }
    (
        groups,
        Dataset::univariate(values).unwrap_or_else(|_| unreachable!()),
    )
}

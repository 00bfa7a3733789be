use alloc::vec::Vec;

use super::ics::check_data;
use super::AllocationState;
use crate::error::Result;
use crate::math::{exp, ln, ln_add_exp};
use crate::model::{BaseMeasure, Dataset, SuffStats};
use crate::pyprocess::PyParams;
use crate::rng::{categorical_ln_draw, RngStream};

/// Unnormalized reallocation weights `(n_j - sigma) K_j` for existing
/// clusters followed by `(theta + sigma k) g` for a new one, where `kernel`
/// holds `K(X_i; theta_j)` and `g` the prior predictive density at `X_i`.
pub fn marginal_weights(counts: &[usize], kernel: &[f64], g: f64, params: PyParams) -> Vec<f64> {
    counts
        .iter()
        .zip(kernel)
        .map(|(&c, &k)| params.join_weight(c) * k)
        .chain(core::iter::once(params.fresh_weight(counts.len()) * g))
        .collect()
}

/// One sweep of the marginal sampler: observations are reallocated one at a
/// time given all others, a new cluster receiving an atom drawn from the
/// single-observation posterior. Atoms are then refreshed from their full
/// conditionals.
pub fn marginal_step(
    rng: &mut RngStream,
    state: &mut AllocationState,
    data: &Dataset,
    params: PyParams,
    base: &BaseMeasure,
) -> Result<()> {
    check_data(state.n(), data, base)?;
    let mut ln_w = Vec::new();
    let mut scratch = Vec::new();
    for (i, x) in data.iter().enumerate() {
        state.detach(i);
        ln_w.clear();
        ln_w.extend(
            state
                .counts()
                .iter()
                .zip(state.atoms())
                .map(|(&c, a)| ln(params.join_weight(c)) + a.ln_density(x)),
        );
        ln_w.push(ln(params.fresh_weight(state.k())) + base.ln_marginal(x));
        let c = categorical_ln_draw(rng, &ln_w, &mut scratch)?;
        if c == state.k() {
            let mut s = SuffStats::empty(data.dim());
            s.push(x);
            let atom = base.posterior_draw(rng, &s)?;
            state.attach_new(i, atom);
        } else {
            state.attach(i, c);
        }
    }
    state.accelerate(rng, data, base)
}

/// Predictive density given the current clusters,
/// `sum (n_j - sigma)/(theta + n) K(x; theta_j) + (theta + sigma k)/(theta + n) g(x)`.
pub fn marginal_density(
    state: &AllocationState,
    params: PyParams,
    base: &BaseMeasure,
    points: &Dataset,
) -> Vec<f64> {
    let total = ln(params.theta() + state.n() as f64);
    let ln_w: Vec<f64> = state
        .counts()
        .iter()
        .map(|&c| ln(params.join_weight(c)) - total)
        .collect();
    let ln_fresh = ln(params.fresh_weight(state.k())) - total;
    points
        .iter()
        .map(|x| {
            let lf = state
                .atoms()
                .iter()
                .zip(&ln_w)
                .fold(ln_fresh + base.ln_marginal(x), |acc, (a, lw)| {
                    ln_add_exp(acc, lw + a.ln_density(x))
                });
            exp(lf)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NigBase;

    #[test]
    fn weight_arithmetic() {
        let p = PyParams::new(0.5, 1.0).unwrap();
        let w = marginal_weights(&[2, 1], &[0.3, 0.2], 0.1, p);
        let want = [0.45, 0.10, 0.20];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = w.iter().sum();
        assert!((w[0] / total - 0.6).abs() < 1e-12);
        assert!((w[1] / total - 0.133_333_333_3).abs() < 1e-9);
        let dp = marginal_weights(&[2, 1], &[0.3, 0.2], 0.1, PyParams::new(0.0, 1.0).unwrap());
        assert_eq!(dp, [0.6, 0.2, 0.1]);
    }

    #[test]
    fn single_observation_atom_refreshes() {
        let base = BaseMeasure::Nig(NigBase::new(0.0, 0.2, 2.0, 1.0).unwrap());
        let data = Dataset::univariate(alloc::vec![0.7]).unwrap();
        let mut rng = RngStream::chain(6, 0);
        let mut state = AllocationState::single_cluster(1, base.prior_draw(&mut rng).unwrap());
        let mut previous = state.atoms()[0].clone();
        for _ in 0..20 {
            marginal_step(
                &mut rng,
                &mut state,
                &data,
                PyParams::new(0.3, 1.0).unwrap(),
                &base,
            )
            .unwrap();
            assert_eq!(state.k(), 1);
            assert_ne!(state.atoms()[0], previous);
            previous = state.atoms()[0].clone();
        }
    }
}

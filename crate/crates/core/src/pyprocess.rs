//! Pitman-Yor process primitives: predictive urn, stick-breaking, the
//! posterior weight decomposition and auxiliary urn samples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Result};
use crate::math::{exp, ln, ln_add_exp};
use crate::model::{Atom, BaseMeasure};
use crate::rng::{dirichlet_draw, ln_beta_pair, uniform_open};

/// Default hard limit on the number of sticks generated in one call.
pub const DEFAULT_STICK_CAP: usize = 100_000_000;

/// Discount `sigma` and strength `theta` of a Pitman-Yor process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PyParams {
    sigma: f64,
    theta: f64,
}

impl PyParams {
    pub fn new(sigma: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(domain(format!("discount must lie in [0, 1), got {sigma}")));
        }
        if !(theta > -sigma) || !theta.is_finite() {
            return Err(domain(format!(
                "strength must exceed -{sigma}, got {theta}"
            )));
        }
        if sigma == 0.0 && theta <= 0.0 {
            return Err(domain("a Dirichlet process needs positive strength"));
        }
        Ok(Self { sigma, theta })
    }

    /// Dirichlet process with mass `theta`.
    pub fn dp(theta: f64) -> Result<Self> {
        Self::new(0.0, theta)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Parameters of the leftover process after `k` distinct values,
    /// `PY(sigma, theta + sigma k)`.
    pub fn leftover(&self, k: usize) -> Self {
        Self {
            sigma: self.sigma,
            theta: self.theta + self.sigma * k as f64,
        }
    }

    /// Unnormalized urn weight of a fresh value given `k` distinct values.
    #[inline]
    pub fn fresh_weight(&self, k: usize) -> f64 {
        self.theta + self.sigma * k as f64
    }

    /// Unnormalized urn weight of an existing value seen `count` times.
    #[inline]
    pub fn join_weight(&self, count: usize) -> f64 {
        count as f64 - self.sigma
    }
}

/// Cluster sizes of a partition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionCounts {
    counts: Vec<usize>,
}

impl PartitionCounts {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.contains(&0) {
            return Err(domain("partition blocks must be nonempty"));
        }
        Ok(Self { counts })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Records one more draw into block `j`, or into a new block when `j == k`.
    pub fn add(&mut self, j: usize) {
        if j == self.counts.len() {
            self.counts.push(1);
        } else {
            self.counts[j] += 1;
        }
    }
}

/// Outcome of a predictive draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UrnChoice {
    Existing(usize),
    Fresh,
}

/// Outcome of a predictive draw, with the fresh atom realized.
#[derive(Clone, Debug, PartialEq)]
pub enum UrnDraw {
    Existing(usize),
    Fresh(Atom),
}

/// Samples which value the next urn draw takes, without realizing atoms.
pub fn urn_predictive_choice<R: Rng + ?Sized>(
    rng: &mut R,
    counts: &[usize],
    params: PyParams,
) -> UrnChoice {
    let n: usize = counts.iter().sum();
    let k = counts.len();
    let fresh = params.fresh_weight(k);
    let total = params.theta + n as f64;
    let mut target = uniform_open(rng) * total;
    if target < fresh || k == 0 {
        return UrnChoice::Fresh;
    }
    target -= fresh;
    for (j, &c) in counts.iter().enumerate() {
        target -= params.join_weight(c);
        if target < 0.0 {
            return UrnChoice::Existing(j);
        }
    }
    UrnChoice::Existing(k - 1)
}

/// Predictive draw: a fresh atom from `P0` with probability
/// `(theta + k sigma) / (theta + n)`, otherwise existing value `j` with
/// probability `(n_j - sigma) / (theta + n)`.
pub fn urn_predictive_draw<R: Rng + ?Sized>(
    rng: &mut R,
    counts: &PartitionCounts,
    params: PyParams,
    base: &BaseMeasure,
) -> Result<UrnDraw> {
    match urn_predictive_choice(rng, counts.counts(), params) {
        UrnChoice::Existing(j) => Ok(UrnDraw::Existing(j)),
        UrnChoice::Fresh => base.prior_draw(rng).map(UrnDraw::Fresh),
    }
}

/// Block sizes of `n` sequential urn draws.
pub fn urn_partition<R: Rng + ?Sized>(rng: &mut R, n: usize, params: PyParams) -> PartitionCounts {
    let mut counts = PartitionCounts::empty();
    for _ in 0..n {
        match urn_predictive_choice(rng, counts.counts(), params) {
            UrnChoice::Existing(j) => counts.add(j),
            UrnChoice::Fresh => counts.add(counts.k()),
        }
    }
    counts
}

/// `E[K_n]`, the expected number of distinct values among `n` urn draws,
/// via `E[K_{i+1}] = E[K_i] + (theta + sigma E[K_i]) / (theta + i)`.
pub fn expected_cluster_count(n: usize, params: PyParams) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut k = 1.0;
    for i in 1..n {
        k += (params.theta + params.sigma * k) / (params.theta + i as f64);
    }
    k
}

/// Leading stick-breaking weights.
#[derive(Clone, Debug, PartialEq)]
pub struct StickPrefix {
    pub weights: Vec<f64>,
    /// `ln prod_{j <= L} (1 - V_j)`.
    pub ln_leftover: f64,
    /// Set when the cap stopped generation before the leftover dropped below
    /// the requested mass.
    pub capped: bool,
}

impl StickPrefix {
    pub fn leftover(&self) -> f64 {
        exp(self.ln_leftover)
    }
}

/// Sequential stick-breaking for `PY(sigma, theta)`.
#[derive(Clone, Debug)]
pub struct StickBreaker {
    params: PyParams,
    next: usize,
    ln_rest: f64,
}

impl StickBreaker {
    pub fn new(params: PyParams) -> Self {
        Self::resume(params, 1, 0.0)
    }

    /// Continues a construction whose first `next_index - 1` sticks left
    /// `exp(ln_rest)` mass unassigned.
    pub fn resume(params: PyParams, next_index: usize, ln_rest: f64) -> Self {
        Self {
            params,
            next: next_index,
            ln_rest,
        }
    }

    pub fn ln_rest(&self) -> f64 {
        self.ln_rest
    }

    /// Next `(ln V_j, ln p_j)`.
    pub fn next_stick<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (f64, f64) {
        let (lv, l1mv) = self.draw_v(rng);
        let lp = self.ln_rest + lv;
        self.ln_rest += l1mv;
        self.next += 1;
        (lv, lp)
    }

    fn draw_v<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let a = 1.0 - self.params.sigma;
        let b = self.params.theta + self.next as f64 * self.params.sigma;
        // parameters are valid for every j >= 1 once PyParams is valid
        ln_beta_pair(rng, a, b).unwrap_or((f64::NAN, f64::NAN))
    }
}

/// Generates `V_j ~ Beta(1 - sigma, theta + j sigma)` and
/// `p_j = V_j prod_{l<j} (1 - V_l)` until the leftover mass falls below
/// `stop_mass`, or `cap` sticks have been drawn.
pub fn stick_breaking_prefix<R: Rng + ?Sized>(
    rng: &mut R,
    params: PyParams,
    stop_mass: f64,
    cap: usize,
) -> Result<StickPrefix> {
    if !(stop_mass > 0.0 && stop_mass <= 1.0) {
        return Err(domain(format!(
            "stop mass must lie in (0, 1], got {stop_mass}"
        )));
    }
    let ln_stop = ln(stop_mass);
    let mut breaker = StickBreaker::new(params);
    let mut weights = Vec::new();
    while breaker.ln_rest() >= ln_stop {
        if weights.len() == cap {
            return Ok(StickPrefix {
                weights,
                ln_leftover: breaker.ln_rest(),
                capped: true,
            });
        }
        let (_, lp) = breaker.next_stick(rng);
        weights.push(exp(lp));
    }
    Ok(StickPrefix {
        weights,
        ln_leftover: breaker.ln_rest(),
        capped: false,
    })
}

/// Posterior weights `(p_0, p_1, ..., p_k) ~ Dirichlet(theta + sigma k,
/// n_1 - sigma, ..., n_k - sigma)`.
pub fn posterior_weights_draw<R: Rng + ?Sized>(
    rng: &mut R,
    counts: &PartitionCounts,
    params: PyParams,
) -> Result<Vec<f64>> {
    let mut alpha = Vec::with_capacity(counts.k() + 1);
    alpha.push(params.fresh_weight(counts.k()));
    alpha.extend(counts.counts().iter().map(|&c| params.join_weight(c)));
    dirichlet_draw(rng, &alpha)
}

/// Distinct atoms of an urn sample with their multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliarySample {
    pub atoms: Vec<Atom>,
    pub multiplicities: Vec<usize>,
}

impl AuxiliarySample {
    pub fn size(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

/// `m` exchangeable draws from the `PY(sigma, theta + sigma k; P0)` urn.
pub fn auxiliary_sample<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    k: usize,
    params: PyParams,
    base: &BaseMeasure,
) -> Result<AuxiliarySample> {
    if m == 0 {
        return Err(domain("auxiliary sample size must be at least 1"));
    }
    let partition = urn_partition(rng, m, params.leftover(k));
    let atoms = (0..partition.k())
        .map(|_| base.prior_draw(rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuxiliarySample {
        atoms,
        multiplicities: partition.counts,
    })
}

/// Finite summary `(s, t, p)` of a process realization: fixed atoms `t` with
/// weights `p_1..p_k`, and auxiliary atoms `s` sharing the leftover weight
/// `p_0` in proportion to their multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSummary {
    pub fixed_atoms: Vec<Atom>,
    pub aux: AuxiliarySample,
    /// `(p_0, p_1, ..., p_k)`.
    pub weights: Vec<f64>,
}

impl MeasureSummary {
    /// Draws `p` and `s` given the current distinct atoms and their counts.
    pub fn draw<R: Rng + ?Sized>(
        rng: &mut R,
        fixed_atoms: Vec<Atom>,
        counts: &PartitionCounts,
        params: PyParams,
        base: &BaseMeasure,
        m: usize,
    ) -> Result<Self> {
        if fixed_atoms.len() != counts.k() {
            return Err(domain("one fixed atom per block is required"));
        }
        let weights = posterior_weights_draw(rng, counts, params)?;
        let aux = auxiliary_sample(rng, m, counts.k(), params, base)?;
        Ok(Self {
            fixed_atoms,
            aux,
            weights,
        })
    }

    pub fn p0(&self) -> f64 {
        self.weights[0]
    }

    /// Log component weights: auxiliary atoms first, then fixed atoms.
    pub fn ln_component_weights(&self) -> Vec<f64> {
        let m = self.aux.size() as f64;
        let lp0 = ln(self.weights[0]);
        self.aux
            .multiplicities
            .iter()
            .map(|&c| lp0 + ln(c as f64 / m))
            .chain(self.weights[1..].iter().map(|&p| ln(p)))
            .collect()
    }

    /// Component atoms in the order of [`Self::ln_component_weights`].
    pub fn components(&self) -> impl Iterator<Item = &Atom> {
        self.aux.atoms.iter().chain(self.fixed_atoms.iter())
    }

    pub fn n_components(&self) -> usize {
        self.aux.atoms.len() + self.fixed_atoms.len()
    }

    /// Total weight `p_0 sum(m_l / m) + sum(p_j)`.
    pub fn total_weight(&self) -> f64 {
        let m = self.aux.size() as f64;
        let aux: f64 = self
            .aux
            .multiplicities
            .iter()
            .map(|&c| self.weights[0] * c as f64 / m)
            .sum();
        aux + self.weights[1..].iter().sum::<f64>()
    }

    /// `ln f(x)` for `f(x) = p_0 sum (m_l / m) K(x; s_l) + sum p_j K(x; t_j)`.
    pub fn ln_density(&self, x: &[f64], ln_weights: &[f64]) -> f64 {
        self.components()
            .zip(ln_weights)
            .fold(f64::NEG_INFINITY, |acc, (a, lw)| {
                ln_add_exp(acc, lw + a.ln_density(x))
            })
    }
}

/// Distinct-value counts of repeated urn sequences of length `n`.
pub fn simulate_cluster_counts<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    params: PyParams,
    reps: usize,
) -> Vec<usize> {
    (0..reps)
        .map(|_| urn_partition(rng, n, params).k())
        .collect()
}

/// Expected weights `xi_j = E[p_j]` of the stick-breaking construction,
/// `xi_1 = (1 - sigma)/(theta + 1)`,
/// `xi_{j+1} = xi_j (theta + j sigma)/(theta + 1 + j sigma)`.
#[derive(Clone, Debug)]
pub struct ExpectedWeights {
    params: PyParams,
    values: Vec<f64>,
    ln_rest: Vec<f64>,
}

impl ExpectedWeights {
    pub fn new(params: PyParams) -> Self {
        Self {
            params,
            values: Vec::new(),
            ln_rest: vec![0.0],
        }
    }

    /// Ensures at least `len` terms are available.
    pub fn extend_to(&mut self, len: usize) {
        let (s, t) = (self.params.sigma, self.params.theta);
        while self.values.len() < len {
            let j = self.values.len() + 1;
            let xi = match self.values.last() {
                None => (1.0 - s) / (t + 1.0),
                Some(&prev) => {
                    let k = (j - 1) as f64;
                    prev * (t + k * s) / (t + 1.0 + k * s)
                }
            };
            self.values.push(xi);
            // 1 - sum_{l <= j} xi_l = prod_{l <= j} (theta + l sigma) / (1 + theta + (l - 1) sigma)
            let jf = j as f64;
            let step = ln(t + jf * s) - ln(1.0 + t + (jf - 1.0) * s);
            let last = *self.ln_rest.last().unwrap_or(&0.0);
            self.ln_rest.push(last + step);
        }
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
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

    /// `ln(1 - sum_{l <= len} xi_l)` for the first `len` terms.
    pub fn ln_leftover(&self, len: usize) -> f64 {
        self.ln_rest[len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NigBase;
    use crate::rng::RngStream;
    use crate::testutil::mean_and_se;

    fn nig() -> BaseMeasure {
        BaseMeasure::Nig(NigBase::new(0.0, 0.2, 2.0, 1.0).unwrap())
    }

    fn py(s: f64, t: f64) -> PyParams {
        PyParams::new(s, t).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PyParams::new(1.0, 1.0).is_err());
        assert!(PyParams::new(-0.1, 1.0).is_err());
        assert!(PyParams::new(0.5, -0.5).is_err());
        assert!(PyParams::new(0.0, 0.0).is_err());
        assert!(PyParams::new(0.5, -0.4).is_ok());
    }

    fn fresh_frequency(counts: &[usize], params: PyParams, reps: usize) -> f64 {
        let mut rng = RngStream::new(31, 0);
        (0..reps)
            .filter(|_| urn_predictive_choice(&mut rng, counts, params) == UrnChoice::Fresh)
            .count() as f64
            / reps as f64
    }

    #[test]
    fn urn_probabilities() {
        assert_eq!(fresh_frequency(&[], py(0.5, 1.0), 1000), 1.0);
        assert!((fresh_frequency(&[3], py(0.5, 1.0), 100_000) - 0.375).abs() < 0.01);
        assert!((fresh_frequency(&[1], py(0.0, 1.0), 100_000) - 0.5).abs() < 0.01);
    }

    #[test]
    fn urn_join_probabilities_follow_counts() {
        // sigma = 0: Blackwell-MacQueen weights n_j / (theta + n)
        let mut rng = RngStream::new(32, 0);
        let mut hits = [0usize; 3];
        let reps = 200_000;
        for _ in 0..reps {
            match urn_predictive_choice(&mut rng, &[1, 3], py(0.0, 2.0)) {
                UrnChoice::Existing(j) => hits[j] += 1,
                UrnChoice::Fresh => hits[2] += 1,
            }
        }
        let want = [1.0 / 6.0, 3.0 / 6.0, 2.0 / 6.0];
        for j in 0..3 {
            assert!((hits[j] as f64 / reps as f64 - want[j]).abs() < 0.005);
        }
    }

    #[test]
    fn urn_draw_realizes_fresh_atoms() {
        let mut rng = RngStream::new(33, 0);
        let d =
            urn_predictive_draw(&mut rng, &PartitionCounts::empty(), py(0.3, 1.0), &nig()).unwrap();
        assert!(matches!(d, UrnDraw::Fresh(Atom::Normal { .. })));
    }

    #[test]
    fn expected_cluster_count_values() {
        assert_eq!(expected_cluster_count(1, py(0.5, 1.0)), 1.0);
        assert!((expected_cluster_count(3, py(0.0, 1.0)) - 11.0 / 6.0).abs() < 1e-12);
        assert!((expected_cluster_count(2, py(0.5, 1.0)) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn expected_cluster_count_matches_closed_forms() {
        // DP: sum theta / (theta + i - 1)
        let dp: f64 = (0..50).map(|i| 2.5 / (2.5 + i as f64)).sum();
        assert!((expected_cluster_count(50, py(0.0, 2.5)) - dp).abs() < 1e-10);
        // PY: theta/sigma ((theta+sigma)_n / (theta)_n - 1)
        let (s, t, n) = (0.5, 1.0, 40);
        let ratio = exp(crate::math::ln_gamma(t + s + n as f64)
            - crate::math::ln_gamma(t + s)
            - crate::math::ln_gamma(t + n as f64)
            + crate::math::ln_gamma(t));
        assert!((expected_cluster_count(n, py(s, t)) - t / s * (ratio - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn urn_counts_match_recursion() {
        let mut rng = RngStream::new(34, 0);
        for &s in &[0.0, 0.5] {
            for &t in &[1.0, 10.0] {
                let p = py(s, t);
                let ks: Vec<f64> = simulate_cluster_counts(&mut rng, 100, p, 5_000)
                    .into_iter()
                    .map(|k| k as f64)
                    .collect();
                let (m, se) = mean_and_se(&ks);
                assert!((m - expected_cluster_count(100, p)).abs() < 3.5 * se);
            }
        }
    }

    #[test]
    fn stick_prefix_telescopes() {
        let mut rng = RngStream::new(35, 0);
        for &(s, t) in &[(0.0, 1.0), (0.5, 1.0), (0.3, 5.0)] {
            let pre = stick_breaking_prefix(&mut rng, py(s, t), 1e-6, DEFAULT_STICK_CAP).unwrap();
            let total: f64 = pre.weights.iter().sum::<f64>() + pre.leftover();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(pre.leftover() < 1e-6 && !pre.capped);
        }
        let capped = stick_breaking_prefix(&mut rng, py(0.9, 1.0), 1e-12, 10).unwrap();
        assert!(capped.capped && capped.weights.len() == 10);
        assert!(stick_breaking_prefix(&mut rng, py(0.0, 1.0), 0.0, 10).is_err());
    }

    #[test]
    fn first_stick_means() {
        let mut rng = RngStream::new(36, 0);
        let first = |rng: &mut RngStream, p| {
            let xs: Vec<f64> = (0..100_000)
                .map(|_| stick_breaking_prefix(rng, p, 1.0, 1).unwrap().weights[0])
                .collect();
            mean_and_se(&xs).0
        };
        assert!((first(&mut rng, py(0.0, 1.0)) - 0.5).abs() < 0.01);
        assert!((first(&mut rng, py(0.5, 1.0)) - 0.25).abs() < 0.01);
    }

    #[test]
    fn posterior_weight_means() {
        let mut rng = RngStream::new(37, 0);
        assert_eq!(
            posterior_weights_draw(&mut rng, &PartitionCounts::empty(), py(0.5, 1.0)).unwrap(),
            vec![1.0]
        );
        let mean_p0 = |rng: &mut RngStream, counts: Vec<usize>, p| {
            let c = PartitionCounts::new(counts).unwrap();
            let xs: Vec<f64> = (0..100_000)
                .map(|_| posterior_weights_draw(rng, &c, p).unwrap()[0])
                .collect();
            mean_and_se(&xs).0
        };
        assert!((mean_p0(&mut rng, vec![3, 7], py(0.0, 1.0)) - 1.0 / 11.0).abs() < 0.005);
        assert!((mean_p0(&mut rng, vec![2, 2], py(0.5, 1.0)) - 0.4).abs() < 0.005);
    }

    #[test]
    fn auxiliary_sample_distinct_counts() {
        let mut rng = RngStream::new(38, 0);
        let one = auxiliary_sample(&mut rng, 1, 0, py(0.5, 1.0), &nig()).unwrap();
        assert_eq!(one.multiplicities, vec![1]);
        let frac_two = |rng: &mut RngStream, k, p| {
            (0..100_000)
                .filter(|_| auxiliary_sample(rng, 2, k, p, &nig()).unwrap().atoms.len() == 2)
                .count() as f64
                / 100_000.0
        };
        assert!((frac_two(&mut rng, 0, py(0.0, 1.0)) - 0.5).abs() < 0.01);
        assert!((frac_two(&mut rng, 2, py(0.5, 1.0)) - 5.0 / 6.0).abs() < 0.01);
        let s = auxiliary_sample(&mut rng, 10, 3, py(0.5, 1.0), &nig()).unwrap();
        assert_eq!(s.size(), 10);
        assert!(auxiliary_sample(&mut rng, 0, 0, py(0.5, 1.0), &nig()).is_err());
    }

    #[test]
    fn summary_weights_sum_to_one() {
        let mut rng = RngStream::new(39, 0);
        let base = nig();
        let atoms = vec![
            base.prior_draw(&mut rng).unwrap(),
            base.prior_draw(&mut rng).unwrap(),
        ];
        let counts = PartitionCounts::new(vec![4, 6]).unwrap();
        let s = MeasureSummary::draw(&mut rng, atoms, &counts, py(0.3, 1.0), &base, 10).unwrap();
        assert!((s.total_weight() - 1.0).abs() < 1e-12);
        let lw = s.ln_component_weights();
        assert!((lw.iter().map(|&w| exp(w)).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(lw.len(), s.n_components());
    }

    #[test]
    fn expected_weights_recursion() {
        let mut xi = ExpectedWeights::new(py(0.0, 1.0));
        xi.extend_to(5);
        for j in 0..5 {
            assert!((xi.get(j) - 0.5f64.powi(j as i32 + 1)).abs() < 1e-15);
        }
        let mut xi = ExpectedWeights::new(py(0.4, 2.0));
        xi.extend_to(200);
        for len in [0, 1, 7, 200] {
            let direct = 1.0 - xi.values()[..len].iter().sum::<f64>();
            assert!((exp(xi.ln_leftover(len)) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_weights_are_stick_means() {
        let p = py(0.4, 2.0);
        let mut xi = ExpectedWeights::new(p);
        xi.extend_to(3);
        let mut rng = RngStream::new(40, 0);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| {
                stick_breaking_prefix(&mut rng, p, 1e-300, 3)
                    .unwrap()
                    .weights
            })
            .collect();
        for j in 0..3 {
            let col: Vec<f64> = draws.iter().map(|w| w[j]).collect();
            let (m, se) = mean_and_se(&col);
            assert!(
                (m - xi.get(j)).abs() < 3.5 * se,
                "stick {j}: {m} vs {}",
                xi.get(j)
            );
        }
    }
}

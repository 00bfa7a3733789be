//! Importance conditional sampling for Griffiths-Milne dependent Dirichlet
//! process mixtures of grouped data.
//!
//! Group `l` draws from `w_l gamma_l + (1 - w_l) gamma_0`, where
//! `gamma_1..gamma_L ~ DP(theta z)` are idiosyncratic, `gamma_0 ~
//! DP(theta (1 - z))` is shared, and `w` follows the multivariate beta with
//! parameters `(theta z, ..., theta z, theta (1 - z))`. Process index 0 is
//! the common process throughout; group `l` (zero-based) owns process `l + 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::diagnostics::{deviance, DevianceMode};
use crate::error::{domain, Error, Result};
use crate::math::{exp, ln, ln_1p, ln_add_exp, powf};
use crate::model::{Atom, BaseMeasure, Dataset, SuffStats};
use crate::pyprocess::{
    urn_predictive_choice, MeasureSummary, PartitionCounts, PyParams, UrnChoice,
};
use crate::rng::{categorical_ln_draw, gamma_draw, standard_normal, uniform_open, RngStream};
use crate::samplers::{map_indexed, Clock};

/// Target acceptance rate of the adaptive weight update.
pub const TARGET_ACCEPTANCE: f64 = 0.44;

/// Strength `theta`, common-share parameter `z` and number of groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmddpParams {
    theta: f64,
    z: f64,
    groups: usize,
}

impl GmddpParams {
    pub fn new(theta: f64, z: f64, groups: usize) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(domain(format!("theta must be positive, got {theta}")));
        }
        if !(z > 0.0 && z < 1.0) {
            return Err(domain(format!("z must lie in (0, 1), got {z}")));
        }
        if groups == 0 {
            return Err(domain("at least one group is required"));
        }
        Ok(Self { theta, z, groups })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// Strength of each idiosyncratic process, `theta z`.
    pub fn idiosyncratic_mass(&self) -> f64 {
        self.theta * self.z
    }

    /// Strength of the common process, `theta (1 - z)`.
    pub fn common_mass(&self) -> f64 {
        self.theta * (1.0 - self.z)
    }

    /// Dirichlet process law of process `p` (0 = common).
    pub fn process(&self, p: usize) -> PyParams {
        let mass = if p == 0 {
            self.common_mass()
        } else {
            self.idiosyncratic_mass()
        };
        // both masses are positive by construction
        PyParams::dp(mass).unwrap_or_else(|_| unreachable!())
    }
}

/// Multivariate beta draw `w_l = G_l / (G_l + G_0)` with `G_l ~ Gamma(theta z)`
/// and a single shared `G_0 ~ Gamma(theta (1 - z))`.
pub fn gmddp_prior_weights<R: Rng + ?Sized>(rng: &mut R, params: GmddpParams) -> Result<Vec<f64>> {
    let g0 = gamma_draw(rng, params.common_mass(), 1.0)?;
    (0..params.groups)
        .map(|_| {
            let g = gamma_draw(rng, params.idiosyncratic_mass(), 1.0)?;
            Ok(clamp_open(g / (g + g0)))
        })
        .collect()
}

fn clamp_open(v: f64) -> f64 {
    if v.is_nan() {
        0.5
    } else {
        v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Observations tagged with a zero-based group index.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedData {
    data: Dataset,
    groups: Vec<usize>,
    n_groups: usize,
}

impl GroupedData {
    pub fn new(data: Dataset, groups: Vec<usize>, n_groups: usize) -> Result<Self> {
        if groups.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                found: groups.len(),
            });
        }
        if let Some(&g) = groups.iter().find(|&&g| g >= n_groups) {
            return Err(domain(format!("group index {g} exceeds {n_groups} groups")));
        }
        Ok(Self {
            data,
            groups,
            n_groups,
        })
    }

    /// Groups from arbitrary integer labels, numbered in increasing label
    /// order. Returns the distinct labels alongside.
    pub fn from_labels(data: Dataset, labels: &[i64]) -> Result<(Self, Vec<i64>)> {
        let mut distinct = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let groups = labels
            .iter()
            .map(|l| distinct.binary_search(l).unwrap_or_else(|_| unreachable!()))
            .collect();
        Ok((Self::new(data, groups, distinct.len())?, distinct))
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Observation count of every group.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.groups {
            sizes[g] += 1;
        }
        sizes
    }

    /// Rows belonging to group `l`.
    pub fn group(&self, l: usize) -> Dataset {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| self.groups[i] == l).collect();
        self.data.subset(&rows)
    }
}

/// Per-observation mixture terms entering the weight full conditional:
/// `ln q^(l)` under the observation's own idiosyncratic summary and
/// `ln q^(0)` under the common one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MixtureTerms {
    pub groups: Vec<usize>,
    pub ln_own: Vec<f64>,
    pub ln_common: Vec<f64>,
}

impl MixtureTerms {
    /// No observations: the full conditional reduces to the prior.
    pub fn empty() -> Self {
        Self::default()
    }

    fn group_ln_lik(&self, l: usize, v: f64) -> f64 {
        let (lv, l1v) = (ln(v), ln_1p(-v));
        self.groups
            .iter()
            .zip(self.ln_own.iter().zip(&self.ln_common))
            .filter(|(&g, _)| g == l)
            .map(|(_, (&a, &b))| ln_add_exp(lv + a, l1v + b))
            .sum()
    }
}

/// Log of the unnormalized weight full conditional
/// `prod_l v_l^(theta z - 1) / (1 - v_l)^(theta z + 1) prod_i (v_l q^(l) +
/// (1 - v_l) q^(0)) (1 + sum_l v_l / (1 - v_l))^(-L theta z - theta (1 - z))`.
pub fn w_logdensity_fullcond(v: &[f64], terms: &MixtureTerms, params: GmddpParams) -> Result<f64> {
    if v.len() != params.groups {
        return Err(Error::DimensionMismatch {
            expected: params.groups,
            found: v.len(),
        });
    }
    if let Some(x) = v.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(domain(format!("weight {x} lies outside (0, 1)")));
    }
    let prior = prior_ln_density(v, params);
    let lik: f64 = (0..params.groups)
        .map(|l| terms.group_ln_lik(l, v[l]))
        .sum();
    Ok(prior + lik)
}

fn prior_ln_density(v: &[f64], params: GmddpParams) -> f64 {
    let a = params.idiosyncratic_mass();
    let total = params.groups as f64 * a + params.common_mass();
    let odds: f64 = v.iter().map(|&x| x / (1.0 - x)).sum();
    v.iter()
        .map(|&x| (a - 1.0) * ln(x) - (a + 1.0) * ln_1p(-x))
        .sum::<f64>()
        - total * ln_1p(odds)
}

fn logit(v: f64) -> f64 {
    ln(v) - ln_1p(-v)
}

fn expit(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + exp(-y))
    } else {
        let e = exp(y);
        e / (1.0 + e)
    }
}

/// Coordinate-wise random-walk Metropolis on `logit(w_l)` with per-coordinate
/// step sizes adapted toward [`TARGET_ACCEPTANCE`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightUpdater {
    ln_step: Vec<f64>,
    adaptations: usize,
    accepted: Vec<usize>,
    proposed: Vec<usize>,
}

impl WeightUpdater {
    pub fn new(groups: usize) -> Self {
        Self {
            ln_step: vec![0.0; groups],
            adaptations: 0,
            accepted: vec![0; groups],
            proposed: vec![0; groups],
        }
    }

    pub fn steps(&self) -> Vec<f64> {
        self.ln_step.iter().map(|&s| exp(s)).collect()
    }

    /// Acceptance rate per coordinate over the non-adaptive sweeps.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.accepted
            .iter()
            .zip(&self.proposed)
            .map(|(&a, &p)| {
                if p == 0 {
                    f64::NAN
                } else {
                    a as f64 / p as f64
                }
            })
            .collect()
    }

    /// One sweep over all coordinates. Step sizes move only when `adapt`
    /// is set; acceptance is tallied only when it is not.
    pub fn sweep<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        w: &mut [f64],
        terms: &MixtureTerms,
        params: GmddpParams,
        adapt: bool,
    ) -> Result<()> {
        if w.len() != params.groups || self.ln_step.len() != params.groups {
            return Err(Error::DimensionMismatch {
                expected: params.groups,
                found: w.len(),
            });
        }
        let gain = 1.0 / powf(self.adaptations as f64 + 1.0, 0.6);
        for l in 0..w.len() {
            let current = w[l];
            let y = logit(current);
            let proposal = clamp_open(expit(y + exp(self.ln_step[l]) * standard_normal(rng)));
            let log_target = |x: f64, w: &mut [f64]| {
                w[l] = x;
                prior_ln_density(w, params) + terms.group_ln_lik(l, x) + ln(x) + ln_1p(-x)
            };
            let before = log_target(current, w);
            let after = log_target(proposal, w);
            let accept = ln(uniform_open(rng)) < after - before;
            w[l] = if accept { proposal } else { current };
            if adapt {
                self.ln_step[l] += gain * (accept as u8 as f64 - TARGET_ACCEPTANCE);
            } else {
                self.proposed[l] += 1;
                self.accepted[l] += accept as usize;
            }
        }
        if adapt {
            self.adaptations += 1;
        }
        Ok(())
    }
}

/// Atoms and cluster sizes of one process.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProcessClusters {
    pub atoms: Vec<Atom>,
    pub counts: Vec<usize>,
}

impl ProcessClusters {
    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Allocation of every observation to a cluster of either its group's
/// idiosyncratic process or the common one, plus the weights `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct GmddpState {
    /// Process of each observation: 0 for common, `g + 1` for its group `g`.
    process: Vec<usize>,
    /// Cluster index within that process.
    labels: Vec<usize>,
    processes: Vec<ProcessClusters>,
    w: Vec<f64>,
}

impl GmddpState {
    /// Every observation idiosyncratic, one cluster per nonempty group with an
    /// atom drawn from its posterior given the group's data; `w` from the
    /// prior.
    pub fn new<R: Rng + ?Sized>(
        rng: &mut R,
        data: &GroupedData,
        params: GmddpParams,
        base: &BaseMeasure,
    ) -> Result<Self> {
        if data.n_groups() != params.groups {
            return Err(Error::DimensionMismatch {
                expected: params.groups,
                found: data.n_groups(),
            });
        }
        let mut processes = vec![ProcessClusters::default(); params.groups + 1];
        let sizes = data.group_sizes();
        for (l, &size) in sizes.iter().enumerate() {
            if size > 0 {
                let group = data.group(l);
                let stats = SuffStats::from_points(group.dim(), group.iter());
                processes[l + 1] = ProcessClusters {
                    atoms: vec![base.posterior_draw(rng, &stats)?],
                    counts: vec![size],
                };
            }
        }
        let process = data.groups().iter().map(|&g| g + 1).collect();
        let w = gmddp_prior_weights(rng, params)?;
        Ok(Self {
            process,
            labels: vec![0; data.len()],
            processes,
            w,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn set_weights(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                found: w.len(),
            });
        }
        self.w = w;
        Ok(())
    }

    /// Process index (0 = common) of every observation.
    pub fn process_flags(&self) -> &[usize] {
        &self.process
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn processes(&self) -> &[ProcessClusters] {
        &self.processes
    }

    /// Distinct atoms over all processes.
    pub fn k(&self) -> usize {
        self.processes.iter().map(ProcessClusters::k).sum()
    }

    /// Share of observations allocated to the common process.
    pub fn common_share(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        self.process.iter().filter(|&&p| p == 0).count() as f64 / self.n() as f64
    }

    /// Distinct clusters used by each group.
    pub fn group_cluster_counts(&self, data: &GroupedData) -> Vec<usize> {
        let mut seen: Vec<Vec<bool>> = vec![vec![false; self.processes[0].k()]; data.n_groups()];
        let mut counts = vec![0; data.n_groups()];
        for (i, &g) in data.groups().iter().enumerate() {
            if self.process[i] == 0 && !seen[g][self.labels[i]] {
                seen[g][self.labels[i]] = true;
                counts[g] += 1;
            }
        }
        for (l, c) in counts.iter_mut().enumerate() {
            *c += self.processes[l + 1].k();
        }
        counts
    }

    /// Recomputes every count from the flags and labels and compares it with
    /// the maintained one.
    pub fn check(&self, data: &GroupedData) -> Result<()> {
        if data.len() != self.n() || self.process.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: data.len(),
            });
        }
        if self.processes.len() != data.n_groups() + 1 || self.w.len() != data.n_groups() {
            return Err(domain("process count disagrees with group count"));
        }
        let mut fresh: Vec<Vec<usize>> = self.processes.iter().map(|p| vec![0; p.k()]).collect();
        for (i, &g) in data.groups().iter().enumerate() {
            let p = self.process[i];
            if p != 0 && p != g + 1 {
                return Err(domain(format!(
                    "observation {i} of group {g} sits in process {p}"
                )));
            }
            let c = self.labels[i];
            if c >= fresh[p].len() {
                return Err(domain(format!("label {c} out of range in process {p}")));
            }
            fresh[p][c] += 1;
        }
        for (p, (f, proc)) in fresh.iter().zip(&self.processes).enumerate() {
            if *f != proc.counts || proc.counts.len() != proc.atoms.len() {
                return Err(domain(format!(
                    "counts of process {p} disagree with the allocation"
                )));
            }
            if f.contains(&0) {
                return Err(domain(format!("process {p} holds an empty cluster")));
            }
        }
        if self.w.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(domain("weights must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Redraws every atom from its conjugate full conditional given the
    /// observations allocated to it, whatever their group.
    pub fn accelerate<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        data: &GroupedData,
        base: &BaseMeasure,
    ) -> Result<()> {
        let dim = data.data().dim();
        let mut stats: Vec<Vec<SuffStats>> = self
            .processes
            .iter()
            .map(|p| vec![SuffStats::empty(dim); p.k()])
            .collect();
        for (i, x) in data.data().iter().enumerate() {
            stats[self.process[i]][self.labels[i]].push(x);
        }
        for (proc, st) in self.processes.iter_mut().zip(stats) {
            for (atom, s) in proc.atoms.iter_mut().zip(st) {
                *atom = base.posterior_draw(rng, &s)?;
            }
        }
        Ok(())
    }

    /// Sum over groups of the deviance of each group's empirical mixture
    /// `sum_j (n_jl / n_l) K(x; theta_j)`.
    pub fn deviance(&self, data: &GroupedData, mode: DevianceMode) -> Result<f64> {
        let mut total = 0.0;
        for l in 0..data.n_groups() {
            let rows: Vec<usize> = (0..self.n()).filter(|&i| data.groups()[i] == l).collect();
            if rows.is_empty() {
                continue;
            }
            let common = &self.processes[0];
            let own = &self.processes[l + 1];
            let mut counts = vec![0; common.k() + own.k()];
            for &i in &rows {
                let offset = if self.process[i] == 0 { 0 } else { common.k() };
                counts[offset + self.labels[i]] += 1;
            }
            let atoms: Vec<Atom> = common.atoms.iter().chain(&own.atoms).cloned().collect();
            total += deviance(&counts, &atoms, &data.data().subset(&rows), mode)?;
        }
        Ok(total)
    }
}

/// Summaries of all processes and the weights used in one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct GmddpSummary {
    /// Index 0 is the common process.
    pub summaries: Vec<MeasureSummary>,
    pub w: Vec<f64>,
}

impl GmddpSummary {
    /// `ln f_l(x)` for `f_l = w_l q^(l) + (1 - w_l) q^(0)`.
    pub fn ln_group_density(&self, l: usize, x: &[f64]) -> f64 {
        let own = &self.summaries[l + 1];
        let common = &self.summaries[0];
        let a = ln(self.w[l]) + own.ln_density(x, &own.ln_component_weights());
        let b = ln_1p(-self.w[l]) + common.ln_density(x, &common.ln_component_weights());
        ln_add_exp(a, b)
    }

    /// Density realization of group `l` at each point.
    pub fn group_density(&self, l: usize, points: &Dataset) -> Vec<f64> {
        let own = &self.summaries[l + 1];
        let common = &self.summaries[0];
        let (lo, lc) = (own.ln_component_weights(), common.ln_component_weights());
        let (a, b) = (ln(self.w[l]), ln_1p(-self.w[l]));
        points
            .iter()
            .map(|x| {
                exp(ln_add_exp(
                    a + own.ln_density(x, &lo),
                    b + common.ln_density(x, &lc),
                ))
            })
            .collect()
    }
}

/// Normalized four-branch allocation probabilities of an observation of group
/// `l`: own auxiliary atoms, own fixed atoms, common auxiliary atoms, common
/// fixed atoms.
pub fn gmddp_allocation_probabilities(
    summary: &GmddpSummary,
    l: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let ln_w = branch_ln_weights(summary, l, x);
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateLikelihood);
    }
    let w: Vec<f64> = ln_w.iter().map(|v| exp(v - max)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

fn branch_ln_weights(summary: &GmddpSummary, l: usize, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    push_branch(&mut out, &summary.summaries[l + 1], ln(summary.w[l]), x);
    push_branch(&mut out, &summary.summaries[0], ln_1p(-summary.w[l]), x);
    out
}

fn push_branch(out: &mut Vec<f64>, s: &MeasureSummary, shift: f64, x: &[f64]) {
    out.extend(
        s.components()
            .zip(s.ln_component_weights())
            .map(|(a, lw)| shift + lw + a.ln_density(x)),
    );
}

/// One importance conditional sweep.
///
/// Draws the summary of every process from its posterior given the current
/// clusters, updates `w` by one Metropolis sweep, reallocates every
/// observation among its group's and the common components, and redraws the
/// atoms. Observation `i` uses the substream `(iteration, i)`.
#[allow(clippy::too_many_arguments)]
pub fn gmddp_ics_step(
    rng: &mut RngStream,
    iteration: u64,
    state: &mut GmddpState,
    updater: &mut WeightUpdater,
    adapt: bool,
    data: &GroupedData,
    params: GmddpParams,
    base: &BaseMeasure,
    m: usize,
) -> Result<GmddpSummary> {
    if data.data().dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            found: data.data().dim(),
        });
    }
    let summaries = state
        .processes
        .iter()
        .enumerate()
        .map(|(p, proc)| {
            let counts = PartitionCounts::new(proc.counts.clone())?;
            MeasureSummary::draw(rng, proc.atoms.clone(), &counts, params.process(p), base, m)
        })
        .collect::<Result<Vec<_>>>()?;

    let ln_weights: Vec<Vec<f64>> = summaries
        .iter()
        .map(MeasureSummary::ln_component_weights)
        .collect();
    let pairs = map_indexed(data.len(), |_, i| {
        let x = data.data().obs(i);
        let own = data.groups()[i] + 1;
        Ok((
            summaries[own].ln_density(x, &ln_weights[own]),
            summaries[0].ln_density(x, &ln_weights[0]),
        ))
    })?;
    let terms = MixtureTerms {
        groups: data.groups().to_vec(),
        ln_own: pairs.iter().map(|p| p.0).collect(),
        ln_common: pairs.iter().map(|p| p.1).collect(),
    };
    updater.sweep(rng, &mut state.w, &terms, params, adapt)?;
    let summary = GmddpSummary {
        summaries,
        w: state.w.clone(),
    };

    let root = &*rng;
    let choices = map_indexed(data.len(), |s, i| {
        let g = data.groups()[i];
        s.ln_w.clear();
        s.ln_w
            .extend(branch_ln_weights(&summary, g, data.data().obs(i)));
        categorical_ln_draw(
            &mut root.substream(iteration, i as u64),
            &s.ln_w,
            &mut s.cum,
        )
    })?;

    let n_options: Vec<usize> = summary
        .summaries
        .iter()
        .map(MeasureSummary::n_components)
        .collect();
    let mut relabel: Vec<Vec<usize>> = n_options.iter().map(|&k| vec![usize::MAX; k]).collect();
    let mut processes = vec![ProcessClusters::default(); summary.summaries.len()];
    for (i, &choice) in choices.iter().enumerate() {
        let own = data.groups()[i] + 1;
        let (p, o) = if choice < n_options[own] {
            (own, choice)
        } else {
            (0, choice - n_options[own])
        };
        if relabel[p][o] == usize::MAX {
            relabel[p][o] = processes[p].k();
            let atom = summary.summaries[p]
                .components()
                .nth(o)
                .cloned()
                .ok_or(Error::DegenerateLikelihood)?;
            processes[p].atoms.push(atom);
            processes[p].counts.push(0);
        }
        let c = relabel[p][o];
        processes[p].counts[c] += 1;
        state.process[i] = p;
        state.labels[i] = c;
    }
    state.processes = processes;
    state.accelerate(rng, data, base)?;
    Ok(summary)
}

/// Prior-predictive distinct-cluster counts per group: `w` from its prior,
/// then `sizes[l]` draws in group `l`, each routed to the group's own urn
/// with probability `w_l` and to the shared common urn otherwise. Returns one
/// row of per-group counts per replicate.
pub fn simulate_group_cluster_counts<R: Rng + ?Sized>(
    rng: &mut R,
    params: GmddpParams,
    sizes: &[usize],
    reps: usize,
) -> Result<Vec<Vec<usize>>> {
    if sizes.len() != params.groups {
        return Err(Error::DimensionMismatch {
            expected: params.groups,
            found: sizes.len(),
        });
    }
    let mut out = Vec::with_capacity(reps);
    for _ in 0..reps {
        let w = gmddp_prior_weights(rng, params)?;
        let mut common: Vec<usize> = Vec::new();
        let mut row = Vec::with_capacity(sizes.len());
        for (l, &n) in sizes.iter().enumerate() {
            let mut own: Vec<usize> = Vec::new();
            let mut used_common: Vec<bool> = vec![false; common.len()];
            let mut distinct = 0;
            for _ in 0..n {
                if uniform_open(rng) < w[l] {
                    match urn_predictive_choice(rng, &own, params.process(l + 1)) {
                        UrnChoice::Existing(j) => own[j] += 1,
                        UrnChoice::Fresh => {
                            own.push(1);
                            distinct += 1;
                        }
                    }
                } else {
                    let j = match urn_predictive_choice(rng, &common, params.process(0)) {
                        UrnChoice::Existing(j) => {
                            common[j] += 1;
                            j
                        }
                        UrnChoice::Fresh => {
                            common.push(1);
                            used_common.push(false);
                            common.len() - 1
                        }
                    };
                    if !used_common[j] {
                        used_common[j] = true;
                        distinct += 1;
                    }
                }
            }
            row.push(distinct);
        }
        out.push(row);
    }
    Ok(out)
}

/// Settings of one GM-DDP chain.
#[derive(Clone, Debug, PartialEq)]
pub struct GmddpConfig {
    pub params: GmddpParams,
    pub base: BaseMeasure,
    pub m: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Points at which each group's density is evaluated.
    pub eval_points: Option<Dataset>,
    pub deviance_mode: DevianceMode,
}

impl GmddpConfig {
    pub fn new(params: GmddpParams, base: BaseMeasure) -> Self {
        Self {
            params,
            base,
            m: crate::samplers::DEFAULT_M,
            iterations: 1500,
            burnin: 500,
            seed: 0,
            eval_points: None,
            deviance_mode: DevianceMode::Log,
        }
    }
}

/// Retained per-iteration records of a GM-DDP chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GmddpTrace {
    /// Distinct atoms over all processes.
    pub k_n: Vec<usize>,
    pub group_k: Vec<Vec<usize>>,
    pub deviance: Vec<f64>,
    pub common_share: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    /// `densities[r][l]`: group `l`'s realization at retained iteration `r`.
    pub densities: Vec<Vec<Vec<f64>>>,
    pub seconds: Vec<f64>,
    /// Post-burn-in acceptance rate of each weight coordinate.
    pub acceptance: Vec<f64>,
    pub total_seconds: f64,
}

impl GmddpTrace {
    pub fn len(&self) -> usize {
        self.k_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_n.is_empty()
    }

    /// Realizations of group `l` across retained iterations.
    pub fn group_realizations(&self, l: usize) -> Vec<Vec<f64>> {
        self.densities.iter().map(|d| d[l].clone()).collect()
    }
}

/// Runs one GM-DDP chain. Step sizes of the weight update adapt during
/// burn-in only.
pub fn run_gmddp(
    config: &GmddpConfig,
    data: &GroupedData,
    clock: &mut dyn Clock,
) -> Result<GmddpTrace> {
    if config.iterations <= config.burnin {
        return Err(domain(format!(
            "iterations ({}) must exceed burn-in ({})",
            config.iterations, config.burnin
        )));
    }
    if config.m == 0 {
        return Err(domain("auxiliary sample size m must be at least 1"));
    }
    if data.is_empty() {
        return Err(domain("cannot run a chain without data"));
    }
    if let Some(p) = &config.eval_points {
        if p.dim() != config.base.dim() {
            return Err(domain(
                "evaluation points and base measure differ in dimension",
            ));
        }
    }
    let start = clock.seconds();
    let params = config.params;
    let mut rng = RngStream::chain(config.seed, 0);
    let mut state = GmddpState::new(&mut rng, data, params, &config.base)?;
    let mut updater = WeightUpdater::new(params.groups());
    let mut trace = GmddpTrace::default();
    for it in 0..config.iterations {
        let adapt = it < config.burnin;
        let summary = gmddp_ics_step(
            &mut rng,
            it as u64,
            &mut state,
            &mut updater,
            adapt,
            data,
            params,
            &config.base,
            config.m,
        )?;
        if adapt {
            continue;
        }
        trace.k_n.push(state.k());
        trace.group_k.push(state.group_cluster_counts(data));
        trace
            .deviance
            .push(state.deviance(data, config.deviance_mode)?);
        trace.common_share.push(state.common_share());
        trace.w.push(state.w.clone());
        if let Some(p) = &config.eval_points {
            trace.densities.push(
                (0..params.groups())
                    .map(|l| summary.group_density(l, p))
                    .collect(),
            );
        }
        trace.seconds.push(clock.seconds() - start);
    }
    trace.acceptance = updater.acceptance_rates();
    trace.total_seconds = clock.seconds() - start;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use crate::model::NigBase;
    use crate::pyprocess::AuxiliarySample;
    use crate::samplers::NoClock;
    use crate::testutil::mean_and_se;

    fn base() -> BaseMeasure {
        BaseMeasure::Nig(NigBase::new(0.0, 0.2, 2.0, 1.0).unwrap())
    }

    fn peak(p: f64) -> Atom {
        Atom::normal(0.0, 1.0 / (2.0 * PI * p * p)).unwrap()
    }

    #[test]
    fn parameter_domain() {
        assert!(GmddpParams::new(0.0, 0.5, 2).is_err());
        assert!(GmddpParams::new(1.0, 1.0, 2).is_err());
        assert!(GmddpParams::new(1.0, 0.0, 2).is_err());
        assert!(GmddpParams::new(1.0, 0.5, 0).is_err());
        let p = GmddpParams::new(2.0, 0.25, 3).unwrap();
        assert!(
            (p.idiosyncratic_mass() - 0.5).abs() < 1e-15 && (p.common_mass() - 1.5).abs() < 1e-15
        );
    }

    #[test]
    fn prior_weights_have_beta_marginals() {
        let p = GmddpParams::new(1.0, 0.5, 2).unwrap();
        let mut rng = RngStream::new(1, 0);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| gmddp_prior_weights(&mut rng, p).unwrap())
            .collect();
        for l in 0..2 {
            let col: Vec<f64> = draws.iter().map(|w| w[l]).collect();
            assert!(col.iter().all(|&v| v > 0.0 && v < 1.0));
            let (mean, _) = mean_and_se(&col);
            assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
            // Beta(1/2, 1/2) has variance 1/8
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
            assert!((var - 0.125).abs() < 0.003, "var {var}");
        }
        let near_one = GmddpParams::new(1.0, 1.0 - 1e-9, 2).unwrap();
        let col: Vec<f64> = (0..2000)
            .map(|_| gmddp_prior_weights(&mut rng, near_one).unwrap()[0])
            .collect();
        assert!(mean_and_se(&col).0 > 0.999);
    }

    #[test]
    fn weight_density_reduces_to_prior_and_beta() {
        let p = GmddpParams::new(1.5, 0.3, 2).unwrap();
        let v = [0.5, 0.5];
        assert!(w_logdensity_fullcond(&v, &MixtureTerms::empty(), p)
            .unwrap()
            .is_finite());
        assert!(w_logdensity_fullcond(&[0.0, 0.5], &MixtureTerms::empty(), p).is_err());
        assert!(w_logdensity_fullcond(&[0.5], &MixtureTerms::empty(), p).is_err());
        // with one group the target is Beta(theta z, theta (1 - z)) up to a constant
        let one = GmddpParams::new(1.5, 0.3, 1).unwrap();
        let (a, b) = (0.45, 1.05);
        let beta = |x: f64| (a - 1.0) * ln(x) + (b - 1.0) * ln(1.0 - x);
        let d = |x: f64| w_logdensity_fullcond(&[x], &MixtureTerms::empty(), one).unwrap();
        for x in [0.1, 0.3, 0.77] {
            assert!(((d(x) - d(0.5)) - (beta(x) - beta(0.5))).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_density_includes_mixture_terms() {
        let p = GmddpParams::new(1.0, 0.5, 2).unwrap();
        let terms = MixtureTerms {
            groups: vec![0, 1],
            ln_own: vec![ln(0.2), ln(0.1)],
            ln_common: vec![ln(0.4), ln(0.3)],
        };
        let v = [0.25, 0.6];
        let with = w_logdensity_fullcond(&v, &terms, p).unwrap();
        let without = w_logdensity_fullcond(&v, &MixtureTerms::empty(), p).unwrap();
        let want = ln(0.25 * 0.2 + 0.75 * 0.4) + ln(0.6 * 0.1 + 0.4 * 0.3);
        assert!((with - without - want).abs() < 1e-12);
    }

    #[test]
    fn metropolis_on_empty_data_matches_prior_moments() {
        let p = GmddpParams::new(1.0, 0.5, 2).unwrap();
        let mut rng = RngStream::new(4, 0);
        let mut updater = WeightUpdater::new(2);
        let mut w = vec![0.5, 0.5];
        for _ in 0..2000 {
            updater
                .sweep(&mut rng, &mut w, &MixtureTerms::empty(), p, true)
                .unwrap();
        }
        let mut first = Vec::new();
        let mut cross = Vec::new();
        for _ in 0..200_000 {
            updater
                .sweep(&mut rng, &mut w, &MixtureTerms::empty(), p, false)
                .unwrap();
            first.push(w[0]);
            cross.push(w[0] * w[1]);
        }
        let rate = updater.acceptance_rates()[0];
        assert!((rate - TARGET_ACCEPTANCE).abs() < 0.1, "acceptance {rate}");
        let prior: Vec<Vec<f64>> = (0..200_000)
            .map(|_| gmddp_prior_weights(&mut rng, p).unwrap())
            .collect();
        let prior_cross: Vec<f64> = prior.iter().map(|w| w[0] * w[1]).collect();
        for (chain, exact) in [(&first, 0.5), (&cross, mean_and_se(&prior_cross).0)] {
            let ess = crate::diagnostics::ess(chain).unwrap();
            let (mean, _) = mean_and_se(chain);
            let sd = (chain.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / chain.len() as f64)
                .sqrt();
            let se = sd / ess.sqrt();
            assert!(
                (mean - exact).abs() < 3.0 * se + 1e-3,
                "{mean} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn four_branch_weights() {
        let aux = |a: Atom| AuxiliarySample {
            atoms: vec![a],
            multiplicities: vec![1],
        };
        let summary = GmddpSummary {
            summaries: vec![
                MeasureSummary {
                    fixed_atoms: vec![],
                    aux: aux(peak(0.4)),
                    weights: vec![1.0],
                },
                MeasureSummary {
                    fixed_atoms: vec![],
                    aux: aux(peak(0.2)),
                    weights: vec![1.0],
                },
            ],
            w: vec![0.5],
        };
        let p = gmddp_allocation_probabilities(&summary, 0, &[0.0]).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12 && (p[1] - 2.0 / 3.0).abs() < 1e-12);
        let f = summary.group_density(0, &Dataset::univariate(vec![0.0]).unwrap());
        assert!((f[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn prior_group_counts_follow_the_dirichlet_recursion() {
        let p = GmddpParams::new(1.0, 0.5, 2).unwrap();
        let mut rng = RngStream::new(8, 0);
        let rows = simulate_group_cluster_counts(&mut rng, p, &[50, 50], 20_000).unwrap();
        let want = crate::pyprocess::expected_cluster_count(50, PyParams::dp(1.0).unwrap());
        for l in 0..2 {
            let col: Vec<f64> = rows.iter().map(|r| r[l] as f64).collect();
            let (mean, se) = mean_and_se(&col);
            assert!(
                (mean - want).abs() < 3.0 * se,
                "group {l}: {mean} vs {want} (se {se})"
            );
        }
    }

    #[test]
    fn single_observation_is_always_allocated() {
        let p = GmddpParams::new(1.0, 0.5, 2).unwrap();
        let data = GroupedData::new(Dataset::univariate(vec![0.3]).unwrap(), vec![1], 2).unwrap();
        let mut rng = RngStream::chain(2, 0);
        let mut state = GmddpState::new(&mut rng, &data, p, &base()).unwrap();
        let mut updater = WeightUpdater::new(2);
        for it in 0..50 {
            gmddp_ics_step(
                &mut rng,
                it,
                &mut state,
                &mut updater,
                true,
                &data,
                p,
                &base(),
                5,
            )
            .unwrap();
            state.check(&data).unwrap();
            assert_eq!(state.k(), 1);
        }
    }

    #[test]
    fn grouped_labels_are_ordered() {
        let data = Dataset::univariate(vec![0.0, 1.0, 2.0]).unwrap();
        let (g, labels) = GroupedData::from_labels(data, &[7, 2, 7]).unwrap();
        assert_eq!(labels, vec![2, 7]);
        assert_eq!(g.groups(), &[1, 0, 1]);
        assert_eq!(g.group_sizes(), vec![1, 2]);
        assert_eq!(g.group(1).values(), &[0.0, 2.0]);
        assert!(GroupedData::new(Dataset::univariate(vec![0.0]).unwrap(), vec![2], 2).is_err());
    }

    #[test]
    fn chain_records_group_densities() {
        let p = GmddpParams::new(1.0, 0.5, 2).unwrap();
        let (labels, values) = crate::synthetic::two_group(&mut RngStream::new(3, 0), 30);
        let labels: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
        let (data, _) = GroupedData::from_labels(values, &labels).unwrap();
        let mut c = GmddpConfig::new(p, base());
        c.iterations = 40;
        c.burnin = 20;
        c.eval_points = Some(Dataset::univariate(vec![-2.0, 0.0, 5.0]).unwrap());
        let t = run_gmddp(&c, &data, &mut NoClock).unwrap();
        assert_eq!(t.len(), 20);
        assert_eq!(t.densities[0].len(), 2);
        assert_eq!(t.acceptance.len(), 2);
        assert!(t.deviance.iter().all(|d| d.is_finite()));
        assert_eq!(run_gmddp(&c, &data, &mut NoClock).unwrap(), t);
    }
}

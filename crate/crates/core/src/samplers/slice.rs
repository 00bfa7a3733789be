use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::ics::check_data;
use super::map_indexed;
use crate::error::{domain, Result};
use crate::math::{exp, ln, ln_add_exp};
use crate::model::{Atom, BaseMeasure, Dataset, SuffStats};
use crate::pyprocess::{ExpectedWeights, PyParams, StickBreaker};
use crate::rng::{categorical_ln_draw, ln_beta_pair, uniform_open, RngStream};

/// Which bound the slice variables use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceVariant {
    /// `u_i ~ U(0, p_{c_i})`.
    Dependent,
    /// `u_i ~ U(0, xi_{c_i})` with `xi_j = E[p_j]`.
    Independent,
}

/// Work done by one slice sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SliceReport {
    /// Sticks held after extension.
    pub jumps: usize,
    /// Extension stopped at the cap before covering every slice.
    pub cap_hit: bool,
}

/// Stick-breaking prefix, stick atoms, allocations and slice variables.
///
/// Sticks keep their stick-breaking order; sticks below the largest label
/// may be empty.
#[derive(Clone, Debug)]
pub struct SliceState {
    variant: SliceVariant,
    labels: Vec<usize>,
    counts: Vec<usize>,
    atoms: Vec<Atom>,
    ln_v: Vec<f64>,
    ln_1mv: Vec<f64>,
    ln_p: Vec<f64>,
    ln_u: Vec<f64>,
    xi: ExpectedWeights,
}

impl SliceState {
    /// Every observation on the first stick, whose weight and atom are drawn
    /// from their conditionals given that allocation.
    pub fn new(
        rng: &mut RngStream,
        data: &Dataset,
        params: PyParams,
        base: &BaseMeasure,
        variant: SliceVariant,
    ) -> Result<Self> {
        let n = data.len();
        if n == 0 {
            return Err(domain("slice sampler needs data"));
        }
        let atom = base.posterior_draw(rng, &SuffStats::from_points(data.dim(), data.iter()))?;
        let mut state = Self {
            variant,
            labels: vec![0; n],
            counts: vec![n],
            atoms: vec![atom],
            ln_v: vec![0.0],
            ln_1mv: vec![0.0],
            ln_p: vec![0.0],
            ln_u: vec![0.0; n],
            xi: ExpectedWeights::new(params),
        };
        state.update_sticks(rng, params)?;
        state.draw_slices(rng);
        Ok(state)
    }

    pub fn variant(&self) -> SliceVariant {
        self.variant
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Sticks currently held (the largest label plus one after a sweep).
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> Vec<f64> {
        self.ln_p.iter().map(|&l| exp(l)).collect()
    }

    pub fn slices(&self) -> Vec<f64> {
        self.ln_u.iter().map(|&l| exp(l)).collect()
    }

    /// Mass not assigned to the held sticks.
    pub fn leftover(&self) -> f64 {
        exp(self.ln_1mv.iter().sum::<f64>())
    }

    /// Number of nonempty sticks.
    pub fn k(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Counts and atoms of the nonempty sticks.
    pub fn occupied(&self) -> (Vec<usize>, Vec<Atom>) {
        self.counts
            .iter()
            .zip(&self.atoms)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, a)| (c, a.clone()))
            .unzip()
    }

    fn ln_bound(&self, j: usize) -> f64 {
        match self.variant {
            SliceVariant::Dependent => self.ln_p[j],
            SliceVariant::Independent => ln(self.xi.get(j)),
        }
    }

    /// Verifies counts, label range, the stick-breaking identity and every
    /// slice constraint.
    pub fn check(&self) -> Result<()> {
        let mut fresh = vec![0; self.len()];
        for &c in &self.labels {
            if c >= self.len() {
                return Err(domain(format!(
                    "label {c} beyond the {} held sticks",
                    self.len()
                )));
            }
            fresh[c] += 1;
        }
        if fresh != self.counts {
            return Err(domain("stick counts disagree with labels"));
        }
        let total: f64 = self.weights().iter().sum::<f64>() + self.leftover();
        if (total - 1.0).abs() > 1e-9 {
            return Err(domain(format!("stick weights and leftover sum to {total}")));
        }
        for (i, (&c, &lu)) in self.labels.iter().zip(&self.ln_u).enumerate() {
            if !(lu < self.ln_bound(c)) {
                return Err(domain(format!("slice variable {i} violates its bound")));
            }
        }
        Ok(())
    }

    fn update_atoms(
        &mut self,
        rng: &mut RngStream,
        data: &Dataset,
        base: &BaseMeasure,
    ) -> Result<()> {
        let mut stats = vec![SuffStats::empty(data.dim()); self.len()];
        for (x, &c) in data.iter().zip(&self.labels) {
            stats[c].push(x);
        }
        for (atom, s) in self.atoms.iter_mut().zip(&stats) {
            *atom = base.posterior_draw(rng, s)?;
        }
        Ok(())
    }

    /// `v_j ~ Beta(1 - sigma + n_j, theta + j sigma + n_j^+)`, with `n_j^+`
    /// the number of observations on later sticks.
    pub(crate) fn update_sticks(&mut self, rng: &mut RngStream, params: PyParams) -> Result<()> {
        let mut after: usize = self.labels.len();
        let mut ln_rest = 0.0;
        for j in 0..self.len() {
            after -= self.counts[j];
            let a = 1.0 - params.sigma() + self.counts[j] as f64;
            let b = params.theta() + (j + 1) as f64 * params.sigma() + after as f64;
            let (lv, l1mv) = ln_beta_pair(rng, a, b)?;
            self.ln_v[j] = lv;
            self.ln_1mv[j] = l1mv;
            self.ln_p[j] = ln_rest + lv;
            ln_rest += l1mv;
        }
        Ok(())
    }

    fn draw_slices(&mut self, rng: &mut RngStream) {
        if self.variant == SliceVariant::Independent {
            self.xi.extend_to(self.len());
        }
        for i in 0..self.labels.len() {
            self.ln_u[i] = ln(uniform_open(rng)) + self.ln_bound(self.labels[i]);
        }
    }

    /// Adds sticks until every admissible index is held or the cap is reached.
    fn extend(
        &mut self,
        rng: &mut RngStream,
        params: PyParams,
        base: &BaseMeasure,
        cap: usize,
    ) -> Result<bool> {
        let min_u = self.ln_u.iter().copied().fold(f64::INFINITY, f64::min);
        let mut breaker = StickBreaker::resume(params, self.len() + 1, self.ln_1mv.iter().sum());
        loop {
            let uncovered = match self.variant {
                SliceVariant::Dependent => breaker.ln_rest(),
                SliceVariant::Independent => {
                    self.xi.extend_to(self.len());
                    self.xi.ln_leftover(self.len())
                }
            };
            if uncovered <= min_u {
                return Ok(false);
            }
            if self.len() >= cap {
                return Ok(true);
            }
            let before = breaker.ln_rest();
            let (lv, lp) = breaker.next_stick(rng);
            self.ln_v.push(lv);
            self.ln_1mv.push(breaker.ln_rest() - before);
            self.ln_p.push(lp);
            self.atoms.push(base.prior_draw(rng)?);
            self.counts.push(0);
        }
    }

    fn reallocate(&mut self, rng: &RngStream, iteration: u64, data: &Dataset) -> Result<()> {
        let len = self.len();
        let choices = match self.variant {
            SliceVariant::Dependent => {
                let mut order: Vec<usize> = (0..len).collect();
                order.sort_by(|&a, &b| self.ln_p[b].total_cmp(&self.ln_p[a]).then(a.cmp(&b)));
                let sorted_p: Vec<f64> = order.iter().map(|&j| self.ln_p[j]).collect();
                map_indexed(data.len(), |s, i| {
                    let x = data.obs(i);
                    let admissible = sorted_p.partition_point(|&lp| lp > self.ln_u[i]);
                    s.ln_w.clear();
                    s.ln_w.extend(
                        order[..admissible]
                            .iter()
                            .map(|&j| self.atoms[j].ln_density(x)),
                    );
                    let t = categorical_ln_draw(
                        &mut rng.substream(iteration, i as u64),
                        &s.ln_w,
                        &mut s.cum,
                    )?;
                    Ok(order[t])
                })?
            }
            SliceVariant::Independent => {
                self.xi.extend_to(len);
                let ln_xi: Vec<f64> = self.xi.values()[..len].iter().map(|&v| ln(v)).collect();
                let ln_ratio: Vec<f64> = self.ln_p.iter().zip(&ln_xi).map(|(p, x)| p - x).collect();
                map_indexed(data.len(), |s, i| {
                    let x = data.obs(i);
                    let admissible = ln_xi.partition_point(|&lx| lx > self.ln_u[i]);
                    s.ln_w.clear();
                    s.ln_w
                        .extend((0..admissible).map(|j| ln_ratio[j] + self.atoms[j].ln_density(x)));
                    categorical_ln_draw(
                        &mut rng.substream(iteration, i as u64),
                        &s.ln_w,
                        &mut s.cum,
                    )
                })?
            }
        };
        self.counts.iter_mut().for_each(|c| *c = 0);
        for (l, c) in self.labels.iter_mut().zip(choices) {
            *l = c;
            self.counts[c] += 1;
        }
        let keep = self.labels.iter().copied().max().map_or(0, |m| m + 1);
        self.atoms.truncate(keep);
        self.counts.truncate(keep);
        self.ln_v.truncate(keep);
        self.ln_1mv.truncate(keep);
        self.ln_p.truncate(keep);
        Ok(())
    }
}

/// One slice-efficient sweep: refresh atoms and stick weights given the
/// allocation, draw slice variables, extend the sticks to cover every slice
/// (up to `jump_cap`), reallocate each observation among its admissible
/// sticks and drop sticks beyond the largest label.
pub fn slice_step(
    rng: &mut RngStream,
    iteration: u64,
    state: &mut SliceState,
    data: &Dataset,
    params: PyParams,
    base: &BaseMeasure,
    jump_cap: usize,
) -> Result<SliceReport> {
    check_data(state.labels.len(), data, base)?;
    if jump_cap < state.len() {
        return Err(domain(format!(
            "jump cap {jump_cap} is below the {} held sticks",
            state.len()
        )));
    }
    state.update_atoms(rng, data, base)?;
    state.update_sticks(rng, params)?;
    state.draw_slices(rng);
    let cap_hit = state.extend(rng, params, base, jump_cap)?;
    let jumps = state.len();
    state.reallocate(rng, iteration, data)?;
    Ok(SliceReport { jumps, cap_hit })
}

/// `sum_j p_j K(x; theta_j) + leftover g(x)` over the held sticks, `g` being
/// the prior predictive density.
pub fn slice_density(state: &SliceState, base: &BaseMeasure, points: &Dataset) -> Vec<f64> {
    let ln_rest: f64 = state.ln_1mv.iter().sum();
    points
        .iter()
        .map(|x| {
            let lf = state
                .atoms
                .iter()
                .zip(&state.ln_p)
                .fold(ln_rest + base.ln_marginal(x), |acc, (a, lp)| {
                    ln_add_exp(acc, lp + a.ln_density(x))
                });
            exp(lf)
        })
        .collect()
}

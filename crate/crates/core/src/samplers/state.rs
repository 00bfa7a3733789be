use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::model::{Atom, BaseMeasure, Dataset, SuffStats};
use crate::pyprocess::PartitionCounts;

/// Cluster labels, cluster sizes and distinct atoms of one posterior sample.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationState {
    labels: Vec<usize>,
    atoms: Vec<Atom>,
    counts: Vec<usize>,
}

impl AllocationState {
    /// All `n` observations in a single cluster.
    pub fn single_cluster(n: usize, atom: Atom) -> Self {
        Self {
            labels: vec![0; n],
            atoms: vec![atom],
            counts: vec![n],
        }
    }

    /// Labels are zero-based indices into `atoms`; every atom must be used.
    pub fn from_labels(labels: Vec<usize>, atoms: Vec<Atom>) -> Result<Self> {
        let mut counts = vec![0; atoms.len()];
        for &c in &labels {
            if c >= atoms.len() {
                return Err(domain(format!("label {c} has no atom")));
            }
            counts[c] += 1;
        }
        let state = Self {
            labels,
            atoms,
            counts,
        };
        state.check()?;
        Ok(state)
    }

    /// Builds a state from arbitrary option indices (one per observation),
    /// numbering clusters by first appearance. `atom_of` maps an option to
    /// its atom.
    pub(crate) fn from_choices(
        choices: &[usize],
        n_options: usize,
        atom_of: impl Fn(usize) -> Atom,
    ) -> Self {
        let mut relabel = vec![usize::MAX; n_options];
        let mut atoms = Vec::new();
        let mut counts = Vec::new();
        let labels = choices
            .iter()
            .map(|&o| {
                if relabel[o] == usize::MAX {
                    relabel[o] = atoms.len();
                    atoms.push(atom_of(o));
                    counts.push(0);
                }
                counts[relabel[o]] += 1;
                relabel[o]
            })
            .collect();
        Self {
            labels,
            atoms,
            counts,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn partition(&self) -> PartitionCounts {
        // counts are positive by invariant
        PartitionCounts::new(self.counts.clone()).unwrap_or_default()
    }

    /// Verifies that counts match the labels and that no cluster is empty.
    pub fn check(&self) -> Result<()> {
        if self.counts.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.atoms.len(),
                found: self.counts.len(),
            });
        }
        let mut fresh = vec![0; self.atoms.len()];
        for &c in &self.labels {
            if c >= fresh.len() {
                return Err(domain(format!("label {c} out of range")));
            }
            fresh[c] += 1;
        }
        if fresh != self.counts {
            return Err(domain("cluster counts disagree with labels"));
        }
        if let Some(j) = fresh.iter().position(|&c| c == 0) {
            return Err(domain(format!("cluster {j} is empty")));
        }
        Ok(())
    }

    pub(crate) fn stats(&self, data: &Dataset) -> Vec<SuffStats> {
        let mut stats = vec![SuffStats::empty(data.dim()); self.k()];
        for (x, &c) in data.iter().zip(&self.labels) {
            stats[c].push(x);
        }
        stats
    }

    /// Redraws every atom from its conjugate full conditional.
    pub fn accelerate<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        data: &Dataset,
        base: &BaseMeasure,
    ) -> Result<()> {
        let stats = self.stats(data);
        for (atom, s) in self.atoms.iter_mut().zip(stats) {
            *atom = base.posterior_draw(rng, &s)?;
        }
        Ok(())
    }

    /// Moves observation `i` out of its cluster. A cluster left empty is
    /// removed, the last cluster taking its index. Returns the removed
    /// cluster's atom, if any.
    pub(crate) fn detach(&mut self, i: usize) -> Option<Atom> {
        let c = self.labels[i];
        self.counts[c] -= 1;
        self.labels[i] = usize::MAX;
        if self.counts[c] > 0 {
            return None;
        }
        let last = self.atoms.len() - 1;
        if c != last {
            for l in self.labels.iter_mut() {
                if *l == last {
                    *l = c;
                }
            }
        }
        self.counts.swap_remove(c);
        Some(self.atoms.swap_remove(c))
    }

    pub(crate) fn attach(&mut self, i: usize, c: usize) {
        self.labels[i] = c;
        self.counts[c] += 1;
    }

    pub(crate) fn attach_new(&mut self, i: usize, atom: Atom) {
        self.labels[i] = self.atoms.len();
        self.atoms.push(atom);
        self.counts.push(1);
    }
}

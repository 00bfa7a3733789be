use alloc::format;
use alloc::vec::Vec;

use super::{ics_density, ics_step, marginal_density, marginal_step, slice_density, slice_step};
use super::{AllocationState, SliceState, SliceVariant, DEFAULT_JUMP_CAP, DEFAULT_M};
use crate::diagnostics::{deviance, DevianceMode};
use crate::error::{domain, Result};
use crate::model::{BaseMeasure, Dataset, SuffStats};
use crate::pyprocess::PyParams;
use crate::rng::RngStream;

/// The exchangeable-mixture samplers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Ics,
    Marginal,
    SliceDependent,
    SliceIndependent,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ics,
        Algorithm::Marginal,
        Algorithm::SliceDependent,
        Algorithm::SliceIndependent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ics => "ics",
            Algorithm::Marginal => "marginal",
            Algorithm::SliceDependent => "slice-dep",
            Algorithm::SliceIndependent => "slice-indep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    fn slice_variant(self) -> Option<SliceVariant> {
        match self {
            Algorithm::SliceDependent => Some(SliceVariant::Dependent),
            Algorithm::SliceIndependent => Some(SliceVariant::Independent),
            _ => None,
        }
    }
}

/// Source of elapsed time for trace records.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn seconds(&mut self) -> f64;
}

/// A clock that never advances.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&mut self) -> f64 {
        0.0
    }
}

/// Monotonic wall-clock time.
#[cfg(feature = "std")]
#[derive(Clone, Copy, Debug)]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl Default for WallClock {
    fn default() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn seconds(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Settings of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub algorithm: Algorithm,
    pub params: PyParams,
    pub base: BaseMeasure,
    /// Auxiliary sample size of the importance conditional sampler.
    pub m: usize,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Points at which each retained density realization is evaluated.
    pub eval_points: Option<Dataset>,
    pub jump_cap: usize,
    pub deviance_mode: DevianceMode,
}

impl ChainConfig {
    pub fn new(algorithm: Algorithm, params: PyParams, base: BaseMeasure) -> Self {
        Self {
            algorithm,
            params,
            base,
            m: DEFAULT_M,
            iterations: 1500,
            burnin: 500,
            seed: 0,
            eval_points: None,
            jump_cap: DEFAULT_JUMP_CAP,
            deviance_mode: DevianceMode::Log,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burnin {
            return Err(domain(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burnin
            )));
        }
        if self.m == 0 {
            return Err(domain("auxiliary sample size m must be at least 1"));
        }
        if self.jump_cap == 0 {
            return Err(domain("jump cap must be at least 1"));
        }
        if let Some(p) = &self.eval_points {
            if p.dim() != self.base.dim() {
                return Err(domain(
                    "evaluation points and base measure differ in dimension",
                ));
            }
        }
        Ok(())
    }
}

/// Per-iteration records of the retained part of a chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainTrace {
    pub k_n: Vec<usize>,
    pub deviance: Vec<f64>,
    /// One density realization per retained iteration, when evaluation
    /// points were given.
    pub densities: Vec<Vec<f64>>,
    /// Elapsed seconds since the chain started, at the end of each retained
    /// iteration.
    pub seconds: Vec<f64>,
    /// Sticks held per iteration by the slice samplers; zero otherwise.
    pub jumps: Vec<usize>,
    pub cap_hit: Vec<bool>,
    /// Cap hits over all iterations, burn-in included.
    pub total_cap_hits: usize,
    pub total_iterations: usize,
    pub total_seconds: f64,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.k_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_n.is_empty()
    }

    /// Share of all iterations whose slice extension stopped at the cap.
    pub fn cap_hit_frequency(&self) -> f64 {
        if self.total_iterations == 0 {
            0.0
        } else {
            self.total_cap_hits as f64 / self.total_iterations as f64
        }
    }

    pub fn k_n_trace(&self) -> Vec<f64> {
        self.k_n.iter().map(|&k| k as f64).collect()
    }

    /// Pointwise average of the recorded density realizations.
    pub fn mean_density(&self) -> Option<Vec<f64>> {
        let first = self.densities.first()?;
        let mut mean = alloc::vec![0.0; first.len()];
        for d in &self.densities {
            for (m, v) in mean.iter_mut().zip(d) {
                *m += v;
            }
        }
        let r = self.densities.len() as f64;
        mean.iter_mut().for_each(|m| *m /= r);
        Some(mean)
    }
}

enum ChainState {
    Alloc(AllocationState),
    Slice(SliceState),
}

/// Runs one chain from a single-cluster start whose atom is drawn from its
/// posterior given all data.
pub fn run_chain(
    config: &ChainConfig,
    data: &Dataset,
    clock: &mut dyn Clock,
) -> Result<ChainTrace> {
    config.validate()?;
    if data.is_empty() {
        return Err(domain("cannot run a chain without data"));
    }
    if data.dim() != config.base.dim() {
        return Err(domain("data and base measure differ in dimension"));
    }
    let start = clock.seconds();
    let (params, base) = (config.params, &config.base);
    let mut rng = RngStream::chain(config.seed, 0);
    let mut state = match config.algorithm.slice_variant() {
        Some(v) => ChainState::Slice(SliceState::new(&mut rng, data, params, base, v)?),
        None => {
            let atom =
                base.posterior_draw(&mut rng, &SuffStats::from_points(data.dim(), data.iter()))?;
            ChainState::Alloc(AllocationState::single_cluster(data.len(), atom))
        }
    };
    let retained = config.iterations - config.burnin;
    let mut trace = ChainTrace {
        k_n: Vec::with_capacity(retained),
        deviance: Vec::with_capacity(retained),
        seconds: Vec::with_capacity(retained),
        jumps: Vec::with_capacity(retained),
        cap_hit: Vec::with_capacity(retained),
        ..ChainTrace::default()
    };
    for it in 0..config.iterations {
        let keep = it >= config.burnin;
        let iteration = it as u64;
        let mut jumps = 0;
        let mut cap_hit = false;
        let mut density = None;
        match (&mut state, config.algorithm) {
            (ChainState::Alloc(s), Algorithm::Ics) => {
                let summary = ics_step(&mut rng, iteration, s, data, params, base, config.m)?;
                if keep {
                    density = config
                        .eval_points
                        .as_ref()
                        .map(|p| ics_density(&summary, p));
                }
            }
            (ChainState::Alloc(s), _) => {
                marginal_step(&mut rng, s, data, params, base)?;
                if keep {
                    density = config
                        .eval_points
                        .as_ref()
                        .map(|p| marginal_density(s, params, base, p));
                }
            }
            (ChainState::Slice(s), _) => {
                let report =
                    slice_step(&mut rng, iteration, s, data, params, base, config.jump_cap)?;
                jumps = report.jumps;
                cap_hit = report.cap_hit;
                if keep {
                    density = config
                        .eval_points
                        .as_ref()
                        .map(|p| slice_density(s, base, p));
                }
            }
        }
        trace.total_iterations += 1;
        trace.total_cap_hits += cap_hit as usize;
        if !keep {
            continue;
        }
        let (k, dev) = match &state {
            ChainState::Alloc(s) => (
                s.k(),
                deviance(s.counts(), s.atoms(), data, config.deviance_mode)?,
            ),
            ChainState::Slice(s) => {
                let (counts, atoms) = s.occupied();
                (
                    counts.len(),
                    deviance(&counts, &atoms, data, config.deviance_mode)?,
                )
            }
        };
        trace.k_n.push(k);
        trace.deviance.push(dev);
        trace.jumps.push(jumps);
        trace.cap_hit.push(cap_hit);
        if let Some(d) = density {
            trace.densities.push(d);
        }
        trace.seconds.push(clock.seconds() - start);
    }
    trace.total_seconds = clock.seconds() - start;
    Ok(trace)
}

//! MCMC samplers for exchangeable Pitman-Yor mixtures.

mod chain;
mod ics;
mod marginal;
mod slice;
mod state;

#[cfg(feature = "std")]
pub use chain::WallClock;
pub use chain::{run_chain, Algorithm, ChainConfig, ChainTrace, Clock, NoClock};
pub use ics::{ics_allocation_probabilities, ics_density, ics_step};
pub use marginal::{marginal_density, marginal_step, marginal_weights};
pub use slice::{slice_density, slice_step, SliceReport, SliceState, SliceVariant};
pub use state::AllocationState;

use alloc::vec::Vec;

use crate::error::Result;

/// Default number of auxiliary draws per iteration.
pub const DEFAULT_M: usize = 10;
/// Default cap on the number of sticks a slice sampler may hold.
pub const DEFAULT_JUMP_CAP: usize = 100_000;

#[derive(Default)]
pub(crate) struct Scratch {
    pub ln_w: Vec<f64>,
    pub cum: Vec<f64>,
}

/// Applies `f` to every index in `0..n`, in parallel when the `parallel`
/// feature is enabled. Results come back in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Scratch, usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .with_min_len(16)
        .map_init(Scratch::default, |s, i| f(s, i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(&mut Scratch, usize) -> Result<T>,
{
    let mut scratch = Scratch::default();
    (0..n).map(|i| f(&mut scratch, i)).collect()
}

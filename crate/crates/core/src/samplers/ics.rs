use alloc::vec::Vec;

use super::{map_indexed, AllocationState};
use crate::error::{Error, Result};
use crate::math::exp;
use crate::model::{BaseMeasure, Dataset};
use crate::pyprocess::{MeasureSummary, PyParams};
use crate::rng::{categorical_ln_draw, RngStream};

pub(crate) fn check_data(state_n: usize, data: &Dataset, base: &BaseMeasure) -> Result<()> {
    if data.len() != state_n {
        return Err(Error::DimensionMismatch {
            expected: state_n,
            found: data.len(),
        });
    }
    if data.dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            found: data.dim(),
        });
    }
    Ok(())
}

/// One importance conditional sampling sweep.
///
/// Draws the weights `p` and one shared auxiliary sample of size `m` given the
/// current clusters, reallocates every observation independently among the
/// auxiliary and fixed atoms, then redraws each surviving atom from its
/// conjugate full conditional. Observation `i` uses the substream
/// `(iteration, i)` of `rng`, so the result does not depend on how the
/// allocation loop is scheduled. Returns the summary used for allocation.
pub fn ics_step(
    rng: &mut RngStream,
    iteration: u64,
    state: &mut AllocationState,
    data: &Dataset,
    params: PyParams,
    base: &BaseMeasure,
    m: usize,
) -> Result<MeasureSummary> {
    check_data(state.n(), data, base)?;
    let summary = MeasureSummary::draw(
        rng,
        state.atoms().to_vec(),
        &state.partition(),
        params,
        base,
        m,
    )?;
    let ln_w = summary.ln_component_weights();
    let components: Vec<_> = summary.components().collect();
    let root = &*rng;
    let choices = map_indexed(data.len(), |s, i| {
        let x = data.obs(i);
        s.ln_w.clear();
        s.ln_w.extend(
            components
                .iter()
                .zip(&ln_w)
                .map(|(a, lw)| lw + a.ln_density(x)),
        );
        categorical_ln_draw(
            &mut root.substream(iteration, i as u64),
            &s.ln_w,
            &mut s.cum,
        )
    })?;
    *state = AllocationState::from_choices(&choices, components.len(), |o| components[o].clone());
    state.accelerate(rng, data, base)?;
    Ok(summary)
}

/// Normalized allocation probabilities of `x` over the summary's components,
/// auxiliary atoms first.
pub fn ics_allocation_probabilities(summary: &MeasureSummary, x: &[f64]) -> Result<Vec<f64>> {
    let ln_w: Vec<f64> = summary
        .components()
        .zip(summary.ln_component_weights())
        .map(|(a, lw)| lw + a.ln_density(x))
        .collect();
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateLikelihood);
    }
    let w: Vec<f64> = ln_w.iter().map(|l| exp(l - max)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Density realization `p_0 sum (m_l / m) K(x; s_l) + sum p_j K(x; t_j)` at
/// each point.
pub fn ics_density(summary: &MeasureSummary, points: &Dataset) -> Vec<f64> {
    let ln_w = summary.ln_component_weights();
    points
        .iter()
        .map(|x| exp(summary.ln_density(x, &ln_w)))
        .collect()
}

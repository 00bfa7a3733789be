//! Data, base measure and grid set-up shared by the commands.

use pyics_core::diagnostics::{linspace, Grid};
use pyics_core::model::{BaseMeasure, Dataset, NigBase, NiwBase, Standardization};
use pyics_core::rng::RngStream;
use pyics_core::synthetic::{two_gaussian, two_group};
use serde_json::{json, Value};

use crate::config::{RunConfig, Synthetic};
use crate::error::{usage, CliError, CliResult};
use crate::ingest::{ingest_csv, GroupColumn};

/// Stream purpose reserved for synthetic data, apart from the sampler's.
pub const DATA_PURPOSE: u32 = 1;

/// Observations on the original scale with optional group labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded {
    pub data: Dataset,
    pub groups: Option<Vec<i64>>,
    pub source: String,
}

/// Input file when given, otherwise the synthetic generator.
pub fn load_data(config: &RunConfig, n: usize, seed: u64) -> CliResult<Loaded> {
    let group = match config.group_column {
        _ if config.is_gmddp() => GroupColumn::Required,
        Some(true) => GroupColumn::Required,
        Some(false) => GroupColumn::Absent,
        None => GroupColumn::Infer,
    };
    if let Some(path) = &config.input {
        let ingested = ingest_csv(path, group)?;
        return Ok(Loaded {
            data: ingested.data,
            groups: ingested.groups,
            source: path.display().to_string(),
        });
    }
    let Some(kind) = config.synthetic else {
        return Err(usage(
            "no data: give --input FILE or --synthetic two-gaussian|two-group",
        ));
    };
    if n == 0 {
        return Err(usage("n must be at least 1"));
    }
    let mut rng = RngStream::chain(seed, DATA_PURPOSE);
    let loaded = match kind {
        Synthetic::TwoGaussian => {
            if group == GroupColumn::Required {
                return Err(usage(
                    "gmddp-ics needs grouped data: use --synthetic two-group",
                ));
            }
            Loaded {
                data: two_gaussian(&mut rng, n),
                groups: None,
                source: kind.name().to_string(),
            }
        }
        Synthetic::TwoGroup => {
            let (labels, data) = two_group(&mut rng, n);
            Loaded {
                data,
                groups: Some(labels.into_iter().map(|l| l as i64).collect()),
                source: kind.name().to_string(),
            }
        }
    };
    Ok(loaded)
}

/// Normal-inverse-gamma base in one dimension, normal-inverse-Wishart above.
pub fn base_measure(config: &RunConfig, dim: usize) -> CliResult<BaseMeasure> {
    let invalid = |e: pyics_core::Error| usage(format!("base measure: {e}"));
    let m0 = match &config.m0 {
        Some(m) if m.len() == dim => m.clone(),
        Some(m) if m.len() == 1 => vec![m[0]; dim],
        Some(m) => {
            return Err(usage(format!(
                "m0 has {} entries for {dim}-dimensional data",
                m.len()
            )))
        }
        None => vec![0.0; dim],
    };
    if dim == 1 {
        let nig =
            NigBase::new(m0[0], config.k0.unwrap_or(0.2), config.a0, config.b0).map_err(invalid)?;
        return Ok(BaseMeasure::Nig(nig));
    }
    let mut s0 = vec![0.0; dim * dim];
    for i in 0..dim {
        s0[i * dim + i] = config.s0;
    }
    let niw = NiwBase::new(
        m0,
        config.k0.unwrap_or(2.0),
        config.nu0.unwrap_or(dim as f64 + 3.0),
        s0,
    )
    .map_err(invalid)?;
    Ok(BaseMeasure::Niw(niw))
}

/// Optional standardization of the data.
pub struct Scaled {
    pub data: Dataset,
    pub standardization: Option<Standardization>,
}

impl Scaled {
    pub fn new(data: &Dataset, standardize: bool) -> CliResult<Self> {
        if !standardize {
            return Ok(Self {
                data: data.clone(),
                standardization: None,
            });
        }
        let s = Standardization::fit(data).map_err(|e| CliError::Data(e.to_string()))?;
        Ok(Self {
            data: s.apply(data),
            standardization: Some(s),
        })
    }

    /// Grid points on the model scale.
    pub fn eval_points(&self, grid: &Grid) -> Dataset {
        let points = grid.points();
        match &self.standardization {
            Some(s) => s.apply(&points),
            None => points,
        }
    }

    /// Factor turning model-scale densities into original-scale ones.
    pub fn jacobian(&self) -> f64 {
        self.standardization
            .as_ref()
            .map_or(1.0, Standardization::jacobian)
    }

    pub fn to_json(&self) -> Value {
        self.standardization
            .as_ref()
            .map_or(Value::Null, |s| json!({ "mean": s.mean, "sd": s.sd }))
    }
}

/// Evaluation grid on the original scale: explicit bounds, or the data range
/// widened by three standard deviations. 512 points in one dimension, 64 per
/// axis in two, unless overridden.
pub fn grid_for(config: &RunConfig, data: &Dataset) -> CliResult<Grid> {
    let dim = data.dim();
    if dim > 2 {
        return Err(usage(
            "density grids are supported in one or two dimensions",
        ));
    }
    let points = config
        .grid_points
        .unwrap_or(if dim == 1 { 512 } else { 64 });
    let axis = |j: usize| -> CliResult<Vec<f64>> {
        let column: Vec<f64> = data.iter().map(|x| x[j]).collect();
        let (lo, hi) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let sd = if column.len() > 1 {
            (column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            1.0
        };
        let sd = if sd > 0.0 { sd } else { 1.0 };
        let pick = |bounds: &Option<Vec<f64>>, fallback: f64| match bounds {
            Some(b) if b.len() == dim => Ok(b[j]),
            Some(b) if b.len() == 1 => Ok(b[0]),
            Some(b) => Err(usage(format!(
                "grid bounds have {} entries for {dim}-dimensional data",
                b.len()
            ))),
            None => Ok(fallback),
        };
        let min = pick(&config.grid_min, lo - 3.0 * sd)?;
        let max = pick(&config.grid_max, hi + 3.0 * sd)?;
        linspace(min, max, points).map_err(|e| usage(format!("grid: {e}")))
    };
    let grid = if dim == 1 {
        Grid::line(axis(0)?)
    } else {
        Grid::lattice(axis(0)?, axis(1)?)
    };
    grid.map_err(|e| usage(format!("grid: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_three_sd() {
        let data = Dataset::univariate(vec![0.0, 2.0]).unwrap();
        let g = grid_for(&RunConfig::default(), &data).unwrap();
        let sd = 2f64.sqrt();
        assert_eq!(g.len(), 512);
        assert!((g.point(0)[0] + 3.0 * sd).abs() < 1e-12);
        assert!((g.point(511)[0] - 2.0 - 3.0 * sd).abs() < 1e-12);
        let biv = Dataset::new(2, vec![0.0, 1.0, 1.0, 3.0, 2.0, 2.0]).unwrap();
        assert_eq!(
            grid_for(&RunConfig::default(), &biv).unwrap().len(),
            64 * 64
        );
    }

    #[test]
    fn base_by_dimension() {
        let c = RunConfig::default();
        assert!(matches!(base_measure(&c, 1).unwrap(), BaseMeasure::Nig(_)));
        assert!(matches!(base_measure(&c, 2).unwrap(), BaseMeasure::Niw(_)));
        let bad = RunConfig {
            m0: Some(vec![0.0, 1.0, 2.0]),
            ..RunConfig::default()
        };
        assert!(base_measure(&bad, 2).is_err());
    }

    #[test]
    fn synthetic_needs_no_file() {
        let mut c = RunConfig::default();
        assert!(load_data(&c, 10, 0).is_err());
        c.synthetic = Some(Synthetic::TwoGroup);
        let d = load_data(&c, 10, 0).unwrap();
        assert_eq!(d.data.len(), 20);
        assert_eq!(d.groups.unwrap().iter().filter(|&&g| g == 2).count(), 10);
    }
}

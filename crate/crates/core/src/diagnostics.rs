//! Effective sample size, deviance, evaluation grids and pointwise density
//! summaries.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math::{exp, ln, ln_add_exp};
use crate::model::{Atom, Dataset};

/// Effective sample size of a scalar trace.
///
/// Autocorrelations are summed in consecutive pairs
/// `Gamma_k = rho_{2k} + rho_{2k+1}` while the pair sums stay positive, giving
/// `tau = -1 + 2 sum Gamma_k` and `ESS = N / tau`. Antithetic traces can give
/// `tau < 1`; the result is clipped at `N`.
pub fn ess(trace: &[f64]) -> Result<f64> {
    let n = trace.len();
    if n < 10 {
        return Err(Error::TraceTooShort { needed: 10, got: n });
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let var = autocov(0);
    if !(var > 0.0) {
        return Err(Error::ConstantTrace);
    }
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / var;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    Ok((n as f64 / tau).min(n as f64))
}

/// Runtime divided by effective sample size.
pub fn time_per_ess(seconds: f64, ess: f64) -> f64 {
    seconds / ess
}

/// How the deviance aggregates mixture densities over observations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DevianceMode {
    /// `-2 sum_i log f(X_i)`.
    #[default]
    Log,
    /// `-2 sum_i f(X_i)`, without the logarithm.
    Literal,
}

impl DevianceMode {
    pub fn name(self) -> &'static str {
        match self {
            DevianceMode::Log => "log",
            DevianceMode::Literal => "literal",
        }
    }
}

/// Deviance of the mixture `f(x) = sum_j (n_j / n) K(x; theta_j)` at the data.
pub fn deviance(
    counts: &[usize],
    atoms: &[Atom],
    data: &Dataset,
    mode: DevianceMode,
) -> Result<f64> {
    if counts.len() != atoms.len() {
        return Err(Error::DimensionMismatch {
            expected: counts.len(),
            found: atoms.len(),
        });
    }
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(domain("deviance needs at least one allocated observation"));
    }
    let ln_w: Vec<f64> = counts.iter().map(|&c| ln(c as f64 / n as f64)).collect();
    let mut total = 0.0;
    for (i, x) in data.iter().enumerate() {
        let lf = atoms
            .iter()
            .zip(&ln_w)
            .filter(|(_, w)| w.is_finite())
            .fold(f64::NEG_INFINITY, |acc, (a, w)| {
                ln_add_exp(acc, w + a.ln_density(x))
            });
        total += match mode {
            DevianceMode::Log if lf == f64::NEG_INFINITY => return Err(Error::ZeroDensity(i)),
            DevianceMode::Log => lf,
            DevianceMode::Literal => exp(lf),
        };
    }
    Ok(-2.0 * total)
}

/// Points at which densities are evaluated: a line in one dimension or a
/// rectangular lattice in two.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Line(Vec<f64>),
    Lattice { x: Vec<f64>, y: Vec<f64> },
}

fn check_axis(axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(domain("grid axes need at least two points"));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("grid axes must be finite and strictly increasing"));
    }
    Ok(())
}

/// `points` equally spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(max > min) {
        return Err(domain(format!(
            "cannot space {points} points over [{min}, {max}]"
        )));
    }
    let h = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                max
            } else {
                min + h * i as f64
            }
        })
        .collect())
}

impl Grid {
    pub fn line(axis: Vec<f64>) -> Result<Self> {
        check_axis(&axis)?;
        Ok(Grid::Line(axis))
    }

    pub fn lattice(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_axis(&x)?;
        check_axis(&y)?;
        Ok(Grid::Lattice { x, y })
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::Line(_) => 1,
            Grid::Lattice { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Line(a) => a.len(),
            Grid::Lattice { x, y } => x.len() * y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point `idx`; lattice points run over `y` fastest.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self {
            Grid::Line(a) => [a[idx], 0.0],
            Grid::Lattice { x, y } => [x[idx / y.len()], y[idx % y.len()]],
        }
    }

    /// All points as a flattened row-major dataset.
    pub fn points(&self) -> Dataset {
        let d = self.dim();
        let mut values = Vec::with_capacity(self.len() * d);
        for i in 0..self.len() {
            values.extend_from_slice(&self.point(i)[..d]);
        }
        // axes were validated as finite on construction
        Dataset::new(d, values).unwrap_or_else(|_| unreachable!())
    }

    /// Trapezoid-rule integral of `values` given on this grid.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::MismatchedGrid);
        }
        Ok(match self {
            Grid::Line(a) => trapezoid(a, values),
            Grid::Lattice { x, y } => {
                let rows: Vec<f64> = values
                    .chunks(y.len())
                    .map(|row| trapezoid(y, row))
                    .collect();
                trapezoid(x, &rows)
            }
        })
    }
}

fn trapezoid(axis: &[f64], values: &[f64]) -> f64 {
    axis.windows(2)
        .zip(values.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

/// Pointwise posterior mean with an equal-tailed band.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySummary {
    pub grid: Grid,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub band_level: f64,
}

impl DensitySummary {
    /// Applies a constant factor to every curve, e.g. a change-of-variables
    /// Jacobian.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in self
            .mean
            .iter_mut()
            .chain(self.lower.iter_mut())
            .chain(self.upper.iter_mut())
        {
            *v *= factor;
        }
        self
    }
}

/// Inverse-CDF empirical quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let r = sorted.len();
    let rank = libm::ceil(p * r as f64) as usize;
    sorted[rank.clamp(1, r) - 1]
}

/// Pointwise mean and `(1 - level)/2`, `(1 + level)/2` quantiles of density
/// realizations on `grid`. The band is widened where needed so that it
/// always contains the mean.
pub fn density_summary(
    grid: &Grid,
    realizations: &[Vec<f64>],
    band_level: f64,
) -> Result<DensitySummary> {
    if realizations.len() < 2 {
        return Err(domain("density summary needs at least two realizations"));
    }
    if !(band_level > 0.0 && band_level < 1.0) {
        return Err(domain(format!(
            "band level must lie in (0, 1), got {band_level}"
        )));
    }
    if realizations.iter().any(|r| r.len() != grid.len()) {
        return Err(Error::MismatchedGrid);
    }
    let g = grid.len();
    let count = realizations.len() as f64;
    let (mut mean, mut lower, mut upper) = (
        Vec::with_capacity(g),
        Vec::with_capacity(g),
        Vec::with_capacity(g),
    );
    let mut column = Vec::with_capacity(realizations.len());
    for p in 0..g {
        column.clear();
        column.extend(realizations.iter().map(|r| r[p]));
        let m = column.iter().sum::<f64>() / count;
        column.sort_by(|a, b| a.total_cmp(b));
        mean.push(m);
        lower.push(quantile_sorted(&column, 0.5 * (1.0 - band_level)).min(m));
        upper.push(quantile_sorted(&column, 0.5 * (1.0 + band_level)).max(m));
    }
    Ok(DensitySummary {
        grid: grid.clone(),
        mean,
        lower,
        upper,
        band_level,
    })
}

/// L1 distance between two densities on the same grid.
pub fn l1_distance(grid: &Grid, f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::MismatchedGrid);
    }
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b).abs()).collect();
    grid.integrate(&diff)
}

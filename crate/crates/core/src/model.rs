//! Gaussian mixture kernels and their conjugate base measures.
//!
//! Univariate kernels pair with a normal-inverse-gamma base measure
//! `var ~ IG(a0, b0)`, `mean | var ~ N(m0, var / k0)`. Multivariate kernels
//! pair with a normal-inverse-Wishart base measure `cov ~ IW(nu0, S0)`,
//! `mean | cov ~ N(m0, cov / k0)`, where `IW(nu, S)` is the law of `W^{-1}`
//! for `W ~ Wishart(nu, S^{-1})`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::math::{exp, ln, ln_gamma, sqrt, LN_2PI, PI};
use crate::rng::{gamma_draw, standard_normal};

/// Observations stored row-major, `dim` coordinates each.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(domain("dataset dimension must be at least 1"));
        }
        if values.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len() % dim,
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("observation {} is not finite", bad / dim)));
        }
        Ok(Self { dim, values })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn obs(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dataset restricted to the given rows, in that order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            values.extend_from_slice(self.obs(r));
        }
        Dataset {
            dim: self.dim,
            values,
        }
    }
}

/// Per-coordinate centering and scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardization {
    /// Fits coordinate means and (n-1)-denominator standard deviations.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(domain("standardization needs at least two observations"));
        }
        let d = data.dim();
        let mut mean = vec![0.0; d];
        for x in data.iter() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut sd = vec![0.0; d];
        for x in data.iter() {
            for j in 0..d {
                sd[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
            }
        }
        for (j, s) in sd.iter_mut().enumerate() {
            *s = sqrt(*s / (n as f64 - 1.0));
            if !(*s > 0.0) {
                return Err(domain(format!(
                    "coordinate {j} is constant; cannot standardize"
                )));
            }
        }
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let values = data
            .iter()
            .flat_map(|x| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| (v - self.mean[j]) / self.sd[j])
            })
            .collect();
        Dataset {
            dim: data.dim(),
            values,
        }
    }

    pub fn to_standard(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.sd[j])
            .collect()
    }

    /// Factor mapping a density on the standardized scale back to the
    /// original scale.
    pub fn jacobian(&self) -> f64 {
        1.0 / self.sd.iter().product::<f64>()
    }
}

/// Parameters of a multivariate Gaussian kernel, with its Cholesky factor cached.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianAtom {
    mean: Vec<f64>,
    cov: Vec<f64>,
    chol: Vec<f64>,
    ln_det: f64,
}

impl GaussianAtom {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: cov.len(),
            });
        }
        let chol = linalg::cholesky(&cov, d)?;
        let ln_det = linalg::ln_det_from_cholesky(&chol, d);
        Ok(Self {
            mean,
            cov,
            chol,
            ln_det,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &[f64] {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// A mixture component parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    Normal { mean: f64, var: f64 },
    Gaussian(GaussianAtom),
}

impl Atom {
    pub fn normal(mean: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) || !var.is_finite() || !mean.is_finite() {
            return Err(domain(format!(
                "normal atom needs finite mean and positive variance, got ({mean}, {var})"
            )));
        }
        Ok(Atom::Normal { mean, var })
    }

    pub fn gaussian(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        GaussianAtom::new(mean, cov).map(Atom::Gaussian)
    }

    pub fn dim(&self) -> usize {
        match self {
            Atom::Normal { .. } => 1,
            Atom::Gaussian(g) => g.dim(),
        }
    }

    /// Log kernel density at `x`. Dimensions are the caller's responsibility;
    /// see [`kernel_density`] for the checked version.
    #[inline]
    pub fn ln_density(&self, x: &[f64]) -> f64 {
        match self {
            Atom::Normal { mean, var } => {
                let z = x[0] - mean;
                -0.5 * (LN_2PI + ln(*var) + z * z / var)
            }
            Atom::Gaussian(g) => {
                let d = g.dim();
                let q = linalg::mahalanobis_sq(&g.chol, d, x, &g.mean);
                -0.5 * (d as f64 * LN_2PI + g.ln_det + q)
            }
        }
    }
}

/// Gaussian kernel density `K(x; atom)`.
pub fn kernel_density(x: &[f64], atom: &Atom) -> Result<f64> {
    if x.len() != atom.dim() {
        return Err(Error::DimensionMismatch {
            expected: atom.dim(),
            found: x.len(),
        });
    }
    Ok(exp(atom.ln_density(x)))
}

/// Count, mean and centered scatter matrix of a group of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct SuffStats {
    n: usize,
    mean: Vec<f64>,
    scatter: Vec<f64>,
}

impl SuffStats {
    pub fn empty(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            scatter: vec![0.0; dim * dim],
        }
    }

    pub fn from_points<'a>(dim: usize, points: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut s = Self::empty(dim);
        for x in points {
            s.push(x);
        }
        s
    }

    /// Welford update.
    pub fn push(&mut self, x: &[f64]) {
        let d = self.mean.len();
        debug_assert_eq!(x.len(), d);
        self.n += 1;
        let n = self.n as f64;
        let shrink = (n - 1.0) / n;
        for i in 0..d {
            let di = x[i] - self.mean[i];
            for (j, &xj) in x.iter().enumerate() {
                self.scatter[i * d + j] += shrink * di * (xj - self.mean[j]);
            }
        }
        for (m, &xj) in self.mean.iter_mut().zip(x) {
            *m += (xj - *m) / n;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scatter(&self) -> &[f64] {
        &self.scatter
    }
}

/// Normal-inverse-gamma base measure for univariate kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NigBase {
    pub m0: f64,
    pub k0: f64,
    pub a0: f64,
    pub b0: f64,
}

impl NigBase {
    pub fn new(m0: f64, k0: f64, a0: f64, b0: f64) -> Result<Self> {
        if !m0.is_finite() {
            return Err(domain("NIG m0 must be finite"));
        }
        for (name, v) in [("k0", k0), ("a0", a0), ("b0", b0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("NIG {name} must be positive, got {v}")));
            }
        }
        Ok(Self { m0, k0, a0, b0 })
    }

    pub fn prior_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Atom {
        let precision = gamma_draw(rng, self.a0, self.b0).unwrap_or(f64::NAN);
        let var = 1.0 / precision;
        let mean = self.m0 + sqrt(var / self.k0) * standard_normal(rng);
        Atom::Normal { mean, var }
    }

    pub fn updated(&self, stats: &SuffStats) -> Self {
        if stats.n() == 0 {
            return *self;
        }
        let n = stats.n() as f64;
        let xbar = stats.mean()[0];
        let k = self.k0 + n;
        let dev = xbar - self.m0;
        Self {
            m0: (self.k0 * self.m0 + n * xbar) / k,
            k0: k,
            a0: self.a0 + 0.5 * n,
            b0: self.b0 + 0.5 * stats.scatter()[0] + self.k0 * n * dev * dev / (2.0 * k),
        }
    }

    /// Log prior predictive: Student-t with `2 a0` degrees of freedom,
    /// location `m0` and squared scale `b0 (1 + 1/k0) / a0`.
    pub fn ln_marginal(&self, x: f64) -> f64 {
        let nu = 2.0 * self.a0;
        let scale2 = self.b0 * (1.0 + 1.0 / self.k0) / self.a0;
        let z = x - self.m0;
        ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * ln(nu * PI * scale2)
            - 0.5 * (nu + 1.0) * crate::math::ln_1p(z * z / (nu * scale2))
    }
}

/// Normal-inverse-Wishart base measure for multivariate kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct NiwBase {
    m0: Vec<f64>,
    k0: f64,
    nu0: f64,
    s0: Vec<f64>,
    s0_chol: Vec<f64>,
}

impl NiwBase {
    pub fn new(m0: Vec<f64>, k0: f64, nu0: f64, s0: Vec<f64>) -> Result<Self> {
        let d = m0.len();
        if d == 0 || s0.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: s0.len(),
            });
        }
        if m0.iter().any(|v| !v.is_finite()) {
            return Err(domain("NIW m0 must be finite"));
        }
        if !(k0 > 0.0) || !k0.is_finite() {
            return Err(domain(format!("NIW k0 must be positive, got {k0}")));
        }
        if !(nu0 > d as f64 - 1.0) || !nu0.is_finite() {
            return Err(domain(format!(
                "NIW nu0 must exceed d - 1 = {}, got {nu0}",
                d - 1
            )));
        }
        let s0_chol = linalg::cholesky(&s0, d)?;
        Ok(Self {
            m0,
            k0,
            nu0,
            s0,
            s0_chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn m0(&self) -> &[f64] {
        &self.m0
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn s0(&self) -> &[f64] {
        &self.s0
    }

    /// Inverse-Wishart draw via the Bartlett decomposition: with `S0 = C C^T`
    /// and `A` the Bartlett factor of a `Wishart(nu0, I)` draw,
    /// `cov = C A^{-T} A^{-1} C^T`.
    fn draw_cov<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            let chi2 = 2.0 * gamma_draw(rng, 0.5 * (self.nu0 - i as f64), 1.0).unwrap_or(f64::NAN);
            a[i * d + i] = sqrt(chi2);
            for j in 0..i {
                a[i * d + j] = standard_normal(rng);
            }
        }
        let a_inv = linalg::invert_lower(&a, d);
        let b = linalg::mul(&self.s0_chol, &linalg::transpose(&a_inv, d), d);
        linalg::mul_self_transpose(&b, d)
    }

    pub fn prior_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Atom> {
        let d = self.dim();
        let cov = self.draw_cov(rng);
        let l = linalg::cholesky(&cov, d)?;
        let z: Vec<f64> = (0..d)
            .map(|_| standard_normal(rng) / sqrt(self.k0))
            .collect();
        let shift = linalg::lower_mul_vec(&l, d, &z);
        let mean = self.m0.iter().zip(&shift).map(|(m, s)| m + s).collect();
        Atom::gaussian(mean, cov)
    }

    pub fn updated(&self, stats: &SuffStats) -> Result<Self> {
        if stats.n() == 0 {
            return Ok(self.clone());
        }
        let d = self.dim();
        let n = stats.n() as f64;
        let k = self.k0 + n;
        let dev: Vec<f64> = stats
            .mean()
            .iter()
            .zip(&self.m0)
            .map(|(x, m)| x - m)
            .collect();
        let mut s = self.s0.clone();
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] += stats.scatter()[i * d + j] + self.k0 * n / k * dev[i] * dev[j];
            }
        }
        let m = self
            .m0
            .iter()
            .zip(stats.mean())
            .map(|(m0, x)| (self.k0 * m0 + n * x) / k)
            .collect();
        Self::new(m, k, self.nu0 + n, s)
    }

    /// Log prior predictive: multivariate t with `nu0 - d + 1` degrees of
    /// freedom, location `m0` and shape `S0 (k0 + 1) / (k0 (nu0 - d + 1))`.
    pub fn ln_marginal(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let df = self.nu0 - d as f64 + 1.0;
        let c = (self.k0 + 1.0) / (self.k0 * df);
        // shape = c S0, so its Cholesky factor is sqrt(c) * chol(S0)
        let q = linalg::mahalanobis_sq(&self.s0_chol, d, x, &self.m0) / c;
        let ln_det = linalg::ln_det_from_cholesky(&self.s0_chol, d) + d as f64 * ln(c);
        ln_gamma(0.5 * (df + d as f64))
            - ln_gamma(0.5 * df)
            - 0.5 * d as f64 * ln(df * PI)
            - 0.5 * ln_det
            - 0.5 * (df + d as f64) * crate::math::ln_1p(q / df)
    }
}

/// A conjugate base measure `P0`.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseMeasure {
    Nig(NigBase),
    Niw(NiwBase),
}

impl BaseMeasure {
    pub fn dim(&self) -> usize {
        match self {
            BaseMeasure::Nig(_) => 1,
            BaseMeasure::Niw(b) => b.dim(),
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    pub fn prior_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Atom> {
        match self {
            BaseMeasure::Nig(b) => Ok(b.prior_draw(rng)),
            BaseMeasure::Niw(b) => b.prior_draw(rng),
        }
    }

    /// The base measure updated by the observations summarized in `stats`.
    pub fn updated(&self, stats: &SuffStats) -> Result<BaseMeasure> {
        self.check_dim(stats.dim())?;
        match self {
            BaseMeasure::Nig(b) => Ok(BaseMeasure::Nig(b.updated(stats))),
            BaseMeasure::Niw(b) => b.updated(stats).map(BaseMeasure::Niw),
        }
    }

    /// Draw from `P0(dt) prod_i K(x_i; t)`, normalized.
    pub fn posterior_draw<R: Rng + ?Sized>(&self, rng: &mut R, stats: &SuffStats) -> Result<Atom> {
        if stats.n() == 0 {
            return self.prior_draw(rng);
        }
        self.updated(stats)?.prior_draw(rng)
    }

    /// Log of `int K(x; t) P0(dt)`.
    #[inline]
    pub fn ln_marginal(&self, x: &[f64]) -> f64 {
        match self {
            BaseMeasure::Nig(b) => b.ln_marginal(x[0]),
            BaseMeasure::Niw(b) => b.ln_marginal(x),
        }
    }
}

/// Fresh atom from the base measure.
pub fn prior_draw<R: Rng + ?Sized>(rng: &mut R, base: &BaseMeasure) -> Result<Atom> {
    base.prior_draw(rng)
}

/// Atom drawn from the conjugate posterior given `data`; an empty slice gives a
/// prior draw.
pub fn posterior_draw<R: Rng + ?Sized>(
    rng: &mut R,
    base: &BaseMeasure,
    data: &[&[f64]],
) -> Result<Atom> {
    for x in data {
        base.check_dim(x.len())?;
    }
    let stats = SuffStats::from_points(base.dim(), data.iter().copied());
    base.posterior_draw(rng, &stats)
}

/// Prior predictive density `int K(x; t) P0(dt)`.
pub fn marginal_likelihood(base: &BaseMeasure, x: &[f64]) -> Result<f64> {
    base.check_dim(x.len())?;
    Ok(exp(base.ln_marginal(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::testutil::{adaptive_simpson, mean_and_se};

    fn study_nig() -> NigBase {
        NigBase::new(0.0, 0.2, 2.0, 1.0).unwrap()
    }

    #[test]
    fn standard_normal_density_values() {
        let a = Atom::normal(0.0, 1.0).unwrap();
        assert!((kernel_density(&[0.0], &a).unwrap() - 0.398_942_280_4).abs() < 1e-9);
        let b = Atom::gaussian(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((kernel_density(&[0.0, 0.0], &b).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
        let c = Atom::normal(1.5, 0.7).unwrap();
        for &x in &[-2.0, 0.3, 4.0] {
            let l = kernel_density(&[x], &c).unwrap();
            let r = kernel_density(&[2.0 * 1.5 - x], &c).unwrap();
            assert!((l - r).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_density_errors() {
        let a = Atom::normal(0.0, 1.0).unwrap();
        assert!(matches!(
            kernel_density(&[0.0, 1.0], &a),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            Atom::gaussian(vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 1.0]),
            Err(Error::NotPositiveDefinite)
        );
        assert!(Atom::normal(0.0, 0.0).is_err());
    }

    #[test]
    fn kernel_integrates_to_one() {
        let a = Atom::normal(0.4, 2.3).unwrap();
        let h = 1e-3;
        let lo = 0.4 - 12.0 * sqrt(2.3);
        let steps = (24.0 * sqrt(2.3) / h) as usize;
        let total: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * exp(a.ln_density(&[lo + h * i as f64]))
            })
            .sum::<f64>()
            * h;
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn marginal_likelihood_closed_form_at_center() {
        let base = BaseMeasure::Nig(study_nig());
        let want = exp(ln_gamma(2.5) - ln_gamma(2.0)) / sqrt(4.0 * PI * 3.0);
        let got = marginal_likelihood(&base, &[0.0]).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.21650).abs() < 1e-5);
        for &c in &[0.5, 2.0, 7.0] {
            let l = marginal_likelihood(&base, &[c]).unwrap();
            let r = marginal_likelihood(&base, &[-c]).unwrap();
            assert!((l - r).abs() < 1e-15);
        }
        assert!(marginal_likelihood(&base, &[0.0, 1.0]).is_err());
    }

    /// `int int N(x; mu, var) NIG(mu, var) dmu dvar` by nested adaptive quadrature.
    fn nig_joint_quadrature(b: &NigBase, f: &dyn Fn(f64, f64) -> f64) -> f64 {
        let ln_ig_norm = b.a0 * ln(b.b0) - ln_gamma(b.a0);
        let outer = |u: f64| {
            // var = u / (1 - u) maps (0, 1) onto (0, inf)
            if u <= 0.0 || u >= 1.0 {
                return 0.0;
            }
            let var = u / (1.0 - u);
            let jac = 1.0 / ((1.0 - u) * (1.0 - u));
            let ln_pvar = ln_ig_norm - (b.a0 + 1.0) * ln(var) - b.b0 / var;
            let sd_mu = sqrt(var / b.k0);
            let inner = adaptive_simpson(
                &|mu: f64| {
                    let z = (mu - b.m0) / sd_mu;
                    exp(-0.5 * z * z - ln(sd_mu) - 0.5 * LN_2PI) * f(mu, var)
                },
                b.m0 - 12.0 * sd_mu,
                b.m0 + 12.0 * sd_mu,
                1e-8,
            );
            exp(ln_pvar) * jac * inner
        };
        adaptive_simpson(&outer, 0.0, 1.0, 1e-7)
    }

    #[test]
    fn marginal_likelihood_matches_quadrature() {
        let b = study_nig();
        let x = 1.0;
        let quad = nig_joint_quadrature(&b, &|mu, var| {
            exp(Atom::Normal { mean: mu, var }.ln_density(&[x]))
        });
        let closed = exp(b.ln_marginal(x));
        assert!((quad - closed).abs() < 1e-4, "quad {quad} closed {closed}");
    }

    #[test]
    fn marginal_integrates_to_one() {
        let b = study_nig();
        let scale = sqrt(b.b0 * (1.0 + 1.0 / b.k0) / b.a0);
        let (lo, hi) = (b.m0 - 12.0 * scale, b.m0 + 12.0 * scale);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let total: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * exp(b.ln_marginal(lo + h * i as f64))
            })
            .sum::<f64>()
            * h;
        assert!((total - 1.0).abs() < 1e-3, "total {total}");
    }

    #[test]
    fn nig_prior_moments() {
        let mut rng = RngStream::new(21, 0);
        let base = BaseMeasure::Nig(study_nig());
        let n = 100_000;
        let vars: Vec<f64> = (0..n)
            .map(|_| match base.prior_draw(&mut rng).unwrap() {
                Atom::Normal { var, .. } => var,
                _ => unreachable!(),
            })
            .collect();
        let m = vars.iter().sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.02 * 1.0 + 0.03, "IG mean {m}");
        let tight = BaseMeasure::Nig(NigBase::new(5.0, 1e8, 2.0, 1.0).unwrap());
        let means: Vec<f64> = (0..10_000)
            .map(|_| match tight.prior_draw(&mut rng).unwrap() {
                Atom::Normal { mean, .. } => mean,
                _ => unreachable!(),
            })
            .collect();
        assert!((mean_and_se(&means).0 - 5.0).abs() < 1e-3);
    }

    #[test]
    fn niw_prior_draws_are_spd() {
        let mut rng = RngStream::new(22, 0);
        let base = NiwBase::new(vec![0.0, 0.0], 2.0, 5.0, linalg::identity(2)).unwrap();
        for _ in 0..100_000 {
            let a = base.prior_draw(&mut rng).unwrap();
            let Atom::Gaussian(g) = a else { unreachable!() };
            assert!(linalg::cholesky(g.cov(), 2).is_ok());
        }
    }

    #[test]
    fn niw_validation() {
        assert!(NiwBase::new(vec![0.0, 0.0], 2.0, 0.5, linalg::identity(2)).is_err());
        assert!(NiwBase::new(vec![0.0, 0.0], 0.0, 5.0, linalg::identity(2)).is_err());
        assert!(NiwBase::new(vec![0.0, 0.0], 1.0, 5.0, vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(NigBase::new(0.0, 0.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn nig_posterior_location() {
        let b = study_nig();
        let stats = SuffStats::from_points(1, [&[2.0][..]]);
        let post = b.updated(&stats);
        assert!((post.m0 - 2.0 / 1.2).abs() < 1e-12);
        assert!((post.k0 - 1.2).abs() < 1e-12);
        assert!((post.a0 - 2.5).abs() < 1e-12);
        assert!((post.b0 - (1.0 + 0.2 * 4.0 / 2.4)).abs() < 1e-12);
    }

    #[test]
    fn posterior_moments_match_quadrature() {
        // posterior of (mu, var) given x = 2 under NIG(0, 0.2, 2, 1)
        let b = study_nig();
        let lik = |mu: f64, var: f64| exp(Atom::Normal { mean: mu, var }.ln_density(&[2.0]));
        let z = nig_joint_quadrature(&b, &lik);
        let e_mu = nig_joint_quadrature(&b, &|mu, var| mu * lik(mu, var)) / z;
        let e_var = nig_joint_quadrature(&b, &|mu, var| var * lik(mu, var)) / z;
        let base = BaseMeasure::Nig(b);
        let mut rng = RngStream::new(23, 0);
        let n = 100_000;
        let (mut mus, mut vars) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let Atom::Normal { mean, var } = posterior_draw(&mut rng, &base, &[&[2.0]]).unwrap()
            else {
                unreachable!()
            };
            mus.push(mean);
            vars.push(var);
        }
        let (m_mu, se_mu) = mean_and_se(&mus);
        let (m_var, se_var) = mean_and_se(&vars);
        assert!((m_mu - e_mu).abs() < 3.0 * se_mu, "mu {m_mu} vs {e_mu}");
        assert!(
            (m_var - e_var).abs() < 3.0 * se_var,
            "var {m_var} vs {e_var}"
        );
        assert!((e_mu - 1.666_666_7).abs() < 1e-4);
    }

    #[test]
    fn posterior_concentrates_on_large_samples() {
        let mut rng = RngStream::new(24, 0);
        let data: Vec<f64> = (0..10_000)
            .map(|_| 3.0 + standard_normal(&mut rng))
            .collect();
        let base = BaseMeasure::Nig(study_nig());
        let stats = SuffStats::from_points(1, data.chunks(1));
        let draws: Vec<f64> = (0..2_000)
            .map(|_| match base.posterior_draw(&mut rng, &stats).unwrap() {
                Atom::Normal { mean, .. } => mean,
                _ => unreachable!(),
            })
            .collect();
        assert!((mean_and_se(&draws).0 - 3.0).abs() < 0.05);
    }

    #[test]
    fn posterior_with_no_data_is_the_prior() {
        let base = BaseMeasure::Nig(study_nig());
        let mut a = RngStream::new(25, 0);
        let mut b = RngStream::new(25, 0);
        assert_eq!(
            posterior_draw(&mut a, &base, &[]).unwrap(),
            base.prior_draw(&mut b).unwrap()
        );
        assert!(matches!(
            posterior_draw(&mut a, &base, &[&[1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conjugate_updates_compose() {
        // updating on D then D' equals updating on D ∪ D'
        let pts = [0.3, -1.2, 2.2, 0.9, 4.1];
        for base in [
            BaseMeasure::Nig(study_nig()),
            BaseMeasure::Niw(NiwBase::new(vec![0.5], 1.5, 3.0, vec![2.0]).unwrap()),
        ] {
            let all = SuffStats::from_points(1, pts.chunks(1));
            let first = SuffStats::from_points(1, pts[..2].chunks(1));
            let second = SuffStats::from_points(1, pts[2..].chunks(1));
            let direct = base.updated(&all).unwrap();
            let staged = base.updated(&first).unwrap().updated(&second).unwrap();
            match (direct, staged) {
                (BaseMeasure::Nig(a), BaseMeasure::Nig(b)) => {
                    for (x, y) in [(a.m0, b.m0), (a.k0, b.k0), (a.a0, b.a0), (a.b0, b.b0)] {
                        assert!((x - y).abs() < 1e-12);
                    }
                }
                (BaseMeasure::Niw(a), BaseMeasure::Niw(b)) => {
                    assert!((a.m0[0] - b.m0[0]).abs() < 1e-12);
                    assert!((a.s0[0] - b.s0[0]).abs() < 1e-12);
                    assert!((a.nu0 - b.nu0).abs() < 1e-12);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn one_dimensional_niw_agrees_with_nig() {
        // NIW(m0, k0, nu0, S0) in d = 1 is NIG(m0, k0, nu0 / 2, S0 / 2)
        let niw = NiwBase::new(vec![0.3], 0.7, 5.0, vec![1.8]).unwrap();
        let nig = NigBase::new(0.3, 0.7, 2.5, 0.9).unwrap();
        for &x in &[-3.0, 0.0, 0.3, 2.5] {
            assert!((niw.ln_marginal(&[x]) - nig.ln_marginal(x)).abs() < 1e-12);
        }
        let mut rng = RngStream::new(26, 0);
        let n = 100_000;
        let vars: Vec<f64> = (0..n)
            .map(|_| match niw.prior_draw(&mut rng).unwrap() {
                Atom::Gaussian(g) => g.cov()[0],
                _ => unreachable!(),
            })
            .collect();
        let (m, se) = mean_and_se(&vars);
        // IG(2.5, 0.9) mean
        assert!((m - 0.9 / 1.5).abs() < 3.0 * se, "{m}");
    }

    #[test]
    fn niw_marginal_matches_monte_carlo() {
        let base = NiwBase::new(vec![0.0, 0.0], 2.0, 5.0, linalg::identity(2)).unwrap();
        let x = [0.7, -0.4];
        let mut rng = RngStream::new(27, 0);
        let n = 400_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| exp(base.prior_draw(&mut rng).unwrap().ln_density(&x)))
            .collect();
        let (m, se) = mean_and_se(&vals);
        let closed = exp(base.ln_marginal(&x));
        assert!((m - closed).abs() < 4.0 * se, "mc {m} ± {se} vs {closed}");
    }

    #[test]
    fn niw_posterior_mean_matches_importance_weights() {
        // prior draws reweighted by the likelihood approximate the posterior mean
        let base = NiwBase::new(vec![0.0, 0.0], 2.0, 5.0, linalg::identity(2)).unwrap();
        let data: [[f64; 2]; 3] = [[1.0, 0.5], [1.4, 0.2], [0.8, 0.9]];
        let mut rng = RngStream::new(28, 0);
        let (mut wsum, mut wm) = (0.0, [0.0; 2]);
        for _ in 0..400_000 {
            let a = base.prior_draw(&mut rng).unwrap();
            let w = exp(data.iter().map(|x| a.ln_density(x)).sum::<f64>());
            let Atom::Gaussian(g) = a else { unreachable!() };
            wsum += w;
            wm[0] += w * g.mean()[0];
            wm[1] += w * g.mean()[1];
        }
        let stats = SuffStats::from_points(2, data.iter().map(|x| &x[..]));
        let post = base.updated(&stats).unwrap();
        for (j, (w, m)) in wm.iter().zip(post.m0()).enumerate() {
            assert!((w / wsum - m).abs() < 0.02, "coord {j}");
        }
    }

    #[test]
    fn standardization_roundtrip() {
        let d = Dataset::new(2, vec![1.0, 10.0, 2.0, 30.0, 3.0, 20.0]).unwrap();
        let s = Standardization::fit(&d).unwrap();
        let z = s.apply(&d);
        let again = Standardization::fit(&z).unwrap();
        for j in 0..2 {
            assert!(again.mean[j].abs() < 1e-12);
            assert!((again.sd[j] - 1.0).abs() < 1e-12);
        }
        assert!((s.jacobian() - 1.0 / (1.0 * 10.0)).abs() < 1e-12);
        assert!(Standardization::fit(&Dataset::univariate(vec![1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::new(1, vec![f64::NAN]).is_err());
        let d = Dataset::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.obs(1), &[3.0, 4.0]);
        assert_eq!(d.subset(&[1]).values(), &[3.0, 4.0]);
    }
}

//! How many sticks a slice sampler must hold: the data-free lower bound
//! `M_n = min{l : prod_{j<=l} (1 - V_j) < B_n}` with `B_n ~ Beta(1, n)`, and
//! its large-`n` proxy `L_n = (B_n T / sigma)^(-sigma / (1 - sigma))` with `T`
//! polynomially tilted stable.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Result};
use crate::math::{expm1, harmonic, ln, ln_gamma};
use crate::pyprocess::PyParams;
use crate::rng::{ln_beta_pair, uniform_open, RngStream, TiltedStable};
use crate::samplers::map_indexed;

/// Default stick cap for direct simulation of `M_n`.
pub const DEFAULT_MN_CAP: u64 = 10_000_000;

/// One draw of `M_n`, or the fact that it exceeds the cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MnDraw {
    Value(u64),
    /// More than `cap` sticks were needed.
    Capped,
}

impl MnDraw {
    pub fn value(self) -> Option<u64> {
        match self {
            MnDraw::Value(v) => Some(v),
            MnDraw::Capped => None,
        }
    }

    /// Whether the draw is known to exceed `k`. Meaningful for `k <= cap`.
    pub fn exceeds(self, k: u64) -> bool {
        match self {
            MnDraw::Value(v) => v > k,
            MnDraw::Capped => true,
        }
    }
}

/// `ln B` for `B ~ Beta(1, n)`, by inversion `B = 1 - U^(1/n)`.
pub fn ln_beta_1n<R: Rng + ?Sized>(rng: &mut R, n: u64) -> f64 {
    ln(-expm1(ln(uniform_open(rng)) / n as f64))
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(domain("sample size n must be at least 1"));
    }
    Ok(())
}

/// Draws `B_n`, then sticks `V_j ~ Beta(1 - sigma, theta + j sigma)` until the
/// leftover mass drops below it.
pub fn sample_mn<R: Rng + ?Sized>(
    rng: &mut R,
    n: u64,
    params: PyParams,
    cap: u64,
) -> Result<MnDraw> {
    check_n(n)?;
    if cap == 0 {
        return Err(domain("cap must be at least 1"));
    }
    let ln_b = ln_beta_1n(rng, n);
    let (s, t) = (params.sigma(), params.theta());
    let mut ln_rest = 0.0;
    for l in 1..=cap {
        let (_, ln_1mv) = ln_beta_pair(rng, 1.0 - s, t + l as f64 * s)?;
        ln_rest += ln_1mv;
        if ln_rest < ln_b {
            return Ok(MnDraw::Value(l));
        }
    }
    Ok(MnDraw::Capped)
}

fn check_proxy(params: PyParams) -> Result<TiltedStable> {
    if params.sigma() <= 0.0 {
        return Err(domain(
            "the proxy needs sigma in (0, 1); at sigma = 0 the Poisson mixture law applies",
        ));
    }
    TiltedStable::new(params.sigma(), params.theta())
}

fn ln_proxy<R: Rng + ?Sized>(rng: &mut R, n: u64, ts: &TiltedStable) -> f64 {
    let s = ts.sigma();
    let ln_b = ln_beta_1n(rng, n);
    let ln_t = ts.sample_ln(rng);
    -s / (1.0 - s) * (ln_b + ln_t - ln(s))
}

/// `ln L_n`; stays finite where `L_n` itself would overflow.
pub fn sample_ln_log<R: Rng + ?Sized>(rng: &mut R, n: u64, params: PyParams) -> Result<f64> {
    check_n(n)?;
    let ts = check_proxy(params)?;
    Ok(ln_proxy(rng, n, &ts))
}

/// One draw of `L_n`.
pub fn sample_ln<R: Rng + ?Sized>(rng: &mut R, n: u64, params: PyParams) -> Result<f64> {
    Ok(crate::math::exp(sample_ln_log(rng, n, params)?))
}

/// `E[M_n] = theta H_n + 1` at `sigma = 0`, where `M_n - 1` is a Poisson
/// mixture with mean `theta ln(1 / B_n)`.
pub fn expected_mn_dirichlet(n: u64, theta: f64) -> f64 {
    theta * harmonic(n) + 1.0
}

/// `E[L_n]`, finite only for `sigma` in `(0, 1/2)`:
///
/// `sigma^r Gamma(1 - r) Gamma(1 + (theta + r) / sigma) Gamma(1 + theta)
/// / (Gamma(1 + theta + r) Gamma(1 + theta / sigma))
/// * Gamma(n + 1) / Gamma(n + 1 - r)` with `r = sigma / (1 - sigma)`.
pub fn expected_ln(n: u64, params: PyParams) -> Option<f64> {
    let (s, t) = (params.sigma(), params.theta());
    let ln_c = ln_c_literal(s, t)? + ln_gamma(1.0 + t) - ln_gamma(1.0 + t / s);
    Some(crate::math::exp(ln_c + ln_n_ratio(n, s)))
}

/// The same mean with the constant
/// `sigma^r Gamma(2 - 1/(1 - sigma)) Gamma(1 + theta/sigma + 1/(1 - sigma))
/// / Gamma(theta + 1/(1 - sigma))`, which omits the normalizing factor
/// `Gamma(1 + theta) / Gamma(1 + theta / sigma)` of the tilted law.
pub fn expected_ln_literal(n: u64, params: PyParams) -> Option<f64> {
    let ln_c = ln_c_literal(params.sigma(), params.theta())?;
    Some(crate::math::exp(ln_c + ln_n_ratio(n, params.sigma())))
}

fn ln_c_literal(s: f64, t: f64) -> Option<f64> {
    if !(s > 0.0 && s < 0.5) {
        return None;
    }
    let q = 1.0 / (1.0 - s);
    Some(s * q * ln(s) + ln_gamma(2.0 - q) + ln_gamma(1.0 + t / s + q) - ln_gamma(t + q))
}

fn ln_n_ratio(n: u64, s: f64) -> f64 {
    let n = n as f64;
    ln_gamma(n + 1.0) - ln_gamma(n + 2.0 - 1.0 / (1.0 - s))
}

/// Where an exceedance estimate came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateSource {
    /// Direct simulation of `M_n`.
    Direct,
    /// The threshold lies above the cap; `L_n` stands in.
    Proxy,
}

impl EstimateSource {
    pub fn name(self) -> &'static str {
        match self {
            EstimateSource::Direct => "direct",
            EstimateSource::Proxy => "proxy-ln",
        }
    }
}

/// Exceedance probabilities at one threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ExceedanceRow {
    pub threshold: u64,
    /// `P(M_n > K)`, when it can be read off the draws.
    pub mn: Option<f64>,
    /// `P(L_n > K)`, when the proxy is defined.
    pub ln: Option<f64>,
    /// The reported value: direct when available, otherwise the proxy.
    pub estimate: Option<f64>,
    pub source: EstimateSource,
}

/// Draws of `M_n` and `L_n` with exceedance estimates per threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport {
    pub n: u64,
    pub params: PyParams,
    pub cap: u64,
    pub mn: Vec<MnDraw>,
    /// `ln L_n` per replicate; empty at `sigma = 0`.
    pub ln_log: Vec<f64>,
    pub rows: Vec<ExceedanceRow>,
}

impl TruncationReport {
    pub fn capped(&self) -> usize {
        self.mn.iter().filter(|d| **d == MnDraw::Capped).count()
    }

    /// Type-1 empirical quantile of `M_n`, capped draws sorting last.
    pub fn mn_quantile(&self, q: f64) -> Option<MnDraw> {
        let mut sorted = self.mn.clone();
        sorted.sort_unstable();
        quantile_index(sorted.len(), q).map(|i| sorted[i])
    }

    /// Type-1 empirical quantile of `L_n`.
    pub fn ln_quantile(&self, q: f64) -> Option<f64> {
        let mut sorted = self.ln_log.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        quantile_index(sorted.len(), q).map(|i| crate::math::exp(sorted[i]))
    }
}

fn quantile_index(len: usize, q: f64) -> Option<usize> {
    if len == 0 || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let i = libm::ceil(q * len as f64) as usize;
    Some(i.clamp(1, len) - 1)
}

/// Monte Carlo exceedance table. Replicate `r` draws `M_n` from substream
/// `(r, 0)` and `L_n` from `(r, 1)` of `root`, so results do not depend on
/// scheduling. Thresholds above `cap` are served by the proxy; at
/// `sigma = 0`, where no proxy exists, they are answered directly as long as
/// no draw hit the cap.
pub fn exceedance_table(
    root: &RngStream,
    n: u64,
    params: PyParams,
    thresholds: &[u64],
    reps: usize,
    cap: u64,
) -> Result<TruncationReport> {
    check_n(n)?;
    if reps == 0 || reps as u64 >= u32::MAX as u64 {
        return Err(domain(format!("replicate count {reps} out of range")));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("thresholds must be sorted ascending"));
    }
    let mn = map_indexed(reps, |_, r| {
        sample_mn(&mut root.substream(r as u64, 0), n, params, cap)
    })?;
    let ln_log = if params.sigma() > 0.0 {
        let ts = check_proxy(params)?;
        map_indexed(reps, |_, r| {
            Ok(ln_proxy(&mut root.substream(r as u64, 1), n, &ts))
        })?
    } else {
        Vec::new()
    };
    let share = |hits: usize| hits as f64 / reps as f64;
    let uncapped = mn.iter().all(|d| *d != MnDraw::Capped);
    let rows = thresholds
        .iter()
        .map(|&k| {
            let direct = (k <= cap || (ln_log.is_empty() && uncapped))
                .then(|| share(mn.iter().filter(|d| d.exceeds(k)).count()));
            let ln_k = ln(k as f64);
            let proxy =
                (!ln_log.is_empty()).then(|| share(ln_log.iter().filter(|&&l| l > ln_k).count()));
            let (estimate, source) = match direct {
                Some(d) => (Some(d), EstimateSource::Direct),
                None => (proxy, EstimateSource::Proxy),
            };
            ExceedanceRow {
                threshold: k,
                mn: direct,
                ln: proxy,
                estimate,
                source,
            }
        })
        .collect();
    Ok(TruncationReport {
        n,
        params,
        cap,
        mn,
        ln_log,
        rows,
    })
}

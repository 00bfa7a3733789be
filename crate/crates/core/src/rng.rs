//! Reproducible random streams and the variate generators used by the samplers.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed and positioned on
//! one of its 2^64 independent streams. Substreams are addressed by an
//! `(iteration, unit)` pair, so per-observation draws inside a sweep do not
//! depend on the order in which observations are visited, nor on how many
//! worker threads visit them.

use alloc::vec::Vec;

use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::math::{exp, ln, ln_add_exp, sin, PI};

/// Iteration index reserved for chain-level (sequential) streams.
const RESERVED_ITERATION: u64 = u32::MAX as u64;

/// A seeded, addressable random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// The sequential stream a chain uses for everything that is not
    /// per-observation work. `purpose` separates independent consumers.
    pub fn chain(seed: u64, purpose: u32) -> Self {
        Self::new(
            seed,
            Self::stream_id_for(RESERVED_ITERATION, purpose as u64),
        )
    }

    /// Substream for `(iteration, unit)` under this stream's seed.
    ///
    /// Iterations must stay below `u32::MAX` and units must fit in 32 bits.
    pub fn substream(&self, iteration: u64, unit: u64) -> Self {
        debug_assert!(iteration < RESERVED_ITERATION, "iteration index too large");
        Self::new(self.seed, Self::stream_id_for(iteration, unit))
    }

    fn stream_id_for(iteration: u64, unit: u64) -> u64 {
        debug_assert!(unit <= u32::MAX as u64, "unit index too large");
        (iteration << 32) | (unit & 0xffff_ffff)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Mixes a seed with an index (replicate, dataset, ...) into a new seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed
        ^ index
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(alloc::format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

/// Gamma variate with the given shape and rate.
pub fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    Ok(unit_gamma(rng, shape) / rate)
}

#[inline]
fn unit_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    // shape was validated by the caller
    Gamma::new(shape, 1.0)
        .map(|g| g.sample(rng))
        .unwrap_or(f64::NAN)
}

/// Logarithm of a unit-rate gamma variate. Stays finite for tiny shapes,
/// where the variate itself would underflow to zero.
pub fn ln_gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape >= 1.0 {
        ln(unit_gamma(rng, shape))
    } else {
        ln(unit_gamma(rng, shape + 1.0)) + ln(uniform_open(rng)) / shape
    }
}

/// Beta variate on (0, 1).
pub fn beta_draw<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    let (lv, _) = ln_beta_pair(rng, a, b)?;
    Ok(exp(lv))
}

/// Draws `V ~ Beta(a, b)` and returns `(ln V, ln(1 - V))`, both computed
/// without cancellation.
pub fn ln_beta_pair<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<(f64, f64)> {
    check_positive("beta a", a)?;
    check_positive("beta b", b)?;
    let lx = ln_gamma_draw(rng, a);
    let ly = ln_gamma_draw(rng, b);
    let lt = ln_add_exp(lx, ly);
    Ok((lx - lt, ly - lt))
}

/// Dirichlet draw; the output lies on the simplex and has the length of `alpha`.
pub fn dirichlet_draw<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(domain("dirichlet needs at least one component"));
    }
    for &a in alpha {
        check_positive("dirichlet alpha", a)?;
    }
    if alpha.len() == 1 {
        return Ok(alloc::vec![1.0]);
    }
    let mut out: Vec<f64> = alpha.iter().map(|&a| ln_gamma_draw(rng, a)).collect();
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in out.iter_mut() {
        *x = exp(*x - max);
        total += *x;
    }
    for x in out.iter_mut() {
        *x /= total;
    }
    Ok(out)
}

/// Index `i` drawn with probability `weights[i] / sum(weights)`.
pub fn categorical_draw<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Result<usize> {
    let mut total = 0.0;
    for &w in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(domain(alloc::format!(
                "categorical weight {w} is not a nonnegative number"
            )));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(domain("categorical weights are all zero"));
    }
    let target = uniform_open(rng) * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    Ok(last)
}

/// Categorical draw from unnormalized log-weights. `scratch` is reused to
/// avoid an allocation per call.
pub fn categorical_ln_draw<R: Rng + ?Sized>(
    rng: &mut R,
    ln_weights: &[f64],
    scratch: &mut Vec<f64>,
) -> Result<usize> {
    let max = ln_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateLikelihood);
    }
    scratch.clear();
    let mut total = 0.0;
    for &lw in ln_weights {
        let w = exp(lw - max);
        total += w;
        scratch.push(total);
    }
    let target = uniform_open(rng) * total;
    // cumulative sums are nondecreasing; first index exceeding the target
    let idx = scratch.partition_point(|&c| c <= target);
    Ok(idx.min(ln_weights.len() - 1))
}

/// Sampler for the polynomially tilted positive stable law with density
/// proportional to `t^{-theta} f_sigma(t)`, where `f_sigma` has Laplace
/// transform `exp(-lambda^sigma)`.
///
/// Uses Kanter's representation `T = (A(U) / E)^{(1-sigma)/sigma}`. The tilt
/// factorizes: `E ~ Gamma(1 + theta (1-sigma)/sigma)` and `U` has density
/// proportional to `A(u)^{-theta (1-sigma)/sigma}` on `(0, pi)`, which is
/// sampled exactly by rejection.
#[derive(Clone, Debug)]
pub struct TiltedStable {
    sigma: f64,
    theta: f64,
    /// `theta (1 - sigma) / sigma`
    tilt: f64,
    gamma_shape: f64,
    /// Envelope constant in log scale (meaning depends on the sign of `tilt`).
    ln_bound: f64,
}

impl TiltedStable {
    pub fn new(sigma: f64, theta: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(domain(alloc::format!(
                "tilted stable needs sigma in (0,1), got {sigma}"
            )));
        }
        if !(theta > -sigma) || !theta.is_finite() {
            return Err(domain(alloc::format!(
                "tilted stable needs theta > -sigma, got {theta}"
            )));
        }
        let tilt = theta * (1.0 - sigma) / sigma;
        let base = sigma * ln(sigma) + (1.0 - sigma) * ln(1.0 - sigma);
        let ln_bound = if tilt >= 0.0 {
            // ln A(0+), the minimum of ln A over (0, pi)
            base / (1.0 - sigma)
        } else {
            // sup of ln A(u) + ln(pi - u) / (1 - sigma), via sin u >= u (pi - u) / pi
            (base + ln(PI)) / (1.0 - sigma)
        };
        Ok(Self {
            sigma,
            theta,
            tilt,
            gamma_shape: 1.0 + tilt,
            ln_bound,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Logarithm of Zolotarev's function `A(u)` on `(0, pi)`.
    pub fn ln_zolotarev(sigma: f64, u: f64) -> f64 {
        (sigma * ln(sin(sigma * u)) + (1.0 - sigma) * ln(sin((1.0 - sigma) * u)) - ln(sin(u)))
            / (1.0 - sigma)
    }

    fn angle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.sigma;
        if self.tilt >= 0.0 {
            loop {
                let u = PI * uniform_open(rng);
                let ln_ratio = -self.tilt * (Self::ln_zolotarev(s, u) - self.ln_bound);
                if ln(uniform_open(rng)) <= ln_ratio {
                    return u;
                }
            }
        } else {
            // proposal density proportional to (pi - u)^{-b}, b = -theta / sigma < 1
            let b = -self.theta / s;
            let mag = -self.tilt;
            loop {
                let y = PI * crate::math::powf(uniform_open(rng), 1.0 / (1.0 - b));
                let u = PI - y;
                if !(u > 0.0) {
                    continue;
                }
                let ln_env = Self::ln_zolotarev(s, u) + ln(y) / (1.0 - s) - self.ln_bound;
                if ln(uniform_open(rng)) <= mag * ln_env {
                    return u;
                }
            }
        }
    }

    /// Logarithm of a draw.
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = self.angle(rng);
        let ln_e = ln_gamma_draw(rng, self.gamma_shape);
        (1.0 - self.sigma) / self.sigma * (Self::ln_zolotarev(self.sigma, u) - ln_e)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        exp(self.sample_ln(rng))
    }
}

/// One draw from the polynomially tilted stable law; see [`TiltedStable`].
pub fn tilted_stable_draw<R: Rng + ?Sized>(rng: &mut R, sigma: f64, theta: f64) -> Result<f64> {
    Ok(TiltedStable::new(sigma, theta)?.sample(rng))
}

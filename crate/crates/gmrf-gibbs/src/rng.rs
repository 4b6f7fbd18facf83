//! Seedable, splittable random number streams.
//!
//! Every stream is a pure function of `(seed, stream_id, position)`, so replaying
//! a stream reproduces the same values on any platform, and substreams derived
//! for a given `(domain, iteration, site)` triple are identical no matter which
//! thread ends up drawing from them. That last property is what makes the
//! parallel chromatic sampler bit-identical to the sequential one.
//!
//! The generator is a SplitMix-style counter generator: output `i` is a strong
//! 64-bit mix of `key + i * gamma`, with `gamma` an odd per-stream increment.
//! Substreams re-key by hashing the parent key with the substream coordinates.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RngError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Full-avalanche mix of a 64-bit word.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an odd, bit-balanced increment from a key (Steele et al. gamma mixing).
#[inline]
fn mix_gamma(z: u64) -> u64 {
    let mut g = (z ^ (z >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    g = (g ^ (g >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    g = (g ^ (g >> 33)) | 1;
    if (g ^ (g >> 1)).count_ones() < 24 {
        g ^= 0xAAAA_AAAA_AAAA_AAAA;
    }
    g
}

#[inline]
fn combine(key: u64, word: u64) -> u64 {
    mix64(key ^ word.wrapping_mul(GOLDEN).rotate_left(27) ^ 0xA076_1D64_78BD_642F)
}

/// One independent random stream.
///
/// Value type: cloning replays the stream from its current position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    gamma: u64,
    pos: u64,
}

impl RngStream {
    /// Root stream for a `(seed, stream_id)` pair. Distinct `stream_id`s give
    /// statistically independent sequences; use one id per chain.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let k0 = mix64(seed ^ GOLDEN);
        let key = combine(k0, stream_id);
        let gamma = mix_gamma(key.wrapping_add(GOLDEN));
        RngStream { key, gamma, pos: 0 }
    }

    /// Derive an independent substream keyed by `(domain, a, b)`.
    ///
    /// The result depends only on this stream's identity (not on how many
    /// values have been drawn from it), so per-site substreams keyed by
    /// `(iteration, node)` are invariant to scheduling.
    pub fn substream(&self, domain: u64, a: u64, b: u64) -> RngStream {
        let k1 = combine(self.key, domain);
        let k2 = combine(k1, a);
        let key = combine(k2, b);
        let gamma = mix_gamma(key.wrapping_add(GOLDEN));
        RngStream { key, gamma, pos: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.pos = self.pos.wrapping_add(1);
        mix64(self.key.wrapping_add(self.pos.wrapping_mul(self.gamma)))
    }

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller (fixed two-word consumption per draw).
    #[inline]
    pub fn normal01(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// One Gaussian variate with the given mean and standard deviation.
    pub fn draw_normal(&mut self, mean: f64, sd: f64) -> Result<f64, RngError> {
        if !(sd > 0.0) {
            return Err(RngError::InvalidArgument(format!(
                "normal sd must be positive, got {sd}"
            )));
        }
        Ok(mean + sd * self.normal01())
    }

    /// Unit-rate exponential.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.uniform().ln()
    }

    /// Gamma(shape, 1) via the Marsaglia-Tsang squeeze, with the usual
    /// `U^{1/shape}` boost for shape < 1.
    pub(crate) fn gamma_unit(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let boost = {
                let u = self.uniform();
                u.powf(1.0 / shape)
            };
            return self.gamma_unit(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal01();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v;
            }
            if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Inverse-gamma variate `rate / Gamma(shape, 1)`, so the mean is
    /// `rate / (shape - 1)` for shape > 1.
    pub fn draw_inverse_gamma(&mut self, shape: f64, rate: f64) -> Result<f64, RngError> {
        if !(shape > 0.0) || !(rate > 0.0) {
            return Err(RngError::InvalidArgument(format!(
                "inverse-gamma parameters must be positive, got shape={shape} rate={rate}"
            )));
        }
        loop {
            let g = self.gamma_unit(shape);
            if g > 1e-300 {
                return Ok(rate / g);
            }
        }
    }
}

/// Substream domains used by the samplers. Field updates and Polya-Gamma
/// augmentation draws live in disjoint key spaces so their per-site streams
/// never collide.
pub mod domains {
    /// Per-site Gaussian field draws, keyed by (iteration, node).
    pub const FIELD: u64 = 1;
    /// Per-site Polya-Gamma draws, keyed by (iteration, node).
    pub const PG: u64 = 2;
    /// Data-generation noise, keyed by (0, node).
    pub const DATA: u64 = 3;
}

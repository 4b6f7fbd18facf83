//! Polya-Gamma variate generation for binomial-logit data augmentation.
//!
//! PG(1, z) uses the Devroye-style alternating-series rejection sampler on the
//! tilted Jacobi density. PG(b, z) sums b independent PG(1, z) draws up to
//! b = 50; above that a moment-matched normal approximation takes over, which
//! is what keeps augmentation affordable when trial counts reach the
//! thousands.

use crate::rng::RngStream;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Parameters of a PG(b, z) draw: `b` is the trial count, `z` the linear
/// predictor being tilted against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgParams {
    pub b: u64,
    pub z: f64,
}

/// E PG(b, z) = (b / 2z) tanh(z / 2), with the z -> 0 limit b/4.
pub fn pg_mean(b: u64, z: f64) -> f64 {
    let b = b as f64;
    let z = z.abs();
    if z < 1e-2 {
        // Series around 0: 1/4 - z^2/48 + O(z^4).
        b * (0.25 - z * z / 48.0)
    } else {
        b * (0.5 * z).tanh() / (2.0 * z)
    }
}

/// Var PG(b, z) = b (sinh z - z) sech^2(z/2) / (4 z^3), limit b/24 at z = 0.
pub fn pg_var(b: u64, z: f64) -> f64 {
    let b = b as f64;
    let z = z.abs();
    if z < 1e-2 {
        // Series around 0: 1/24 - z^2/120 + O(z^4).
        b * (1.0 / 24.0 - z * z / 120.0)
    } else {
        let sech_half = 1.0 / (0.5 * z).cosh();
        b * (z.sinh() - z) * sech_half * sech_half / (4.0 * z * z * z)
    }
}

const TRUNC: f64 = 0.64;
/// Largest b drawn by exact summation of PG(1, z) variates.
const MAX_EXACT_B: u64 = 50;
/// Alternating-series squeeze stops once the bracket width drops below this.
const SERIES_TOL: f64 = 1e-12;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `exp(c) * Phi(x)` without overflowing when c is large and x very negative.
fn exp_mul_normal_cdf(c: f64, x: f64) -> f64 {
    if x > -30.0 {
        c.exp() * std_normal_cdf(x)
    } else {
        // One-term Mills-ratio asymptotic for the far tail.
        (c - 0.5 * x * x).exp() / ((-x) * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// P(IG(1/z, 1) <= t): mass of the inverse-Gaussian head of the proposal.
/// Continuous at z = 0 (the Levy limit).
fn inverse_gaussian_cdf(t: f64, z: f64) -> f64 {
    let rt = t.sqrt();
    std_normal_cdf((t * z - 1.0) / rt) + exp_mul_normal_cdf(2.0 * z, -(t * z + 1.0) / rt)
}

/// Coefficient a_n(x) of the alternating series for the Jacobi density.
fn series_coef(n: u64, x: f64) -> f64 {
    use std::f64::consts::PI;
    let np = n as f64 + 0.5;
    if x <= TRUNC {
        PI * np * (2.0 / (PI * x)).powf(1.5) * (-2.0 * np * np / x).exp()
    } else {
        PI * np * (-0.5 * np * np * PI * PI * x).exp()
    }
}

/// Inverse-Gaussian(mu, 1) truncated to (0, t], following the two-regime
/// scheme: a Levy-based rejection when mu > t, otherwise draw-and-retry.
fn truncated_inverse_gaussian(s: &mut RngStream, z: f64, t: f64) -> f64 {
    if z < 1.0 / t {
        loop {
            let e1 = s.exp1();
            let e2 = s.exp1();
            if e1 * e1 > 2.0 * e2 / t {
                continue;
            }
            let x = t / ((1.0 + t * e1) * (1.0 + t * e1));
            if s.uniform() <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let y = {
                let v = s.normal01();
                v * v
            };
            let mut x = mu + 0.5 * mu * mu * y
                - 0.5 * mu * (4.0 * mu * y + (mu * y) * (mu * y)).sqrt();
            if s.uniform() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                return x;
            }
        }
    }
}

/// One PG(1, z) variate via the Devroye alternating-series sampler.
fn draw_pg1(s: &mut RngStream, z_in: f64) -> f64 {
    use std::f64::consts::PI;
    let z = 0.5 * z_in.abs();
    let fz = PI * PI / 8.0 + 0.5 * z * z;
    let p = (PI / (2.0 * fz)) * (-fz * TRUNC).exp();
    let q = 2.0 * (-z).exp() * inverse_gaussian_cdf(TRUNC, z);
    let head_prob = q / (p + q);
    loop {
        let x = if s.uniform() < head_prob {
            truncated_inverse_gaussian(s, z, TRUNC)
        } else {
            TRUNC + s.exp1() / fz
        };
        // Squeeze: partial sums of the alternating series bracket the density.
        let mut partial = series_coef(0, x);
        let y = s.uniform() * partial;
        let mut n = 0u64;
        loop {
            n += 1;
            let a = series_coef(n, x);
            if n % 2 == 1 {
                partial -= a;
                if y <= partial {
                    return 0.25 * x;
                }
            } else {
                partial += a;
                if y > partial {
                    break;
                }
            }
            if a < SERIES_TOL {
                if y <= partial {
                    return 0.25 * x;
                }
                break;
            }
        }
    }
}

/// Draw one PG(b, z) variate. Additive in b: PG(b, z) is distributed as the
/// sum of b independent PG(1, z) variables.
pub fn draw_pg(s: &mut RngStream, p: PgParams) -> Result<f64, PgError> {
    if p.b < 1 {
        return Err(PgError::InvalidArgument(format!(
            "trial count must be at least 1, got {}",
            p.b
        )));
    }
    if p.b <= MAX_EXACT_B {
        let mut acc = 0.0;
        for _ in 0..p.b {
            acc += draw_pg1(s, p.z);
        }
        Ok(acc)
    } else {
        let mean = pg_mean(p.b, p.z);
        let sd = pg_var(p.b, p.z).sqrt();
        loop {
            let x = mean + sd * s.normal01();
            if x > 0.0 {
                return Ok(x);
            }
        }
    }
}

//! The single-use binary channel Alice and Bob obtain from one signalling run.
//!
//! Alice encodes a bit in her initial state (orthogonal states for 0 and 1);
//! Bob measures in the energy basis. With `q = |α_B|² + R` the probability of
//! reading 1 when Alice sent 0, the signal shifts it to `p = q + |λ_A λ_B S₂|`.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::quadrature::QuadOptions;
use crate::scenario::Scenario;
use crate::signalling::{s2, SignallingError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{what} = {value} is not a probability")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("noise term R = {0} must be non-negative")]
    NegativeNoise(f64),
    #[error("capacity expansion is undefined when bob starts in an energy eigenstate")]
    BobEigenstate,
    #[error(transparent)]
    Signalling(#[from] SignallingError),
}

fn check_probability(what: &'static str, value: f64) -> Result<(), ChannelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ChannelError::OutOfRange { what, value })
    }
}

/// Binary entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, ChannelError> {
    check_probability("entropy argument", x)?;
    Ok(entropy(x))
}

fn entropy(x: f64) -> f64 {
    let term = |y: f64| if y > 0.0 { -y * y.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// `(p, q)` at Bob's switch-off.
pub fn channel_probs(
    s: &Scenario,
    lambda_product: f64,
    noise_r: f64,
    opts: &QuadOptions,
) -> Result<(f64, f64), ChannelError> {
    if noise_r.is_nan() || noise_r < 0.0 {
        return Err(ChannelError::NegativeNoise(noise_r));
    }
    let signal = s2(s, s.bob().window.t_off, opts)?.value;
    probs_from_signal(s.bob().state.alpha.norm_sqr(), lambda_product * signal, noise_r)
}

/// `q = |α_B|² + R`, `p = q + |δ|`, both checked to be probabilities.
pub fn probs_from_signal(bob_excited: f64, delta: f64, noise_r: f64) -> Result<(f64, f64), ChannelError> {
    if noise_r.is_nan() || noise_r < 0.0 {
        return Err(ChannelError::NegativeNoise(noise_r));
    }
    let q = bob_excited + noise_r;
    check_probability("q", q)?;
    let p = q + delta.abs();
    check_probability("p", p)?;
    Ok((p, q))
}

/// Probability of guessing Alice's uniformly chosen bit: `½p + ½(1 − q)`.
pub fn guess_success(p: f64, q: f64) -> f64 {
    0.5 + 0.5 * (p - q)
}

/// Shannon capacity of the binary channel with `P(1|1) = p`, `P(1|0) = q`.
///
/// The optimal output probability solves `h'(r) = (h(p) − h(q))/(p − q)`,
/// i.e. `r* = 1/(1 + 2^s)`, and the capacity is the mutual information at the
/// prior `π* = (r* − q)/(p − q)`. That value is computed as
/// `π D(p‖r*) + (1 − π) D(q‖r*)` with the divergences written in terms of
/// `p − r*` and `q − r*`, so nothing of order one cancels when `p ≈ q`.
/// When `|p − q| < 1e-9` the leading term `(p − q)² / (8 ln2 · q(1 − q))` is used.
pub fn capacity_closed(p: f64, q: f64) -> Result<f64, ChannelError> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    let d = p - q;
    if d == 0.0 {
        return Ok(0.0);
    }
    if d.abs() < 1e-9 && q > 0.0 && q < 1.0 {
        return Ok((d * d / (8.0 * LN_2 * q * (1.0 - q))).clamp(0.0, 1.0));
    }
    let slope = (entropy(p) - entropy(q)) / d;
    let r = if slope > 0.0 {
        let t = (-slope).exp2();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + slope.exp2())
    };
    let pi = ((r - q) / d).clamp(0.0, 1.0);
    Ok(mutual_information_stable(pi, p, q).clamp(0.0, 1.0))
}

/// `ln(1 + x) − x`.
fn log1p_remainder(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let mut term = x;
        let mut sum = 0.0;
        for k in 2..40 {
            term *= -x;
            sum += term / k as f64;
        }
        sum
    } else {
        x.ln_1p() - x
    }
}

/// `D(a‖r)` in nats with `a = r + e`, accurate for small `e`.
fn divergence(r: f64, e: f64) -> f64 {
    let a = r + e;
    // linear parts of the two logarithms combine to e²/(r(1 − r))
    let mut out = e * e / (r * (1.0 - r));
    if a > 0.0 {
        out += a * log1p_remainder(e / r);
    }
    if a < 1.0 {
        out += (1.0 - a) * log1p_remainder(-e / (1.0 - r));
    }
    out
}

fn mutual_information_stable(pi: f64, p: f64, q: f64) -> f64 {
    let d = p - q;
    let r = q + pi * d;
    if !(r > 0.0 && r < 1.0) {
        return mutual_information(pi, p, q);
    }
    (pi * divergence(r, (1.0 - pi) * d) + (1.0 - pi) * divergence(r, -pi * d)) / LN_2
}

/// Mutual information for input prior `P(x = 1) = pi`.
pub fn mutual_information(pi: f64, p: f64, q: f64) -> f64 {
    entropy(pi * p + (1.0 - pi) * q) - pi * entropy(p) - (1.0 - pi) * entropy(q)
}

/// Capacity by direct maximisation of the (concave) mutual information over
/// the input prior. Returns `(capacity, optimal prior)`.
pub fn capacity_bruteforce(p: f64, q: f64, tol: f64) -> Result<(f64, f64), ChannelError> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    let tol = if tol > 0.0 { tol } else { 1e-15 };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // golden-section; stops once the bracket is below the float resolution of the prior
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = mutual_information(x1, p, q);
    let mut f2 = mutual_information(x2, p, q);
    while hi - lo > tol.min(1e-12) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = mutual_information(x2, p, q);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = mutual_information(x1, p, q);
        }
    }
    let pi = 0.5 * (lo + hi);
    Ok((mutual_information(pi, p, q).max(0.0), pi))
}

/// Leading small-signal capacity `λ_A²λ_B² (2/ln2) (S₂ / (4|α_B||β_B|))²`.
pub fn capacity_expansion(
    s2_value: f64,
    alpha_b: Complex64,
    beta_b: Complex64,
    lambda_a: f64,
    lambda_b: f64,
) -> Result<f64, ChannelError> {
    let denom = 4.0 * alpha_b.norm() * beta_b.norm();
    if denom == 0.0 {
        return Err(ChannelError::BobEigenstate);
    }
    let x = lambda_a * lambda_b * s2_value / denom;
    Ok(2.0 / LN_2 * x * x)
}

/// Everything about the channel for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub p: f64,
    pub q: f64,
    pub success: f64,
    pub capacity_closed: f64,
    /// `None` when Bob starts in an energy eigenstate.
    pub capacity_expansion: Option<f64>,
    pub capacity_bruteforce: f64,
}

impl ChannelStats {
    /// Builds the statistics from a precomputed `S₂` per `λ_A λ_B`.
    pub fn from_signal(
        alpha_b: Complex64,
        beta_b: Complex64,
        s2_value: f64,
        lambda_product: f64,
        noise_r: f64,
    ) -> Result<Self, ChannelError> {
        let (p, q) = probs_from_signal(alpha_b.norm_sqr(), lambda_product * s2_value, noise_r)?;
        let capacity_expansion = match capacity_expansion(s2_value, alpha_b, beta_b, lambda_product, 1.0) {
            Ok(c) => Some(c),
            Err(ChannelError::BobEigenstate) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            p,
            q,
            success: guess_success(p, q),
            capacity_closed: capacity_closed(p, q)?,
            capacity_expansion,
            capacity_bruteforce: capacity_bruteforce(p, q, 1e-12)?.0,
        })
    }

    pub fn compute(s: &Scenario, lambda_product: f64, noise_r: f64, opts: &QuadOptions) -> Result<Self, ChannelError> {
        let signal = s2(s, s.bob().window.t_off, opts)?.value;
        let b = &s.bob().state;
        Self::from_signal(b.alpha, b.beta, signal, lambda_product, noise_r)
    }
}

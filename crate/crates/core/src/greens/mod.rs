//! Vacuum kernels of the massless scalar field in flat spacetime.
//!
//! Two distributions enter the leading-order signalling terms:
//!
//! * the commutator, `[φ(x_A, t1), φ(x_B, t2)] = i D(t2 − t1, L)`, with
//!   `D(Δt, r) = ∫ dⁿk / ((2π)ⁿ |k|) sin(|k| Δt) cos(k·r)`;
//! * the field-energy kernel `F(τ, L) = ∫ dⁿk / (2π)ⁿ cos(|k| τ) cos(k·r)`,
//!   which is `∂D/∂Δt` evaluated at `Δt = τ` (and is even in `τ`).
//!
//! Both vanish for spacelike arguments. Inside the lightcone `D` is `1/2` in
//! 1+1D and `1/(2π√(Δt² − L²))` in 2+1D, and zero in 3+1D where everything
//! lives on the cone. `F` vanishes inside the cone except in 2+1D, where
//! differentiating `D` gives `−|τ| / (2π (τ² − L²)^{3/2})`. That closed form is
//! checked against [`regularized_momentum_integral`], which evaluates the
//! momentum integral directly with Abel damping `e^{−εk}` and extrapolates
//! `ε → 0`.

mod bessel;

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{integrate_1d, QuadError, QuadOptions};
use crate::scenario::Dimension;

pub use bessel::j0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreensError {
    #[error("separation must be finite and non-negative, got {0}")]
    InvalidSeparation(f64),
    #[error("{dim}: kernel has no pointwise value on the lightcone (|{dt}| = {l})")]
    OnLightcone { dim: Dimension, dt: f64, l: f64 },
    #[error("damping schedule must hold at least two positive, strictly decreasing values")]
    InvalidSchedule,
    #[error("extrapolation to zero damping did not converge: {value} ± {error} exceeds tolerance {tol}")]
    NonConvergence { value: f64, error: f64, tol: f64 },
    #[error("damped momentum integral failed: {0}")]
    Quadrature(#[from] QuadError),
}

/// Kernel at one point: a pointwise value (absent where the distribution is
/// singular) plus the weight of any `δ(|Δt| − L)` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    value: Option<f64>,
    pub on_lightcone_delta: f64,
    dim: Dimension,
    dt: f64,
    l: f64,
}

impl KernelValue {
    pub fn value(&self) -> Result<f64, GreensError> {
        self.value.ok_or(GreensError::OnLightcone {
            dim: self.dim,
            dt: self.dt,
            l: self.l,
        })
    }
}

fn check_separation(l: f64) -> Result<(), GreensError> {
    if l.is_finite() && l >= 0.0 {
        Ok(())
    } else {
        Err(GreensError::InvalidSeparation(l))
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pointwise commutator density `D(dt, l)` off the lightcone.
///
/// On the cone: `sgn(dt)/2` in 1+1D, `+∞` in 2+1D, `0` in 3+1D (whose weight
/// sits in the delta term, see [`commutator_kernel`]).
pub(crate) fn commutator_density(dim: Dimension, dt: f64, l: f64) -> f64 {
    let a = dt.abs();
    if a < l {
        return 0.0;
    }
    match dim {
        Dimension::D1p1 => 0.5 * sgn(dt),
        Dimension::D2p1 => {
            if a == l {
                f64::INFINITY
            } else {
                sgn(dt) / (2.0 * PI * ((a - l) * (a + l)).sqrt())
            }
        }
        Dimension::D3p1 => 0.0,
    }
}

/// Pointwise field-energy density `F(tau, l)` strictly off the lightcone.
pub(crate) fn field_energy_density(dim: Dimension, tau: f64, l: f64) -> f64 {
    let a = tau.abs();
    if a < l {
        return 0.0;
    }
    match dim {
        Dimension::D2p1 => {
            if a == l {
                f64::NEG_INFINITY
            } else {
                let r = (a - l) * (a + l);
                -a / (2.0 * PI * r * r.sqrt())
            }
        }
        Dimension::D1p1 | Dimension::D3p1 => 0.0,
    }
}

/// Commutator kernel `D(dt, L)` with `[φ(x_A, t1), φ(x_B, t2)] = i D`, `dt = t2 − t1`.
///
/// In 3+1D the delta weight is `sgn(dt) / (4πL)`: the same mode-sum
/// normalisation that gives the 2+1D value, as integrating it along a line
/// (method of descent) reproduces `1/(2π√(dt² − L²))`.
pub fn commutator_kernel(dim: Dimension, dt: f64, l: f64) -> Result<KernelValue, GreensError> {
    check_separation(l)?;
    let on_cone = dt.abs() == l;
    let value = match dim {
        Dimension::D1p1 => Some(commutator_density(dim, dt, l)),
        Dimension::D2p1 | Dimension::D3p1 if on_cone => None,
        _ => Some(commutator_density(dim, dt, l)),
    };
    let on_lightcone_delta = match dim {
        Dimension::D3p1 if l > 0.0 => sgn(dt) / (4.0 * PI * l),
        _ => 0.0,
    };
    Ok(KernelValue {
        value,
        on_lightcone_delta,
        dim,
        dt,
        l,
    })
}

/// Field-energy kernel `F(tau, L)`, `tau = t1 − t2`.
///
/// The weights of its on-cone parts are not provided; the pointwise value is
/// withheld on the cone in every dimension.
pub fn field_energy_kernel(dim: Dimension, tau: f64, l: f64) -> Result<KernelValue, GreensError> {
    check_separation(l)?;
    let value = if tau.abs() == l {
        None
    } else {
        Some(field_energy_density(dim, tau, l))
    };
    Ok(KernelValue {
        value,
        on_lightcone_delta: 0.0,
        dim,
        dt: tau,
        l,
    })
}

/// Outcome of the damped-and-extrapolated momentum integral.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedIntegral {
    pub value: f64,
    pub error_estimate: f64,
    /// `(ε, damped integral)` for each schedule entry.
    pub damped: Vec<(f64, f64)>,
    pub evaluations: usize,
}

/// Six halvings starting at a fifth of the distance from `|tau|` to the cone,
/// which keeps every `ε` well inside the radius of convergence of the damped
/// integral as a power series in `ε`.
pub fn default_eps_schedule(tau: f64, l: f64) -> Vec<f64> {
    let d = (tau.abs() - l).abs();
    (0..6).map(|j| 0.2 * d * 0.5f64.powi(j)).collect()
}

/// Radial integrand weight times the angular average of `cos(k·r)`.
fn radial_integrand(dim: Dimension, k: f64, l: f64) -> f64 {
    match dim {
        Dimension::D1p1 => (k * l).cos() / PI,
        Dimension::D2p1 => k * j0(k * l) / (2.0 * PI),
        Dimension::D3p1 => {
            let x = k * l;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            k * k * sinc / (2.0 * PI * PI)
        }
    }
}

/// `∫ dⁿk/(2π)ⁿ cos(|k| tau) cos(k·r) e^{−ε|k|}` for each `ε` in the schedule,
/// extrapolated to `ε → 0` by Neville's scheme.
///
/// Each damped integral is truncated at `k = 50/ε` and integrated adaptively
/// with panels no wider than a quarter of the fastest oscillation period.
/// The error estimate is the gap between the last two extrapolants plus the
/// propagated quadrature error.
pub fn regularized_momentum_integral(
    dim: Dimension,
    tau: f64,
    l: f64,
    eps_schedule: &[f64],
    tol: f64,
) -> Result<RegularizedIntegral, GreensError> {
    check_separation(l)?;
    if tau.abs() == l {
        return Err(GreensError::OnLightcone { dim, dt: tau, l });
    }
    let schedule_ok = eps_schedule.len() >= 2
        && eps_schedule.iter().all(|e| e.is_finite() && *e > 0.0)
        && eps_schedule.windows(2).all(|w| w[1] < w[0]);
    if !schedule_ok {
        return Err(GreensError::InvalidSchedule);
    }

    let period = 2.0 * PI / (tau.abs() + l);
    let mut damped = Vec::with_capacity(eps_schedule.len());
    let mut quad_errors = Vec::with_capacity(eps_schedule.len());
    let mut evaluations = 0;
    for &eps in eps_schedule {
        let k_max = 50.0 / eps;
        let opts = QuadOptions::default()
            .with_abs_tol(1e-3 * tol)
            .with_max_panel((0.25 * period).min(1.0 / eps))
            .with_max_evals(50_000_000);
        let r = integrate_1d(
            |k| radial_integrand(dim, k, l) * (k * tau).cos() * (-eps * k).exp(),
            0.0,
            k_max,
            &opts,
        )?;
        evaluations += r.evaluations;
        damped.push((eps, r.value));
        quad_errors.push(r.abs_error_estimate);
    }

    let xs: Vec<f64> = damped.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = damped.iter().map(|d| d.1).collect();
    let diagonal = neville_at_zero(&xs, &ys);
    let n = diagonal.len();
    let value = diagonal[n - 1];
    let propagated: f64 = lagrange_weights_at_zero(&xs)
        .iter()
        .zip(&quad_errors)
        .map(|(w, e)| w.abs() * e)
        .sum();
    let error = (diagonal[n - 1] - diagonal[n - 2]).abs() + propagated;
    if error > tol {
        return Err(GreensError::NonConvergence { value, error, tol });
    }
    Ok(RegularizedIntegral {
        value,
        error_estimate: error,
        damped,
        evaluations,
    })
}

/// Successive polynomial extrapolants to `x = 0` using the first `1, 2, …, n` points.
fn neville_at_zero(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut p = ys.to_vec();
    let mut diagonal = vec![p[0]];
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
        diagonal.push(p[0]);
    }
    diagonal
}

fn lagrange_weights_at_zero(xs: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            xs.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, xj)| xj / (xj - xs[i]))
                .product()
        })
        .collect()
}

//! Order-`λ_A λ_B` signalling observables.
//!
//! Every quantity here is linear in Alice's coherence `c_A = conj(α_A) β_A`
//! and in Bob's `c_B`, and is reported per `λ_A λ_B`. With `[φ, φ] = iD`:
//!
//! ```text
//! S₂(t)        = −4 ∫_{T₁}^{t} dt₂ ∫ dt₁ Re(c_A e^{iΩ_A t₁}) D(t₂ − t₁) Im(c_B e^{iΩ_B t₂})
//! ⟨H_I,B⟩(t)   = −4 Re(c_B e^{iΩ_B t}) ∫ dt₁ Re(c_A e^{iΩ_A t₁}) D(t − t₁)
//! ⟨H_f⟩(t)     =  4 ∫_{T₁}^{t} dt₂ ∫ dt₁ Re(c_A e^{iΩ_A t₁}) Re(c_B e^{iΩ_B t₂}) F(t₁ − t₂)
//! ```
//!
//! and `⟨H_B⟩ = Ω_B S₂`. Because `F = ∂D/∂Δt`, differentiating `⟨H_I,B⟩`
//! gives the balance `Ω_B S₂(T₂) + ⟨H_f⟩(T₂) = ⟨H_I,B⟩(T₁) − ⟨H_I,B⟩(T₂)`:
//! the work of switching Bob on and off pays for the change of detector and
//! field energy, and nothing is drawn from Alice.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::greens::{commutator_density, commutator_kernel, field_energy_density};
use crate::quadrature::{
    integrate_1d, integrate_2d_rect, integrate_across_lightcone, LightconeLine, QuadError, QuadOptions, QuadResult,
    Rect,
};
use crate::scenario::{classify, CausalClass, Dimension, InvalidScenario, Scenario, SwitchingWindow, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignallingError {
    #[error(transparent)]
    Invalid(#[from] InvalidScenario),
    #[error("evaluation time {t} precedes bob's switch-on at {t_on}")]
    BeforeBobSwitchOn { t: f64, t_on: f64 },
    #[error("evaluation time {t} lies outside bob's window [{}, {}]", window.t_on, window.t_off)]
    OutsideBobWindow { t: f64, window: SwitchingWindow },
    #[error("{what}: the lightcone crosses the switching windows in {dim}")]
    LightconeCrossing { dim: Dimension, what: &'static str },
    #[error("{what} needs strictly timelike windows, found {class}")]
    NotTimelike { what: &'static str, class: CausalClass },
    #[error("{what} is only defined in {expected}, scenario is {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: Dimension,
        got: Dimension,
    },
    #[error("null signalling needs a positive separation")]
    ZeroSeparation,
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
}

/// A computed quantity with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };

    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

impl From<QuadResult> for Estimate {
    fn from(r: QuadResult) -> Self {
        Self {
            value: r.value,
            error: r.abs_error_estimate,
        }
    }
}

/// All signalling contributions for one scenario, per `λ_A λ_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignallingReport {
    /// Time at which `s2`, `hb_sig` and `hf_sig` are evaluated.
    pub eval_time: f64,
    pub s2: f64,
    /// `Ω_B · s2`.
    pub hb_sig: f64,
    /// `⟨H_I,B⟩` just after Bob switches on.
    pub hi_on: f64,
    /// `⟨H_I,B⟩` just before Bob switches off.
    pub hi_off: f64,
    pub hf_sig: f64,
    /// Sum of the absolute error estimates of the four evaluations.
    pub quad_error: f64,
}

/// Narrows the initial quadrature panels to a quarter of the fastest detector period.
pub fn panel_options(s: &Scenario, base: &QuadOptions) -> QuadOptions {
    let omega = s.alice().gap.max(s.bob().gap);
    let quarter = 0.5 * PI / omega;
    let width = base.max_panel.map_or(quarter, |w| w.min(quarter));
    base.with_max_panel(width)
}

struct Coherences {
    alice: Complex64,
    omega_a: f64,
    bob: Complex64,
    omega_b: f64,
}

impl Coherences {
    fn of(s: &Scenario) -> Self {
        Self {
            alice: s.alice().state.coherence(),
            omega_a: s.alice().gap,
            bob: s.bob().state.coherence(),
            omega_b: s.bob().gap,
        }
    }

    fn vanish(&self) -> bool {
        self.alice == Complex64::new(0.0, 0.0) || self.bob == Complex64::new(0.0, 0.0)
    }

    fn alice_bias(&self, t: f64) -> f64 {
        (self.alice * Complex64::from_polar(1.0, self.omega_a * t)).re
    }

    fn bob_phase(&self, t: f64) -> Complex64 {
        self.bob * Complex64::from_polar(1.0, self.omega_b * t)
    }
}

fn window(s: &Scenario, role_alice: bool) -> (f64, f64) {
    let w = if role_alice { s.alice().window } else { s.bob().window };
    (w.t_on, w.t_off)
}

/// Bob's window truncated at `t`; `None` if nothing of it has elapsed.
fn elapsed_bob_window(s: &Scenario, t: f64) -> Result<Option<(f64, f64)>, SignallingError> {
    let (t_on, t_off) = window(s, false);
    if t.is_nan() || t < t_on {
        return Err(SignallingError::BeforeBobSwitchOn { t, t_on });
    }
    let end = t.min(t_off);
    Ok(if end > t_on { Some((t_on, end)) } else { None })
}

/// `S₂` at time `t ≥ T₁`.
///
/// Spacelike windows and detectors in energy eigenstates give exactly zero,
/// as do strictly timelike windows in 3+1D. Timelike 1+1D windows use the
/// separable closed form; everything else integrates numerically, declaring
/// the lightcone to the quadrature when it crosses the domain.
pub fn s2(s: &Scenario, t: f64, opts: &QuadOptions) -> Result<Estimate, SignallingError> {
    s.check()?;
    let Some(bob) = elapsed_bob_window(s, t)? else {
        return Ok(Estimate::ZERO);
    };
    if Coherences::of(s).vanish() {
        return Ok(Estimate::ZERO);
    }
    let class = classify(window(s, true), bob, s.separation());
    match (s.dimension(), class) {
        (_, CausalClass::Spacelike) => Ok(Estimate::ZERO),
        (Dimension::D3p1, CausalClass::Timelike) => Ok(Estimate::ZERO),
        (Dimension::D3p1, CausalClass::LightconeCrossing) => Err(SignallingError::LightconeCrossing {
            dim: Dimension::D3p1,
            what: "s2 (use the null-signalling evaluation)",
        }),
        (Dimension::D1p1, CausalClass::Timelike) => Ok(Estimate::exact(s2_closed_form_1p1(s, t)?)),
        _ => s2_quadrature(s, t, opts),
    }
}

/// `S₂` by two-dimensional quadrature regardless of dimension or window shape.
pub fn s2_quadrature(s: &Scenario, t: f64, opts: &QuadOptions) -> Result<Estimate, SignallingError> {
    s.check()?;
    let dim = s.dimension();
    let l = s.separation();
    if dim == Dimension::D3p1 {
        if let Some(bob) = elapsed_bob_window(s, t)? {
            if classify(window(s, true), bob, l) == CausalClass::LightconeCrossing {
                return Err(SignallingError::LightconeCrossing { dim, what: "s2" });
            }
        }
    }
    s2_with_kernel(s, t, opts, &|dt| commutator_density(dim, dt, l))
}

fn s2_with_kernel(
    s: &Scenario,
    t: f64,
    opts: &QuadOptions,
    kernel: &dyn Fn(f64) -> f64,
) -> Result<Estimate, SignallingError> {
    let Some(bob) = elapsed_bob_window(s, t)? else {
        return Ok(Estimate::ZERO);
    };
    let c = Coherences::of(s);
    let alice = window(s, true);
    let l = s.separation();
    let line = (classify(alice, bob, l) == CausalClass::LightconeCrossing).then_some(LightconeLine { separation: l });
    let r = integrate_2d_rect(
        |t1, t2| -4.0 * c.alice_bias(t1) * kernel(t2 - t1) * c.bob_phase(t2).im,
        Rect::new(alice, bob),
        &panel_options(s, opts),
        line,
    )?;
    Ok(r.into())
}

/// Separable form of `S₂` for the constant 1+1D kernel `D = 1/2`.
pub fn s2_closed_form_1p1(s: &Scenario, t: f64) -> Result<f64, SignallingError> {
    s.check()?;
    if s.dimension() != Dimension::D1p1 {
        return Err(SignallingError::DimensionMismatch {
            what: "closed-form s2",
            expected: Dimension::D1p1,
            got: s.dimension(),
        });
    }
    let Some((t_on, end)) = elapsed_bob_window(s, t)? else {
        return Ok(0.0);
    };
    let (a_on, a_off) = window(s, true);
    let class = classify((a_on, a_off), (t_on, end), s.separation());
    if class != CausalClass::Timelike {
        return Err(SignallingError::NotTimelike {
            what: "closed-form s2",
            class,
        });
    }
    let c = Coherences::of(s);
    // ∫ Re(c e^{iΩt}) dt = Im(c e^{iΩt}) / Ω and ∫ Im(c e^{iΩt}) dt = −Re(c e^{iΩt}) / Ω
    let alice_integral = (c.alice
        * (Complex64::from_polar(1.0, c.omega_a * a_off) - Complex64::from_polar(1.0, c.omega_a * a_on)))
    .im
        / c.omega_a;
    let bob_integral = -(c.bob
        * (Complex64::from_polar(1.0, c.omega_b * end) - Complex64::from_polar(1.0, c.omega_b * t_on)))
    .re
        / c.omega_b;
    Ok(-4.0 * 0.5 * alice_integral * bob_integral)
}

fn check_in_bob_window(s: &Scenario, t: f64) -> Result<(), SignallingError> {
    let w = s.bob().window;
    if w.contains(t) {
        Ok(())
    } else {
        Err(SignallingError::OutsideBobWindow { t, window: w })
    }
}

/// Signalling part of Bob's interaction energy `⟨H_I,B⟩(t)` for `T₁ ≤ t ≤ T₂`.
pub fn interaction_energy_sig(s: &Scenario, t: f64, opts: &QuadOptions) -> Result<Estimate, SignallingError> {
    s.check()?;
    check_in_bob_window(s, t)?;
    if Coherences::of(s).vanish() {
        return Ok(Estimate::ZERO);
    }
    let dim = s.dimension();
    let l = s.separation();
    let class = classify(window(s, true), (t, t), l);
    match (dim, class) {
        (_, CausalClass::Spacelike) | (Dimension::D3p1, CausalClass::Timelike) => Ok(Estimate::ZERO),
        (Dimension::D3p1, CausalClass::LightconeCrossing) => Err(SignallingError::LightconeCrossing {
            dim,
            what: "interaction energy",
        }),
        _ => interaction_with_kernel(s, t, opts, &|dt| commutator_density(dim, dt, l)),
    }
}

fn interaction_with_kernel(
    s: &Scenario,
    t: f64,
    opts: &QuadOptions,
    kernel: &dyn Fn(f64) -> f64,
) -> Result<Estimate, SignallingError> {
    let c = Coherences::of(s);
    let (a_on, a_off) = window(s, true);
    let l = s.separation();
    let opts = panel_options(s, opts);
    let integrand = |t1: f64| c.alice_bias(t1) * kernel(t - t1);
    let r = if classify((a_on, a_off), (t, t), l) == CausalClass::LightconeCrossing {
        integrate_across_lightcone(integrand, a_on, a_off, t, l, &opts)?
    } else {
        integrate_1d(integrand, a_on, a_off, &opts)?
    };
    Ok(r.scale(-4.0 * c.bob_phase(t).re).into())
}

/// Closed form of the 1+1D interaction energy once all of Alice's window is
/// in the past lightcone of `t`:
/// `(2/Ω_A) Re(α_B conj(β_B) e^{−iΩ_B t}) Im[α_A conj(β_A) (e^{−iΩ_A T_A} − e^{−iΩ_A T_0})]`,
/// with Alice switched on at `T_0` (zero in the usual setup).
pub fn interaction_energy_1p1_closed(s: &Scenario, t: f64) -> Result<f64, SignallingError> {
    s.check()?;
    if s.dimension() != Dimension::D1p1 {
        return Err(SignallingError::DimensionMismatch {
            what: "closed-form interaction energy",
            expected: Dimension::D1p1,
            got: s.dimension(),
        });
    }
    check_in_bob_window(s, t)?;
    let (a_on, a_off) = window(s, true);
    let class = classify((a_on, a_off), (t, t), s.separation());
    if class != CausalClass::Timelike {
        return Err(SignallingError::NotTimelike {
            what: "closed-form interaction energy",
            class,
        });
    }
    let (a, b) = (s.alice(), s.bob());
    let bob_part = (b.state.alpha * b.state.beta.conj() * Complex64::from_polar(1.0, -b.gap * t)).re;
    let alice_part = (a.state.alpha
        * a.state.beta.conj()
        * (Complex64::from_polar(1.0, -a.gap * a_off) - Complex64::from_polar(1.0, -a.gap * a_on)))
    .im;
    Ok(2.0 / a.gap * bob_part * alice_part)
}

/// Signalling part of the field energy at time `t ≥ T₁`.
///
/// Only the part of the kernel inside the lightcone is known pointwise, so any
/// configuration where the cone meets the elapsed windows is rejected.
pub fn field_energy_sig(s: &Scenario, t: f64, opts: &QuadOptions) -> Result<Estimate, SignallingError> {
    s.check()?;
    let Some(bob) = elapsed_bob_window(s, t)? else {
        return Ok(Estimate::ZERO);
    };
    let c = Coherences::of(s);
    if c.vanish() {
        return Ok(Estimate::ZERO);
    }
    let dim = s.dimension();
    let l = s.separation();
    let alice = window(s, true);
    match (dim, classify(alice, bob, l)) {
        (_, CausalClass::Spacelike) => Ok(Estimate::ZERO),
        (_, CausalClass::LightconeCrossing) => Err(SignallingError::LightconeCrossing {
            dim,
            what: "field energy",
        }),
        (Dimension::D1p1 | Dimension::D3p1, CausalClass::Timelike) => Ok(Estimate::ZERO),
        (Dimension::D2p1, CausalClass::Timelike) => {
            let r = integrate_2d_rect(
                |t1, t2| 4.0 * c.alice_bias(t1) * c.bob_phase(t2).re * field_energy_density(dim, t1 - t2, l),
                Rect::new(alice, bob),
                &panel_options(s, opts),
                None,
            )?;
            Ok(r.into())
        }
    }
}

/// Terms of the switching energy balance at order `λ_A λ_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `[Ω_B S₂(T₂) + ⟨H_f⟩(T₂)] − [⟨H_I,B⟩(T₁) − ⟨H_I,B⟩(T₂)]`.
    pub residual: f64,
    /// Sum of the error estimates of the four terms.
    pub error_budget: f64,
    pub hb_sig: f64,
    pub hf_sig: f64,
    pub hi_on: f64,
    pub hi_off: f64,
}

pub fn energy_balance_residual(s: &Scenario, opts: &QuadOptions) -> Result<EnergyBalance, SignallingError> {
    s.check()?;
    let class = s.causal_class();
    if class != CausalClass::Timelike {
        return Err(SignallingError::NotTimelike {
            what: "energy balance",
            class,
        });
    }
    let (t_on, t_off) = window(s, false);
    let omega_b = s.bob().gap;
    let s2v = s2(s, t_off, opts)?;
    let hf = field_energy_sig(s, t_off, opts)?;
    let on = interaction_energy_sig(s, t_on, opts)?;
    let off = interaction_energy_sig(s, t_off, opts)?;
    Ok(balance(omega_b, s2v, hf, on, off))
}

fn balance(omega_b: f64, s2v: Estimate, hf: Estimate, on: Estimate, off: Estimate) -> EnergyBalance {
    let hb = omega_b * s2v.value;
    EnergyBalance {
        residual: (hb + hf.value) - (on.value - off.value),
        error_budget: omega_b * s2v.error + hf.error + on.error + off.error,
        hb_sig: hb,
        hf_sig: hf.value,
        hi_on: on.value,
        hi_off: off.value,
    }
}

/// `S₂` carried by the on-cone delta of the 3+1D commutator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSignal {
    pub value: f64,
    pub error: f64,
    /// False when the lightcone misses the windows and the value is zero.
    pub intersects: bool,
}

/// 3+1D signalling along the lightcone, after Bob has switched off.
///
/// The delta term `w δ(t₂ − t₁ − L)` collapses the double integral onto the
/// overlap of Alice's window with Bob's shifted back by `L`. The overall sign
/// follows the delta weight of [`commutator_kernel`], which is a convention;
/// the magnitude is not.
///
/// Bob's window may overlap Alice's here: the collapsed integral only needs
/// the pairs on the future cone, so the switching order is not enforced.
pub fn s2_null_3p1(s: &Scenario, opts: &QuadOptions) -> Result<NullSignal, SignallingError> {
    let violations: Vec<Violation> = s
        .validate()
        .violations
        .into_iter()
        .filter(|v| !matches!(v, Violation::Ordering { .. }))
        .collect();
    if !violations.is_empty() {
        return Err(InvalidScenario(violations).into());
    }
    if s.dimension() != Dimension::D3p1 {
        return Err(SignallingError::DimensionMismatch {
            what: "null signalling",
            expected: Dimension::D3p1,
            got: s.dimension(),
        });
    }
    let l = s.separation();
    if l <= 0.0 {
        return Err(SignallingError::ZeroSeparation);
    }
    let (a_on, a_off) = window(s, true);
    let (b_on, b_off) = window(s, false);
    let lo = a_on.max(b_on - l);
    let hi = a_off.min(b_off - l);
    let c = Coherences::of(s);
    if lo >= hi || c.vanish() {
        return Ok(NullSignal {
            value: 0.0,
            error: 0.0,
            intersects: lo < hi,
        });
    }
    let weight = commutator_kernel(Dimension::D3p1, l, l)
        .map_err(|_| SignallingError::ZeroSeparation)?
        .on_lightcone_delta;
    // Re(c_B e^{iΩ_B t₂} · i w) = −w Im(c_B e^{iΩ_B t₂})
    let r = integrate_1d(
        |t1| -4.0 * weight * c.alice_bias(t1) * c.bob_phase(t1 + l).im,
        lo,
        hi,
        &panel_options(s, opts),
    )?;
    Ok(NullSignal {
        value: r.value,
        error: r.abs_error_estimate,
        intersects: true,
    })
}

/// Evaluates every signalling contribution, with `s2`, `hb_sig` and `hf_sig`
/// at `eval_time` (Bob's switch-off when `None`).
pub fn report(s: &Scenario, eval_time: Option<f64>, opts: &QuadOptions) -> Result<SignallingReport, SignallingError> {
    s.check()?;
    let (t_on, t_off) = window(s, false);
    let t = eval_time.unwrap_or(t_off);
    let s2v = s2(s, t, opts)?;
    let hf = field_energy_sig(s, t, opts)?;
    let on = interaction_energy_sig(s, t_on, opts)?;
    let off = interaction_energy_sig(s, t_off, opts)?;
    Ok(SignallingReport {
        eval_time: t,
        s2: s2v.value,
        hb_sig: s.bob().gap * s2v.value,
        hi_on: on.value,
        hi_off: off.value,
        hf_sig: hf.value,
        quad_error: s2v.error + hf.error + on.error + off.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ComplexAmplitudePair, DetectorSpec};
    use rand::{Rng, SeedableRng};

    fn tight() -> QuadOptions {
        QuadOptions::default().with_abs_tol(1e-12)
    }

    fn figure_1p1() -> Scenario {
        Scenario::on_axis(
            Dimension::D1p1,
            0.5,
            (3.0, ComplexAmplitudePair::minus_i(), SwitchingWindow::new(0.0, 3.0)),
            (3.0, ComplexAmplitudePair::plus(), SwitchingWindow::new(5.0, 8.0)),
        )
    }

    fn random_state(rng: &mut impl Rng) -> ComplexAmplitudePair {
        let theta: f64 = rng.gen_range(0.05..(PI / 2.0 - 0.05));
        ComplexAmplitudePair::new(
            Complex64::from_polar(theta.cos(), rng.gen_range(0.0..2.0 * PI)),
            Complex64::from_polar(theta.sin(), rng.gen_range(0.0..2.0 * PI)),
        )
    }

    fn random_timelike(rng: &mut impl Rng, dim: Dimension) -> Scenario {
        let l: f64 = rng.gen_range(0.2..2.0);
        let ta: f64 = rng.gen_range(0.5..4.0);
        let t1 = ta + l + rng.gen_range(0.2..3.0);
        let tb: f64 = rng.gen_range(0.5..4.0);
        Scenario::on_axis(
            dim,
            l,
            (rng.gen_range(0.5..6.0), random_state(rng), SwitchingWindow::new(0.0, ta)),
            (rng.gen_range(0.5..6.0), random_state(rng), SwitchingWindow::new(t1, t1 + tb)),
        )
    }

    #[test]
    fn one_plus_one_reference_value() {
        let s = figure_1p1();
        let closed = s2_closed_form_1p1(&s, 8.0).unwrap();
        let exact = 4.0 * ((1.0 - 9f64.cos()) / 6.0) * (-(15f64.cos() - 24f64.cos()) / 12.0);
        assert!((closed - exact).abs() < 1e-15);
        assert!((closed - 0.125_695_772_068_357_8).abs() < 1e-15);
        let quad = s2_quadrature(&s, 8.0, &tight()).unwrap();
        assert!((quad.value - closed).abs() < 1e-11, "{} vs {closed}", quad.value);
        // after switch-off the value is frozen
        assert_eq!(s2_closed_form_1p1(&s, 20.0).unwrap(), closed);
        assert_eq!(s2(&s, 5.0, &tight()).unwrap().value, 0.0);
    }

    #[test]
    fn eigenstates_and_full_periods_give_zero() {
        let s = figure_1p1();
        for state in [ComplexAmplitudePair::excited(), ComplexAmplitudePair::ground()] {
            for dim in Dimension::ALL {
                let sb = s.with_dimension(dim).with_bob_state(state);
                assert_eq!(s2(&sb, 8.0, &tight()).unwrap().value, 0.0);
                let sa = s.with_dimension(dim).with_alice_state(state);
                assert_eq!(interaction_energy_sig(&sa, 6.0, &tight()).unwrap().value, 0.0);
                assert_eq!(field_energy_sig(&sa, 8.0, &tight()).unwrap().value, 0.0);
                if dim != Dimension::D3p1 || sa.causal_class() == CausalClass::Timelike {
                    let b = energy_balance_residual(&sa, &tight()).unwrap();
                    assert_eq!(b.residual, 0.0);
                }
            }
        }
        // real amplitudes, Ω_A T_A = 2π: ∫ cos over a full period vanishes
        let full = Scenario::on_axis(
            Dimension::D1p1,
            0.5,
            (2.0 * PI / 3.0, ComplexAmplitudePair::plus(), SwitchingWindow::new(0.0, 3.0)),
            (3.0, ComplexAmplitudePair::plus(), SwitchingWindow::new(5.0, 8.0)),
        );
        assert!(s2_closed_form_1p1(&full, 8.0).unwrap().abs() < 1e-16);
        assert!(interaction_energy_1p1_closed(&full, 6.0).unwrap().abs() < 1e-16);
    }

    #[test]
    fn interaction_energy_matches_analytic_one_plus_one() {
        let s = figure_1p1();
        let closed = interaction_energy_1p1_closed(&s, 5.0).unwrap();
        let quad = interaction_energy_sig(&s, 5.0, &tight()).unwrap();
        assert!((closed - quad.value).abs() < 1e-10);
        // α_A β_A* real: the Alice factor reduces to −|α_A β_A| sin(Ω_A T_A)
        let real = s.with_alice_state(ComplexAmplitudePair::plus());
        let closed = interaction_energy_1p1_closed(&real, 6.5).unwrap();
        let bob = (0.5 * Complex64::from_polar(1.0, -3.0 * 6.5)).re;
        assert!((closed - 2.0 / 3.0 * bob * (-0.5 * 9f64.sin())).abs() < 1e-15);
        assert!((interaction_energy_sig(&real, 6.5, &tight()).unwrap().value - closed).abs() < 1e-10);
    }

    #[test]
    fn precondition_errors() {
        let s = figure_1p1();
        assert!(matches!(
            interaction_energy_sig(&s, 9.0, &tight()),
            Err(SignallingError::OutsideBobWindow { .. })
        ));
        assert!(matches!(s2(&s, 4.0, &tight()), Err(SignallingError::BeforeBobSwitchOn { .. })));
        assert!(matches!(
            s2_closed_form_1p1(&s.with_dimension(Dimension::D2p1), 8.0),
            Err(SignallingError::DimensionMismatch { .. })
        ));
        let crossing = s.with_bob_t_on(3.2);
        assert!(matches!(
            s2_closed_form_1p1(&crossing, 6.2),
            Err(SignallingError::NotTimelike { .. })
        ));
        assert!(matches!(
            s2(&crossing.with_dimension(Dimension::D3p1), 6.2, &tight()),
            Err(SignallingError::LightconeCrossing { .. })
        ));
        assert!(matches!(
            field_energy_sig(&crossing.with_dimension(Dimension::D2p1), 6.2, &tight()),
            Err(SignallingError::LightconeCrossing { .. })
        ));
        assert!(matches!(
            energy_balance_residual(&crossing, &tight()),
            Err(SignallingError::NotTimelike { .. })
        ));
        let mut bad = s.with_bob_t_on(2.0);
        assert!(matches!(s2(&bad, 8.0, &tight()), Err(SignallingError::Invalid(_))));
        bad = s.with_dimension(Dimension::D1p1);
        assert!(s2_null_3p1(&bad, &tight()).is_err());
    }

    #[test]
    fn crossing_windows_in_lower_dimensions() {
        // 1+1D, cone enters Bob's window: the timelike part only
        let s = figure_1p1().with_bob_t_on(3.2).with_separation(1.0);
        let q = s2(&s, 6.2, &tight()).unwrap();
        // brute force: midpoint in t1 per t2 with the step kernel, analytic in the Alice integral
        let c = Coherences::of(&s);
        let n = 20_000;
        let h = 3.0 / n as f64;
        let mut acc = 0.0;
        for j in 0..n {
            let t2 = 3.2 + (j as f64 + 0.5) * h;
            // Alice contributes where t1 < t2 − 1
            let upper = (t2 - 1.0).min(3.0);
            let alice = (c.alice * (Complex64::from_polar(1.0, 3.0 * upper) - 1.0)).im / 3.0;
            acc += -4.0 * 0.5 * alice * c.bob_phase(t2).im * h;
        }
        assert!((q.value - acc).abs() < 1e-7, "{} vs {acc}", q.value);

        // 2+1D crossing is finite and its interaction energy at switch-on too
        let s = s.with_dimension(Dimension::D2p1);
        let q = s2(&s, 6.2, &QuadOptions::default()).unwrap();
        assert!(q.value.is_finite() && q.value != 0.0);
        let hi = interaction_energy_sig(&s, 3.2, &QuadOptions::default()).unwrap();
        assert!(hi.value.is_finite());
    }

    #[test]
    fn spacelike_is_exactly_zero() {
        let s = figure_1p1().with_separation(20.0);
        for dim in Dimension::ALL {
            let sd = s.with_dimension(dim);
            let r = report(&sd, None, &tight()).unwrap();
            assert_eq!((r.s2, r.hb_sig, r.hi_on, r.hi_off, r.hf_sig), (0.0, 0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn three_plus_one_timelike_is_exactly_zero() {
        let s = figure_1p1().with_dimension(Dimension::D3p1);
        let r = report(&s, None, &tight()).unwrap();
        assert_eq!((r.s2, r.hi_on, r.hi_off, r.hf_sig, r.quad_error), (0.0, 0.0, 0.0, 0.0, 0.0));
        let n = s2_null_3p1(&s, &tight()).unwrap();
        assert_eq!(n.value, 0.0);
        assert!(!n.intersects);
    }

    #[test]
    fn null_signal_matches_riemann_sum() {
        let s = Scenario::on_axis(
            Dimension::D3p1,
            1.0,
            (3.0, ComplexAmplitudePair::minus_i(), SwitchingWindow::new(0.0, 3.0)),
            (3.0, ComplexAmplitudePair::plus(), SwitchingWindow::new(2.0, 6.0)),
        );
        let n = s2_null_3p1(&s, &tight()).unwrap();
        assert!(n.intersects);
        // overlap t1 ∈ [1, 3]; integrand 4·(1/(4π))·(−1)·(½ sin 3t1)·(½ sin 3(t1 + 1))
        let m = 1_000_000;
        let h = 2.0 / m as f64;
        let riemann: f64 = (0..m)
            .map(|i| {
                let t1 = 1.0 + (i as f64 + 0.5) * h;
                -(1.0 / PI) * 0.5 * (3.0 * t1).sin() * 0.5 * (3.0 * (t1 + 1.0)).sin() * h
            })
            .sum();
        assert!((n.value - riemann).abs() < 1e-9, "{} vs {riemann}", n.value);
        let eig = s.with_bob_state(ComplexAmplitudePair::ground());
        assert_eq!(s2_null_3p1(&eig, &tight()).unwrap().value, 0.0);
    }

    #[test]
    fn hb_is_gap_times_s2() {
        let s = Scenario::reference(Dimension::D2p1, 5.0);
        let r = report(&s, None, &QuadOptions::default()).unwrap();
        assert!((r.hb_sig - 3.0 * r.s2).abs() <= 1e-12 * r.hb_sig.abs().max(1.0));
    }

    #[test]
    fn energy_balance_on_random_scenarios() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for dim in [Dimension::D1p1, Dimension::D2p1] {
            for _ in 0..6 {
                let s = random_timelike(&mut rng, dim);
                let b = energy_balance_residual(&s, &QuadOptions::default()).unwrap();
                assert!(
                    b.residual.abs() <= (10.0 * b.error_budget).max(1e-8),
                    "{dim}: {b:?}"
                );
            }
        }
    }

    #[test]
    fn sign_error_in_the_commutator_breaks_the_balance_in_two_plus_one() {
        let s = Scenario::reference(Dimension::D2p1, 5.0);
        let l = s.separation();
        let opts = QuadOptions::default();
        let flipped = |dt: f64| -commutator_density(Dimension::D2p1, dt, l);
        let s2v = s2_with_kernel(&s, 8.0, &opts, &flipped).unwrap();
        let on = interaction_with_kernel(&s, 5.0, &opts, &flipped).unwrap();
        let off = interaction_with_kernel(&s, 8.0, &opts, &flipped).unwrap();
        let hf = field_energy_sig(&s, 8.0, &opts).unwrap();
        let mutated = balance(3.0, s2v, hf, on, off);
        assert!(mutated.residual.abs() > 100.0 * mutated.error_budget.max(1e-8), "{mutated:?}");
        // the orthogonal-state flip cannot see it
        let flipped_orth = s2_with_kernel(&s.with_bob_state(s.bob().state.orthogonal()), 8.0, &opts, &flipped).unwrap();
        assert!((flipped_orth.value + s2v.value).abs() < 1e-9);
        // in 1+1D the field term vanishes and the mutation goes unnoticed
        let s1 = s.with_dimension(Dimension::D1p1);
        let flip1 = |dt: f64| -commutator_density(Dimension::D1p1, dt, l);
        let m1 = balance(
            3.0,
            s2_with_kernel(&s1, 8.0, &opts, &flip1).unwrap(),
            Estimate::ZERO,
            interaction_with_kernel(&s1, 5.0, &opts, &flip1).unwrap(),
            interaction_with_kernel(&s1, 8.0, &opts, &flip1).unwrap(),
        );
        assert!(m1.residual.abs() < 1e-8);
    }

    #[test]
    fn orthogonal_state_flips_every_contribution() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for dim in Dimension::ALL {
            let s = random_timelike(&mut rng, dim);
            let r = report(&s, None, &tight()).unwrap();
            for flipped in [
                s.with_alice_state(s.alice().state.orthogonal()),
                s.with_bob_state(s.bob().state.orthogonal()),
            ] {
                let f = report(&flipped, None, &tight()).unwrap();
                let tol = 10.0 * (r.quad_error + f.quad_error) + 1e-12;
                assert!((r.s2 + f.s2).abs() <= tol);
                assert!((r.hi_on + f.hi_on).abs() <= tol);
                assert!((r.hi_off + f.hi_off).abs() <= tol);
                assert!((r.hf_sig + f.hf_sig).abs() <= tol);
            }
        }
    }

    #[test]
    fn positions_only_enter_through_the_separation() {
        let s = Scenario::reference(Dimension::D2p1, 5.0);
        let moved = Scenario::new(
            Dimension::D2p1,
            DetectorSpec::new(3.0, ComplexAmplitudePair::minus_i(), vec![2.0, -1.0], SwitchingWindow::new(0.0, 3.0)),
            DetectorSpec::new(3.0, ComplexAmplitudePair::plus(), vec![2.6, -1.8], SwitchingWindow::new(5.0, 8.0)),
        );
        assert!((moved.separation() - 1.0).abs() < 1e-15);
        let a = report(&s, None, &tight()).unwrap();
        let b = report(&moved, None, &tight()).unwrap();
        assert!((a.s2 - b.s2).abs() < 1e-12);
    }
}

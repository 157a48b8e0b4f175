//! Built-in invariant suite.
//!
//! Every check evaluates one physical or numerical invariant on fixed or
//! seeded random scenarios and reports the worst measured deviation next to
//! the tolerance it was held to.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::channel::{binary_entropy, capacity_bruteforce, capacity_closed, capacity_expansion, guess_success};
use crate::greens::{default_eps_schedule, field_energy_kernel, regularized_momentum_integral};
use crate::quadrature::QuadOptions;
use crate::scenario::{ComplexAmplitudePair, Dimension, Scenario, SwitchingWindow};
use crate::signalling::{
    energy_balance_residual, field_energy_sig, interaction_energy_1p1_closed, interaction_energy_sig, report, s2,
    s2_closed_form_1p1, s2_quadrature, SignallingError,
};

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Worst deviation found, in the units of `tolerance`; NaN if evaluation failed.
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn within(name: &'static str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &'static str, tolerance: f64, err: impl fmt::Display) -> Self {
        Self {
            name,
            measured: f64::NAN,
            tolerance,
            passed: false,
            detail: format!("evaluation failed: {err}"),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} measured {:>10.3e}  tolerance {:>10.3e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub quad: QuadOptions,
    /// Relative tolerance for the generic-versus-closed-form 1+1D comparison.
    pub equivalence_tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions::default(),
            equivalence_tol: 1e-8,
            samples: 20,
            seed: 0x51_6e_61_6c,
        }
    }
}

/// A normalised state with both amplitudes bounded away from zero.
pub fn random_state(rng: &mut impl Rng) -> ComplexAmplitudePair {
    let theta: f64 = rng.gen_range(0.1..(PI / 2.0 - 0.1));
    ComplexAmplitudePair::new(
        Complex64::from_polar(theta.cos(), rng.gen_range(0.0..2.0 * PI)),
        Complex64::from_polar(theta.sin(), rng.gen_range(0.0..2.0 * PI)),
    )
}

/// Strictly timelike on-axis scenario with gaps in `[0.5, 10]` and window
/// lengths in `[0.5, 5]`.
pub fn random_timelike(rng: &mut impl Rng, dim: Dimension) -> Scenario {
    let l: f64 = rng.gen_range(0.1..2.0);
    let ta: f64 = rng.gen_range(0.5..5.0);
    let t1 = ta + l + rng.gen_range(0.1..3.0);
    let tb: f64 = rng.gen_range(0.5..5.0);
    Scenario::on_axis(
        dim,
        l,
        (rng.gen_range(0.5..10.0), random_state(rng), SwitchingWindow::new(0.0, ta)),
        (rng.gen_range(0.5..10.0), random_state(rng), SwitchingWindow::new(t1, t1 + tb)),
    )
}

/// Strictly spacelike on-axis scenario.
pub fn random_spacelike(rng: &mut impl Rng, dim: Dimension) -> Scenario {
    let ta: f64 = rng.gen_range(0.5..5.0);
    let t1 = ta + rng.gen_range(0.0..2.0);
    let t2 = t1 + rng.gen_range(0.5..5.0);
    let l = t2 + rng.gen_range(0.1..3.0);
    Scenario::on_axis(
        dim,
        l,
        (rng.gen_range(0.5..10.0), random_state(rng), SwitchingWindow::new(0.0, ta)),
        (rng.gen_range(0.5..10.0), random_state(rng), SwitchingWindow::new(t1, t2)),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Root mean square of `f` on `n` equally spaced points of `[a, b]`.
pub fn rms(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> Result<f64, SignallingError>) -> Result<f64, SignallingError> {
    let mut acc = 0.0;
    for i in 0..n {
        let t = a + (b - a) * i as f64 / (n - 1) as f64;
        let v = f(t)?;
        acc += v * v;
    }
    Ok((acc / n as f64).sqrt())
}

fn one_plus_one_equivalence(o: &SuiteOptions, rng: &mut StdRng) -> Check {
    let name = "s2_1p1_closed_form";
    let opts = o.quad.with_abs_tol(o.quad.abs_tol.min(1e-12));
    let mut worst: f64 = 0.0;
    for _ in 0..o.samples {
        let s = random_timelike(rng, Dimension::D1p1);
        let t = s.bob().window.t_off;
        match (s2_quadrature(&s, t, &opts), s2_closed_form_1p1(&s, t)) {
            (Ok(q), Ok(c)) => worst = worst.max(rel(q.value, c)),
            (Err(e), _) | (_, Err(e)) => return Check::failed(name, o.equivalence_tol, e),
        }
    }
    Check::within(name, worst, o.equivalence_tol, "relative, generic 2D quadrature vs closed form")
}

fn interaction_closed_form(o: &SuiteOptions, rng: &mut StdRng) -> Check {
    let name = "interaction_energy_1p1";
    let tol = 1e-10;
    let opts = o.quad.with_abs_tol(o.quad.abs_tol.min(1e-12));
    let mut worst: f64 = 0.0;
    for _ in 0..o.samples {
        let s = random_timelike(rng, Dimension::D1p1);
        let w = s.bob().window;
        let t = rng.gen_range(w.t_on..=w.t_off);
        match (interaction_energy_sig(&s, t, &opts), interaction_energy_1p1_closed(&s, t)) {
            (Ok(q), Ok(c)) => worst = worst.max((q.value - c).abs()),
            (Err(e), _) | (_, Err(e)) => return Check::failed(name, tol, e),
        }
    }
    Check::within(name, worst, tol, "absolute, 1D quadrature vs closed form")
}

fn exact_zero(name: &'static str, detail: &str, cases: impl Iterator<Item = Result<f64, SignallingError>>) -> Check {
    let mut worst: f64 = 0.0;
    for c in cases {
        match c {
            Ok(v) => worst = worst.max(v.abs()),
            Err(e) => return Check::failed(name, 0.0, e),
        }
    }
    Check::within(name, worst, 0.0, detail)
}

fn huygens(o: &SuiteOptions, rng: &mut StdRng) -> Check {
    let cases: Vec<_> = (0..o.samples).map(|_| random_timelike(rng, Dimension::D3p1)).collect();
    exact_zero(
        "huygens_3p1_timelike",
        "max |s2|, 3+1D timelike windows",
        cases.iter().map(|s| s2(s, s.bob().window.t_off, &o.quad).map(|e| e.value)),
    )
}

fn causality(o: &SuiteOptions, rng: &mut StdRng) -> Check {
    let mut cases = Vec::new();
    for dim in Dimension::ALL {
        for _ in 0..o.samples {
            cases.push(random_spacelike(rng, dim));
        }
    }
    exact_zero(
        "causality_spacelike",
        "max |s2|, |H_I|, |H_f|, spacelike windows",
        cases.iter().map(|s| {
            let r = report(s, None, &o.quad)?;
            Ok(r.s2.abs().max(r.hi_on.abs()).max(r.hi_off.abs()).max(r.hf_sig.abs()))
        }),
    )
}

fn eigenstate_nullity(o: &SuiteOptions, rng: &mut StdRng) -> Check {
    let mut cases = Vec::new();
    for dim in Dimension::ALL {
        let s = random_timelike(rng, dim);
        for e in [ComplexAmplitudePair::excited(), ComplexAmplitudePair::ground()] {
            cases.push(s.with_alice_state(e));
            cases.push(s.with_bob_state(e));
        }
    }
    exact_zero(
        "eigenstate_nullity",
        "max over all signalling outputs",
        cases.iter().map(|s| {
            let r = report(s, None, &o.quad)?;
            Ok(r.s2.abs().max(r.hi_on.abs()).max(r.hi_off.abs()).max(r.hf_sig.abs()))
        }),
    )
}

/// Worst `|F_closed − F_regularized| / |F_closed|` on the lock-in grid.
pub fn field_kernel_lockin_error() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for l in [0.5, 1.0, 2.0] {
        for ratio in [1.1, 1.5, 2.0, 3.0, 5.0, 10.0] {
            let tau = ratio * l;
            let closed = field_energy_kernel(Dimension::D2p1, tau, l)
                .and_then(|k| k.value())
                .map_err(|e| e.to_string())?;
            let reg = regularized_momentum_integral(Dimension::D2p1, tau, l, &default_eps_schedule(tau, l), 1e-5 * closed.abs())
                .map_err(|e| e.to_string())?;
            worst = worst.max(rel(closed, reg.value));
        }
    }
    Ok(worst)
}

fn field_kernel_lockin() -> Check {
    let name = "field_kernel_lockin_2p1";
    match field_kernel_lockin_error() {
        Ok(w) => Check::within(name, w, 1e-4, "relative, closed form vs damped momentum integral"),
        Err(e) => Check::failed(name, 1e-4, e),
    }
}

fn balance(o: &SuiteOptions, rng: &mut StdRng) -> Vec<Check> {
    let mut out = Vec::new();
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    let name1 = "energy_balance_1p1";
    let name2 = "energy_balance_2p1";
    for i in 0..o.samples {
        let s1 = random_timelike(rng, Dimension::D1p1);
        match energy_balance_residual(&s1, &o.quad) {
            Ok(b) => worst1 = worst1.max(b.residual.abs()),
            Err(e) => return vec![Check::failed(name1, 1e-8, e)],
        }
        if i < o.samples.div_ceil(2) {
            let s2d = random_timelike(rng, Dimension::D2p1);
            match energy_balance_residual(&s2d, &o.quad) {
                Ok(b) => worst2 = worst2.max(b.residual.abs() / (10.0 * b.error_budget).max(1e-6)),
                Err(e) => return vec![Check::failed(name2, 1.0, e)],
            }
        }
    }
    for t1 in [4.5, 5.0, 6.0, 8.0, 10.0] {
        match energy_balance_residual(&Scenario::reference(Dimension::D2p1, t1), &o.quad) {
            Ok(b) => worst2 = worst2.max(b.residual.abs() / (10.0 * b.error_budget).max(1e-6)),
            Err(e) => return vec![Check::failed(name2, 1.0, e)],
        }
    }
    out.push(Check::within(name1, worst1, 1e-8, "absolute residual"));
    out.push(Check::within(
        name2,
        worst2,
        1.0,
        "residual / max(1e-6, 10 x combined error estimate)",
    ));
    out
}

fn orthogonal_flip(o: &SuiteOptions, rng: &mut StdRng) -> Check {
    let name = "orthogonal_state_flip";
    let mut worst: f64 = 0.0;
    for dim in Dimension::ALL {
        for _ in 0..o.samples.div_ceil(2) {
            let s = random_timelike(rng, dim);
            let flips = [
                s.with_alice_state(s.alice().state.orthogonal()),
                s.with_bob_state(s.bob().state.orthogonal()),
            ];
            let base = match report(&s, None, &o.quad) {
                Ok(r) => r,
                Err(e) => return Check::failed(name, 1.0, e),
            };
            for f in &flips {
                let r = match report(f, None, &o.quad) {
                    Ok(r) => r,
                    Err(e) => return Check::failed(name, 1.0, e),
                };
                let allowed = 10.0 * (base.quad_error + r.quad_error) + 1e-12;
                for (a, b) in [
                    (base.s2, r.s2),
                    (base.hi_on, r.hi_on),
                    (base.hi_off, r.hi_off),
                    (base.hf_sig, r.hf_sig),
                ] {
                    worst = worst.max((a + b).abs() / allowed);
                }
            }
        }
    }
    Check::within(name, worst, 1.0, "|x + x_flipped| / (10 x error estimate + 1e-12)")
}

fn gap_times_s2(o: &SuiteOptions) -> Check {
    let name = "hb_equals_gap_times_s2";
    let mut worst: f64 = 0.0;
    for dim in [Dimension::D1p1, Dimension::D2p1] {
        let s = Scenario::reference(dim, 5.0);
        match (report(&s, None, &o.quad), s2(&s, 8.0, &o.quad)) {
            (Ok(r), Ok(v)) => worst = worst.max(rel(r.hb_sig, s.bob().gap * v.value)),
            (Err(e), _) | (_, Err(e)) => return Check::failed(name, 1e-12, e),
        }
    }
    Check::within(name, worst, 1e-12, "relative")
}

/// RMS of `s2` over one Bob period for windows starting at each `t1`.
pub fn period_rms_of_s2(t1s: &[f64], opts: &QuadOptions) -> Result<Vec<f64>, SignallingError> {
    let period = 2.0 * PI / 3.0;
    t1s.iter()
        .map(|&t1| {
            rms(24, t1, t1 + period, |t| {
                let s = Scenario::reference(Dimension::D2p1, t);
                s2(&s, s.bob().window.t_off, opts).map(|e| e.value)
            })
        })
        .collect()
}

fn monotone_reset(o: &SuiteOptions) -> Check {
    let name = "monotone_channel_reset_2p1";
    let starts: Vec<f64> = (0..6).map(|i| 4.5 + 1.5 * i as f64).collect();
    match period_rms_of_s2(&starts, &o.quad) {
        Ok(r) => {
            let worst = r.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            Check::within(name, worst, 1.0, "max ratio of successive period RMS of s2")
        }
        Err(e) => Check::failed(name, 1.0, e),
    }
}

fn capacity_checks() -> Vec<Check> {
    let mut grid: f64 = 0.0;
    let mut sym: f64 = 0.0;
    let mut positivity = true;
    let n = 49;
    for i in 0..n {
        for j in 0..n {
            let p = 0.01 + 0.98 * i as f64 / (n - 1) as f64;
            let q = 0.01 + 0.98 * j as f64 / (n - 1) as f64;
            let (Ok(c), Ok(cs), Ok((b, _))) = (capacity_closed(p, q), capacity_closed(q, p), capacity_bruteforce(p, q, 1e-12))
            else {
                return vec![Check::failed("capacity_oracle", 1e-9, "domain error on grid")];
            };
            sym = sym.max((c - cs).abs());
            positivity &= (c > 0.0) == (p != q);
            if (p - q).abs() >= 1e-6 {
                grid = grid.max((c - b).abs());
            }
        }
    }
    let bsc = capacity_closed(0.9, 0.1).map_or(f64::NAN, |c| (c - (1.0 - binary_entropy(0.1).unwrap_or(f64::NAN))).abs());
    let z = capacity_closed(0.5, 0.0).map_or(f64::NAN, |c| (c - 1.25f64.log2()).abs());
    let mut expansion: f64 = 0.0;
    for q in [0.2, 0.5, 0.8] {
        let (a, b) = (Complex64::new(f64::sqrt(q), 0.0), Complex64::new(f64::sqrt(1.0 - q), 0.0));
        for delta in [1e-3, 1e-4, 1e-5] {
            let ratio = capacity_closed(q + delta, q).unwrap_or(f64::NAN)
                / capacity_expansion(delta, a, b, 1.0, 1.0).unwrap_or(f64::NAN);
            expansion = expansion.max((ratio - 1.0).abs());
        }
    }
    let success = (guess_success(0.53, 0.51) - 0.51).abs();
    vec![
        Check::within("capacity_oracle", grid, 1e-9, "closed form vs brute-force maximisation, 49x49 grid"),
        Check::within("capacity_symmetry", sym, 1e-12, "|C(p,q) - C(q,p)|"),
        Check::within(
            "capacity_positive_iff_signal",
            if positivity { 0.0 } else { 1.0 },
            0.0,
            "C > 0 exactly when p != q",
        ),
        Check::within("capacity_bsc_z_channel", bsc.max(z), 1e-12, "BSC(0.9,0.1) and Z(0.5,0)"),
        Check::within("capacity_expansion", expansion, 0.01, "|closed / expansion - 1|"),
        Check::within("guess_success", success, 1e-15, "1/2 + (p - q)/2"),
    ]
}

fn field_energy_crossing_rejected(o: &SuiteOptions) -> Check {
    let name = "field_energy_crossing_rejected";
    let s = Scenario::reference(Dimension::D2p1, 3.5);
    match field_energy_sig(&s, 6.5, &o.quad) {
        Err(SignallingError::LightconeCrossing { .. }) => Check::within(name, 0.0, 0.0, "2+1D crossing windows"),
        Ok(v) => Check::within(name, 1.0, 0.0, format!("accepted with value {}", v.value)),
        Err(e) => Check::failed(name, 0.0, e),
    }
}

/// Runs every invariant. Deterministic for fixed options.
pub fn run_suite(o: &SuiteOptions) -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(o.seed);
    let mut out = vec![
        field_kernel_lockin(),
        one_plus_one_equivalence(o, &mut rng),
        interaction_closed_form(o, &mut rng),
        huygens(o, &mut rng),
        causality(o, &mut rng),
        eigenstate_nullity(o, &mut rng),
        orthogonal_flip(o, &mut rng),
        gap_times_s2(o),
    ];
    out.extend(balance(o, &mut rng));
    out.push(monotone_reset(o));
    out.push(field_energy_crossing_rejected(o));
    out.extend(capacity_checks());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let checks = run_suite(&SuiteOptions {
            samples: 6,
            ..SuiteOptions::default()
        });
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        assert!(checks.len() >= 18);
    }

    #[test]
    fn impossible_tolerance_fails_in_a_controlled_way() {
        let o = SuiteOptions {
            samples: 6,
            equivalence_tol: 1e-17,
            ..SuiteOptions::default()
        };
        let mut rng = StdRng::seed_from_u64(o.seed);
        let c = one_plus_one_equivalence(&o, &mut rng);
        assert!(!c.passed);
        assert!(c.measured.is_finite() && c.measured > 1e-17 && c.measured < 1e-8, "{c}");
    }

    #[test]
    fn random_generators_respect_their_class() {
        let mut rng = StdRng::seed_from_u64(3);
        for dim in Dimension::ALL {
            for _ in 0..50 {
                let t = random_timelike(&mut rng, dim);
                assert!(t.check().is_ok());
                assert_eq!(t.causal_class(), crate::scenario::CausalClass::Timelike);
                let s = random_spacelike(&mut rng, dim);
                assert!(s.check().is_ok());
                assert_eq!(s.causal_class(), crate::scenario::CausalClass::Spacelike);
            }
        }
    }
}

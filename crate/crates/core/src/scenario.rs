//! Experiment description: two pointlike two-level detectors at rest in flat
//! spacetime, each sharply switched on for one time window.
//!
//! Natural units (c = ħ = 1) throughout. Times and lengths share one unit,
//! energies are in its inverse. The field starts in the vacuum.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on `|alpha|² + |beta|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Spatial dimension of the flat background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    D1p1,
    D2p1,
    D3p1,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::D1p1, Dimension::D2p1, Dimension::D3p1];

    /// Number of spatial dimensions `n`.
    pub fn spatial(self) -> usize {
        match self {
            Dimension::D1p1 => 1,
            Dimension::D2p1 => 2,
            Dimension::D3p1 => 3,
        }
    }

    pub fn from_spatial(n: usize) -> Option<Self> {
        match n {
            1 => Some(Dimension::D1p1),
            2 => Some(Dimension::D2p1),
            3 => Some(Dimension::D3p1),
            _ => None,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+1", self.spatial())
    }
}

impl std::str::FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1+1" | "1" | "D1p1" => Ok(Dimension::D1p1),
            "2+1" | "2" | "D2p1" => Ok(Dimension::D2p1),
            "3+1" | "3" | "D3p1" => Ok(Dimension::D3p1),
            other => Err(format!("unknown dimension `{other}` (expected 1+1, 2+1 or 3+1)")),
        }
    }
}

/// Pure qubit state `alpha |e> + beta |g>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAmplitudePair {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl ComplexAmplitudePair {
    pub fn new(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    pub fn excited() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn ground() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    /// `(|e> + |g>)/√2`
    pub fn plus() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(Complex64::new(a, 0.0), Complex64::new(a, 0.0))
    }

    /// `(|e> − i|g>)/√2`
    pub fn minus_i() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(Complex64::new(a, 0.0), Complex64::new(0.0, -a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// The orthogonal state `(beta*, −alpha*)`.
    pub fn orthogonal(&self) -> Self {
        Self::new(self.beta.conj(), -self.alpha.conj())
    }

    /// `conj(alpha) · beta`; every leading-order signalling term is linear in it.
    pub fn coherence(&self) -> Complex64 {
        self.alpha.conj() * self.beta
    }

    /// Excited-state population `|alpha|²`.
    pub fn excited_population(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Support of a sharp switching function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingWindow {
    pub t_on: f64,
    pub t_off: f64,
}

impl SwitchingWindow {
    pub fn new(t_on: f64, t_off: f64) -> Self {
        Self { t_on, t_off }
    }

    pub fn duration(&self) -> f64 {
        self.t_off - self.t_on
    }

    pub fn is_valid(&self) -> bool {
        self.t_on.is_finite() && self.t_off.is_finite() && self.t_on < self.t_off
    }

    /// Sharp indicator `η(t)`.
    pub fn contains(&self, t: f64) -> bool {
        self.t_on <= t && t <= self.t_off
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    /// Energy gap Ω.
    pub gap: f64,
    /// Coupling λ. Outputs are reported per λ_Aλ_B so this is bookkeeping only.
    pub coupling: f64,
    pub state: ComplexAmplitudePair,
    pub position: Vec<f64>,
    pub window: SwitchingWindow,
}

impl DetectorSpec {
    pub fn new(gap: f64, state: ComplexAmplitudePair, position: Vec<f64>, window: SwitchingWindow) -> Self {
        Self {
            gap,
            coupling: 1.0,
            state,
            position,
            window,
        }
    }

    /// `conj(alpha) beta e^{iΩt}`.
    pub fn rotating_coherence(&self, t: f64) -> Complex64 {
        self.state.coherence() * Complex64::from_polar(1.0, self.gap * t)
    }
}

/// `Re(conj(alpha) beta e^{iΩt})`, the expectation of the interaction-picture
/// monopole moment up to a factor of two.
pub fn detector_bias(d: &DetectorSpec, t: f64) -> f64 {
    d.rotating_coherence(t).re
}

/// Which detector a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Alice,
    Bob,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Alice => f.write_str("alice"),
            Role::Bob => f.write_str("bob"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("{0}: |alpha|^2 + |beta|^2 = {1} (must be 1 within 1e-12)")]
    NotNormalized(Role, f64),
    #[error("{0}: gap {1} must be positive and finite")]
    NonPositiveGap(Role, f64),
    #[error("{0}: switching window [{1}, {2}] must satisfy t_on < t_off")]
    EmptyWindow(Role, f64, f64),
    #[error("{role}: position has {got} components, dimension {dimension} needs {expected}")]
    PositionLength {
        role: Role,
        dimension: Dimension,
        expected: usize,
        got: usize,
    },
    #[error("{0}: position has non-finite components")]
    NonFinitePosition(Role),
    #[error("alice switches off at {alice_off} after bob switches on at {bob_on}")]
    Ordering { alice_off: f64, bob_on: f64 },
}

/// Causal relation between every pair `(t1 in alice window, t2 in bob window)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalClass {
    /// `|t2 − t1| < L` for every pair.
    Spacelike,
    /// `|t2 − t1| > L` for every pair.
    Timelike,
    /// Some pair sits on the lightcone `|t2 − t1| = L`.
    LightconeCrossing,
}

impl fmt::Display for CausalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CausalClass::Spacelike => f.write_str("SPACELIKE"),
            CausalClass::Timelike => f.write_str("TIMELIKE"),
            CausalClass::LightconeCrossing => f.write_str("LIGHTCONE_CROSSING"),
        }
    }
}

/// Classifies the rectangle `[a_on, a_off] × [b_on, b_off]` against separation `l`.
pub fn classify(alice: (f64, f64), bob: (f64, f64), l: f64) -> CausalClass {
    let lo = bob.0 - alice.1;
    let hi = bob.1 - alice.0;
    let (min_abs, max_abs) = if lo <= 0.0 && hi >= 0.0 {
        (0.0, lo.abs().max(hi.abs()))
    } else {
        (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()))
    };
    if min_abs > l {
        CausalClass::Timelike
    } else if max_abs < l {
        CausalClass::Spacelike
    } else {
        CausalClass::LightconeCrossing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub causal: CausalClass,
    pub separation: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidScenario(pub Vec<Violation>);

/// Full two-detector experiment.
///
/// Only the separation `L = |x_A − x_B|` enters any observable; it is computed
/// once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    dimension: Dimension,
    alice: DetectorSpec,
    bob: DetectorSpec,
    separation: f64,
}

impl Scenario {
    pub fn new(dimension: Dimension, alice: DetectorSpec, bob: DetectorSpec) -> Self {
        let separation = distance(&alice.position, &bob.position);
        Self {
            dimension,
            alice,
            bob,
            separation,
        }
    }

    /// Places both detectors on the first spatial axis at distance `l`.
    pub fn on_axis(
        dimension: Dimension,
        l: f64,
        alice: (f64, ComplexAmplitudePair, SwitchingWindow),
        bob: (f64, ComplexAmplitudePair, SwitchingWindow),
    ) -> Self {
        let n = dimension.spatial();
        let xa = vec![0.0; n];
        let mut xb = vec![0.0; n];
        xb[0] = l;
        Self::new(
            dimension,
            DetectorSpec::new(alice.0, alice.1, xa, alice.2),
            DetectorSpec::new(bob.0, bob.1, xb, bob.2),
        )
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn alice(&self) -> &DetectorSpec {
        &self.alice
    }

    pub fn bob(&self) -> &DetectorSpec {
        &self.bob
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn causal_class(&self) -> CausalClass {
        classify(
            (self.alice.window.t_on, self.alice.window.t_off),
            (self.bob.window.t_on, self.bob.window.t_off),
            self.separation,
        )
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (role, d) in [(Role::Alice, &self.alice), (Role::Bob, &self.bob)] {
            let norm = d.state.norm_sqr();
            if !d.state.is_normalized() {
                violations.push(Violation::NotNormalized(role, norm));
            }
            if !(d.gap.is_finite() && d.gap > 0.0) {
                violations.push(Violation::NonPositiveGap(role, d.gap));
            }
            if !d.window.is_valid() {
                violations.push(Violation::EmptyWindow(role, d.window.t_on, d.window.t_off));
            }
            let expected = self.dimension.spatial();
            if d.position.len() != expected {
                violations.push(Violation::PositionLength {
                    role,
                    dimension: self.dimension,
                    expected,
                    got: d.position.len(),
                });
            }
            if d.position.iter().any(|x| !x.is_finite()) {
                violations.push(Violation::NonFinitePosition(role));
            }
        }
        if self.alice.window.t_off > self.bob.window.t_on {
            violations.push(Violation::Ordering {
                alice_off: self.alice.window.t_off,
                bob_on: self.bob.window.t_on,
            });
        }
        ValidationReport {
            violations,
            causal: self.causal_class(),
            separation: self.separation,
        }
    }

    pub fn check(&self) -> Result<(), InvalidScenario> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(InvalidScenario(report.violations))
        }
    }

    /// Shifts Bob's window to start at `t_on`, keeping its length.
    pub fn with_bob_t_on(&self, t_on: f64) -> Self {
        let mut bob = self.bob.clone();
        let len = bob.window.duration();
        bob.window = SwitchingWindow::new(t_on, t_on + len);
        Self::new(self.dimension, self.alice.clone(), bob)
    }

    /// Moves Bob along the current separation direction (or the first axis if
    /// the detectors coincide) so that the distance becomes `l`.
    pub fn with_separation(&self, l: f64) -> Self {
        let mut bob = self.bob.clone();
        let xa = &self.alice.position;
        let n = xa.len().min(bob.position.len());
        let dir: Vec<f64> = if self.separation > 0.0 {
            (0..n)
                .map(|i| (bob.position[i] - xa[i]) / self.separation)
                .collect()
        } else {
            let mut e = vec![0.0; n];
            if n > 0 {
                e[0] = 1.0;
            }
            e
        };
        bob.position = (0..n).map(|i| xa[i] + l * dir[i]).collect();
        let mut s = Self::new(self.dimension, self.alice.clone(), bob);
        // exact, so that sweeps report the requested separation verbatim
        s.separation = l;
        s
    }

    pub fn with_bob_gap(&self, gap: f64) -> Self {
        let mut bob = self.bob.clone();
        bob.gap = gap;
        Self::new(self.dimension, self.alice.clone(), bob)
    }

    pub fn with_alice_state(&self, state: ComplexAmplitudePair) -> Self {
        let mut alice = self.alice.clone();
        alice.state = state;
        Self::new(self.dimension, alice, self.bob.clone())
    }

    pub fn with_bob_state(&self, state: ComplexAmplitudePair) -> Self {
        let mut bob = self.bob.clone();
        bob.state = state;
        Self::new(self.dimension, self.alice.clone(), bob)
    }

    pub fn with_dimension(&self, dimension: Dimension) -> Self {
        let l = self.separation;
        let n = dimension.spatial();
        let mut alice = self.alice.clone();
        let mut bob = self.bob.clone();
        alice.position = vec![0.0; n];
        bob.position = vec![0.0; n];
        bob.position[0] = l;
        let mut s = Self::new(dimension, alice, bob);
        s.separation = l;
        s
    }

    /// The 2+1D reference configuration: Ω_A = Ω_B = 3, L = 1, Alice
    /// `(|e> − i|g>)/√2` on `[0, 3]`, Bob `(|e> + |g>)/√2` on `[t1, t1 + 3]`.
    pub fn reference(dimension: Dimension, bob_t_on: f64) -> Self {
        Self::on_axis(
            dimension,
            1.0,
            (3.0, ComplexAmplitudePair::minus_i(), SwitchingWindow::new(0.0, 3.0)),
            (
                3.0,
                ComplexAmplitudePair::plus(),
                SwitchingWindow::new(bob_t_on, bob_t_on + 3.0),
            ),
        )
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

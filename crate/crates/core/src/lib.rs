//! Leading-order signalling between two pointlike two-level detectors coupled
//! to a massless scalar field in the vacuum of 1+1, 2+1 and 3+1 dimensional
//! Minkowski spacetime.
//!
//! Alice couples during `[t_on, t_off]`, Bob strictly later. At order
//! `λ_A λ_B` Bob's excitation probability, his interaction energy and the
//! field energy all pick up terms that depend on Alice's state, and these are
//! driven by the field commutator alone. In 3+1D that commutator lives on the
//! lightcone, so timelike-separated detectors cannot signal at this order;
//! in 1+1D and 2+1D it does not, and they can.
//!
//! * [`scenario`]: detector and experiment description, causal classification.
//! * [`greens`]: commutator and field-energy kernels, plus a damped momentum
//!   integral that cross-checks the latter.
//! * [`quadrature`]: adaptive Gauss–Kronrod in one and two dimensions.
//! * [`signalling`]: the `O(λ_A λ_B)` observables and the switching energy budget.
//! * [`channel`]: outcome probabilities, guessing advantage, channel capacity.
//! * [`config`]: flat `key = value` scenario files.
//! * [`validation`]: the built-in invariant suite.

pub mod channel;
pub mod config;
pub mod greens;
pub mod quadrature;
pub mod scenario;
pub mod signalling;
pub mod validation;

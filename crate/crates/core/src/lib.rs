//! Prediction operators for finite-dimensional classical and quantum probability.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`]: dense complex operators, kets, density operators, variance
//!   and the uncertainty inequality.
//! * [`classical`]: finite sample spaces, conditioning on events and
//!   conditional expectation given a discrete random variable.
//! * [`algebra`]: commutative measurement algebras generated by orthogonal
//!   projectors.
//! * [`conditional`]: the quantum conditional expectation, Lüders reduction
//!   and residual diagnostics for the best-predictor property.
//! * [`scenarios`]: two-source interference, atom/photon decay and the
//!   spin-pair scenario reduced to small matrices.
//! * [`sampler`]: seeded Monte Carlo simulation of projective measurements.
//! * [`random`]: random states, observables and pmfs for property sweeps.

pub mod algebra;
pub mod classical;
pub mod conditional;
mod error;
pub mod operator;
pub mod random;
pub mod sampler;
pub mod scenarios;

pub use algebra::{AlgebraElement, ProjectorFamily};
pub use classical::{Event, FiniteSampleSpace, RandomVariable};
pub use conditional::{ConditionalExpectation, OptimalityReport};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::{DensityOperator, Ket, Operator};
pub use sampler::{MeasurementPlan, SampleReport};
pub use scenarios::{CompositeScenario, ScenarioConfig, TwoSourceConfig};

/// Tolerance for validation predicates (self-adjointness, positivity, weights).
pub const VALIDATION_TOL: f64 = 1e-10;

/// Tolerance for exact algebraic identities on small matrices.
pub const IDENTITY_TOL: f64 = 1e-12;

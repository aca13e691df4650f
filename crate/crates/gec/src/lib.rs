//! Expectation-consistent inference for two-penalty posteriors.
//!
//! This crate implements a message-passing solver for densities of the form
//!
//! ```text
//! p(x) ∝ exp(-f1(x) - f2(x)),    x ∈ R^N,
//! ```
//!
//! where each penalty `f_i` admits a tractable proximal operator (MAP mode)
//! or a tractable Gaussian-tilted posterior mean (MMSE mode). The solver
//! alternates between the two penalties, exchanging Gaussian messages with
//! diagonal precisions, and supports three precision-shape policies
//! ([`Diagonalizer`]): per-coordinate, uniform, and per-block.
//!
//! Beyond the solver itself, the crate ships:
//!
//! * [`model`] — penalty definitions (separable scalar priors, quadratic
//!   forms, linear constraints) and their MAP/MMSE primitives;
//! * [`engine`] — the iteration loop, its first-order (frozen-precision)
//!   variant, and a two-stage schedule whose second stage keeps the
//!   estimate pinned at the minimizer while the precisions adapt;
//! * [`spectral`] — Stieltjes/R-transform machinery used to predict the
//!   solver's fixed-point curvature from eigenvalue spectra alone;
//! * [`oracles`] — slow, independent reference computations (dense solves,
//!   adaptive quadrature, a textbook ADMM loop) used to validate the fast
//!   paths;
//! * [`problems`] — seeded generators for linear-regression and
//!   generalized-linear-model test instances;
//! * [`checks`] — self-contained verification suites that exercise the
//!   solver against its supporting theory at desk scale.
//!
//! Numerical conventions are centralized in [`tol`]; all randomness flows
//! through explicitly seeded ChaCha8 generators so every result in the
//! check suites is bit-reproducible.

pub mod checks;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracles;
pub mod problems;
pub mod special;
pub mod spectral;
pub mod tol;

pub use engine::{GecConfig, GecMode, RunTrace, Termination};
pub use error::GecError;
pub use model::{BeliefSummary, Diagonalizer, GecSide, PenaltyModel, PrecisionVec, ScalarPenalty};

/// Re-exported so downstream crates can name the vector/matrix types
/// that appear throughout this crate's API without pinning their own
/// copy of the linear-algebra dependency.
pub use nalgebra;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, GecError>;

//! Error taxonomy for the crate.
//!
//! Errors are split by *who is at fault*: bad caller input (`Config`,
//! `Domain`), a numerical routine that failed to meet its own contract
//! (`SolverFailure`, `QuadratureAccuracy`, `IllConditioned`), an iteration
//! that left its basin (`Divergence`), and verification-layer failures
//! where two computations that must agree did not (`Equivalence`,
//! `Invariant`). The verification variants exist so check suites can
//! bubble a precise description of the first violated identity instead of
//! a generic assertion panic.

use thiserror::Error;

/// Unified error type for solver, spectral, oracle, and check layers.
#[derive(Debug, Error)]
pub enum GecError {
    /// A configuration value is structurally invalid (wrong length,
    /// non-positive precision, unknown penalty combination, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument lies outside a routine's mathematical domain, e.g. a
    /// Stieltjes transform evaluated at or above the spectrum's minimum.
    #[error("domain error: {0}")]
    Domain(String),

    /// An inner iterative solve (proximal Newton, bracketed root find)
    /// exhausted its iteration budget without meeting its tolerance.
    #[error("solver failure in {context}: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// Adaptive quadrature hit its maximum node count while moments were
    /// still moving by more than the requested tolerance.
    #[error("quadrature did not stabilize: relative change {rel_change:.3e} at {nodes} nodes")]
    QuadratureAccuracy { rel_change: f64, nodes: usize },

    /// A linear solve or eigendecomposition was too ill-conditioned to
    /// trust at the accuracy the caller demands.
    #[error("ill-conditioned linear algebra in {0}")]
    IllConditioned(&'static str),

    /// An iterate exceeded the divergence guard. Carries the per-sweep
    /// max-norm history so the blow-up profile is inspectable.
    #[error("iteration diverged after {} sweeps (last magnitude {:.3e})",
            magnitude_trace.len(),
            magnitude_trace.last().copied().unwrap_or(f64::NAN))]
    Divergence { magnitude_trace: Vec<f64> },

    /// Two routines that are provably equivalent disagreed beyond
    /// tolerance (e.g. the frozen-precision solver vs. the reference
    /// splitting loop it must reproduce).
    #[error("equivalence violation: {context} deviated by {deviation:.3e} (tolerance {tolerance:.3e})")]
    Equivalence {
        context: String,
        deviation: f64,
        tolerance: f64,
    },

    /// A structural invariant failed mid-run (a precision went
    /// non-finite, a trace length disagreed with the iteration count).
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl GecError {
    /// Shorthand used by validation code paths.
    pub fn config(msg: impl Into<String>) -> Self {
        GecError::Config(msg.into())
    }

    /// Shorthand for domain violations.
    pub fn domain(msg: impl Into<String>) -> Self {
        GecError::Domain(msg.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_render_key_fields() {
        let e = GecError::SolverFailure {
            context: "prox_newton",
            residual: 2.5e-7,
            iterations: 80,
        };
        let s = e.to_string();
        assert!(s.contains("prox_newton"));
        assert!(s.contains("80"));

        let e = GecError::Divergence {
            magnitude_trace: vec![1.0, 10.0, 1e7],
        };
        assert!(e.to_string().contains("3 sweeps"));
    }
}

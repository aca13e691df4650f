//! Penalty models and the Gaussian-message vocabulary of the solver.
//!
//! A problem is specified as a pair of penalties `f1`, `f2` on `R^N`; the
//! solver only ever touches them through two primitives, both parametrized
//! by a diagonal Gaussian message in *natural* form `(β, γ)` (meaning a
//! tilt `exp(βᵀx − ½ xᵀ diag(γ) x)`, i.e. a Gaussian with mean `β/γ` and
//! precision `γ`):
//!
//! * MAP: the proximal point `argmin f(x) + ½‖x‖²_γ − βᵀx` together with
//!   the diagonal of `(∇²f + Γ)⁻¹` at that point;
//! * MMSE: the mean and diagonal variance of `p(x) ∝ exp(−f(x))·tilt`.
//!
//! The natural parametrization is used throughout because it is the form
//! in which the solver's update is exact even when a message precision
//! has to be clipped: `β` carries the product `γ·r` without ever forming
//! the (possibly enormous) pseudo-mean `r`.

mod penalty;
mod scalar;

pub use penalty::{ConstraintPenalty, PenaltyModel, QuadraticPenalty};
pub use scalar::ScalarPenalty;

use nalgebra::DVector;

use crate::error::GecError;
use crate::Result;

/// Which of the two penalties a message or belief belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GecSide {
    One,
    Two,
}

impl GecSide {
    /// The opposite side (messages produced by one side address the other).
    pub fn other(self) -> GecSide {
        match self {
            GecSide::One => GecSide::Two,
            GecSide::Two => GecSide::One,
        }
    }
}

/// A validated vector of strictly positive, finite precisions.
///
/// Used at API boundaries (initial message precisions, diagonalized
/// curvatures); the solver core works on raw vectors and maintains
/// positivity itself via its floor.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionVec(DVector<f64>);

impl PrecisionVec {
    /// Validates every entry to be finite and strictly positive.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(GecError::config(format!(
                    "precision entry {i} is {v}; precisions must be finite and > 0"
                )));
            }
        }
        Ok(PrecisionVec(values))
    }

    /// A constant precision vector.
    pub fn uniform(dim: usize, value: f64) -> Result<Self> {
        Self::new(DVector::from_element(dim, value))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

/// Mean and per-coordinate variance of a belief: the two moments the
/// message exchange consumes. In MAP mode `var_diag` holds the diagonal
/// of `(∇²f + Γ)⁻¹`, the curvature proxy playing the role of a variance.
#[derive(Debug, Clone)]
pub struct BeliefSummary {
    pub mean: DVector<f64>,
    pub var_diag: DVector<f64>,
}

/// Policy for collapsing a per-coordinate variance diagonal to the shape
/// the precision messages are allowed to take.
///
/// All three policies need only the diagonal of the underlying matrix: a
/// block trace is the sum of the block's diagonal entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagonalizer {
    /// Keep the full per-coordinate diagonal.
    Vector,
    /// Replace it by its scalar mean (normalized trace), replicated.
    Uniform,
    /// Replace each block by its own mean; entries are block lengths and
    /// must sum to the problem dimension.
    Block(Vec<usize>),
}

impl Diagonalizer {
    /// Checks compatibility with a problem of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Diagonalizer::Vector | Diagonalizer::Uniform => Ok(()),
            Diagonalizer::Block(lens) => {
                if lens.is_empty() || lens.iter().any(|&l| l == 0) {
                    return Err(GecError::config("block lengths must be non-empty and positive"));
                }
                let total: usize = lens.iter().sum();
                if total != dim {
                    return Err(GecError::config(format!(
                        "block lengths sum to {total}, expected {dim}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Applies the policy to a variance diagonal. Must be called with a
    /// diagonal whose length matches the dimension `validate` was given.
    pub fn apply(&self, diag: &DVector<f64>) -> DVector<f64> {
        match self {
            Diagonalizer::Vector => diag.clone(),
            Diagonalizer::Uniform => DVector::from_element(diag.len(), diag.mean()),
            Diagonalizer::Block(lens) => {
                let mut out = DVector::zeros(diag.len());
                let mut offset = 0;
                for &len in lens {
                    let mean = diag.rows(offset, len).mean();
                    out.rows_mut(offset, len).fill(mean);
                    offset += len;
                }
                out
            }
        }
    }
}

//! Spectral transforms and asymptotic (free-probability) predictions.
//!
//! A [`SpectralModel`] wraps the empirical spectrum of a symmetric
//! matrix and exposes the transforms the theory speaks in:
//!
//! * the Stieltjes transform `S(ω) = (1/N) Σₙ 1/(λₙ − ω)`, strictly
//!   increasing from `0` to `∞` on `(-∞, λ_min)`;
//! * its functional inverse on that branch;
//! * the R-transform `R(ω) = S⁻¹(−ω) − 1/ω`, with the Taylor series
//!   `m₁ + (m₂ − m₁²)ω` taking over near `ω = 0` where the two terms of
//!   the definition cancel catastrophically.
//!
//! On top of those sit the asymptotic predictions that the check suites
//! compare against finite-`N` runs:
//!
//! * [`free_uniform_curvature`] — the uniform belief precision `η`
//!   predicted when the two penalties' curvature spectra are in free
//!   position, i.e. the root of `η = R₁(−1/η) + R₂(−1/η)`;
//! * [`replica_fixed_point`] — the scalar-channel fixed point for
//!   separable priors observed through a spectrally characterized
//!   quadratic: `γ₁ = R_Y(−1/η)`, `1/η = E[var(x | x + N(0, 1/γ₁))]`.
//!
//! The replica mean-squared error is `1/η` at any solution; multiple
//! solutions are returned (sorted by `η`) when distinct starts disagree,
//! which happens in genuinely multistable phases.

use nalgebra::DMatrix;

use crate::error::GecError;
use crate::model::ScalarPenalty;
use crate::special::{gauss_hermite, SQRT_PI};
use crate::tol::{REPLICA_DAMPING, REPLICA_TOL, R_SERIES_CUTOFF, STIELTJES_INV_TOL};
use crate::Result;

/// Symmetry slack for [`SpectralModel::from_matrix`], relative to the
/// largest entry (same policy as the quadratic penalty constructor).
const MATRIX_SYMMETRY_TOL: f64 = 1e-10;

/// Iteration cap for the damped replica fixed-point loop. Damping 0.5
/// contracts benign instances in tens of iterations; the cap only cuts
/// off oscillating starts in multistable phases.
const REPLICA_MAX_ITERS: usize = 2000;

/// Starts for the replica iteration, as multiples of the prior
/// precision `1/Var(x)`. `η` is bounded below by the prior precision at
/// any solution, so the decade on each side brackets every regime the
/// suites probe (near-prior, matched, and near-perfect recovery).
const REPLICA_STARTS: [f64; 3] = [0.1, 1.0, 10.0];

/// Relative spacing under which two replica solutions are considered the
/// same fixed point (the iteration is only converged to `1e-10` itself).
const REPLICA_DISTINCT_TOL: f64 = 1e-6;

/// Empirical spectrum of a symmetric matrix, with cached moments.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    /// Eigenvalues in ascending order.
    evals: Vec<f64>,
    m1: f64,
    m2: f64,
}

impl SpectralModel {
    /// Builds a model from raw eigenvalues (any finite reals).
    pub fn from_eigenvalues(mut evals: Vec<f64>) -> Result<Self> {
        if evals.is_empty() {
            return Err(GecError::config("a spectrum needs at least one eigenvalue"));
        }
        if evals.iter().any(|v| !v.is_finite()) {
            return Err(GecError::config("eigenvalues must be finite"));
        }
        evals.sort_by(f64::total_cmp);
        let n = evals.len() as f64;
        let m1 = evals.iter().sum::<f64>() / n;
        let m2 = evals.iter().map(|v| v * v).sum::<f64>() / n;
        Ok(SpectralModel { evals, m1, m2 })
    }

    /// Builds a model from a symmetric matrix (symmetrized before the
    /// eigendecomposition; asymmetry beyond a small relative slack is
    /// rejected).
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(GecError::config("spectral model requires a square matrix"));
        }
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > MATRIX_SYMMETRY_TOL * scale {
                    return Err(GecError::config("spectral model requires a symmetric matrix"));
                }
            }
        }
        let sym = (m + m.transpose()) * 0.5;
        let evals = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
        Self::from_eigenvalues(evals)
    }

    pub fn len(&self) -> usize {
        self.evals.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty spectra
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.evals
    }

    pub fn lambda_min(&self) -> f64 {
        self.evals[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.evals.last().expect("non-empty by construction")
    }

    /// First and second spectral moments `(m₁, m₂)`.
    pub fn moments(&self) -> (f64, f64) {
        (self.m1, self.m2)
    }

    /// `S(ω) = (1/N) Σ 1/(λₙ − ω)`, defined for `ω < λ_min`.
    pub fn stieltjes(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() || omega >= self.lambda_min() {
            return Err(GecError::domain(format!(
                "stieltjes transform needs omega < lambda_min = {}, got {omega}",
                self.lambda_min()
            )));
        }
        Ok(self.evals.iter().map(|&l| 1.0 / (l - omega)).sum::<f64>() / self.evals.len() as f64)
    }

    fn stieltjes_prime(&self, omega: f64) -> f64 {
        self.evals
            .iter()
            .map(|&l| {
                let d = l - omega;
                1.0 / (d * d)
            })
            .sum::<f64>()
            / self.evals.len() as f64
    }

    /// Inverts the Stieltjes transform on its increasing branch: returns
    /// the unique `ω < λ_min` with `S(ω) = s`, for any `s > 0`.
    ///
    /// Bracketing is rigorous: `1/(λ_max − ω) ≤ S(ω) ≤ 1/(λ_min − ω)`
    /// puts the root at or above `λ_min − 1/s`, and the upper end walks
    /// geometrically toward `λ_min` until the transform exceeds `s`
    /// (which takes O(log N) halvings, since a single eigenvalue term
    /// already blows up there). A bisection-safeguarded Newton finishes.
    pub fn stieltjes_inverse(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(GecError::domain(format!(
                "stieltjes inverse needs s > 0, got {s}"
            )));
        }
        let lmin = self.lambda_min();
        let mut lo = lmin - 1.0 / s;
        let mut hi = lmin - 0.5 / s;
        let mut grew = 0;
        while self.stieltjes(hi)? < s {
            lo = hi;
            hi = lmin - 0.5 * (lmin - hi);
            grew += 1;
            if grew > 200 {
                return Err(GecError::SolverFailure {
                    context: "stieltjes inverse bracketing",
                    residual: self.stieltjes(hi)? - s,
                    iterations: grew,
                });
            }
        }

        let mut omega = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.stieltjes(omega)? - s;
            if f == 0.0 {
                return Ok(omega);
            }
            if f > 0.0 {
                hi = omega;
            } else {
                lo = omega;
            }
            let step = f / self.stieltjes_prime(omega);
            let mut next = omega - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let moved = (next - omega).abs();
            omega = next;
            // Exit only at representation resolution: downstream the
            // R-transform subtracts 1/ω from this root, so for small `s`
            // the root's magnitude dwarfs the difference and every spare
            // digit of the root is needed. A stalled Newton step bounds
            // the remaining error quadratically; a stalled bisection step
            // bounds it by the (equally tiny) bracket width.
            if moved <= STIELTJES_INV_TOL * (1.0 + omega.abs()) {
                return Ok(omega);
            }
        }
        Err(GecError::SolverFailure {
            context: "stieltjes inverse newton",
            residual: self.stieltjes(omega)? - s,
            iterations: 100,
        })
    }

    /// `R(ω) = S⁻¹(−ω) − 1/ω` for `ω < 0`, switching to the series
    /// `m₁ + (m₂ − m₁²)ω` inside the cancellation window near zero.
    /// Positive arguments beyond the window are outside the branch this
    /// model supports and return a domain error.
    pub fn r_transform(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(GecError::domain("r-transform needs a finite argument"));
        }
        if omega.abs() <= R_SERIES_CUTOFF {
            return Ok(self.m1 + (self.m2 - self.m1 * self.m1) * omega);
        }
        if omega > 0.0 {
            return Err(GecError::domain(format!(
                "r-transform is only evaluated for omega <= 0, got {omega}"
            )));
        }
        Ok(self.stieltjes_inverse(-omega)? - 1.0 / omega)
    }

    /// Harmonic mean of the spectrum, `1/S(0)` — the exact uniform
    /// curvature of a posterior whose precision matrix has this
    /// spectrum. Requires a strictly positive spectrum.
    pub fn harmonic_mean_curvature(&self) -> Result<f64> {
        if self.lambda_min() <= 0.0 {
            return Err(GecError::domain(
                "harmonic mean curvature needs a strictly positive spectrum",
            ));
        }
        Ok(1.0 / self.stieltjes(0.0)?)
    }
}

/// Solves `η = R₁(−1/η) + R₂(−1/η)` for the uniform belief precision
/// predicted when the two curvature spectra are free of each other.
///
/// For nonnegative spectra the root is bracketed by construction:
/// `F(η) = R₁ + R₂ − η → λ_min,1 + λ_min,2 + η > 0` as `η → 0⁺`, and
/// `F(m₁⁽¹⁾ + m₁⁽²⁾) ≤ 0` because each R-transform is increasing with
/// `R(0) = m₁`. Plain bisection then converges unconditionally.
pub fn free_uniform_curvature(s1: &SpectralModel, s2: &SpectralModel) -> Result<f64> {
    let target = |eta: f64| -> Result<f64> {
        let w = -1.0 / eta;
        Ok(s1.r_transform(w)? + s2.r_transform(w)? - eta)
    };
    let scale = s1.moments().0 + s2.moments().0;
    if !(scale > 0.0) {
        return Err(GecError::domain(
            "free curvature needs spectra with positive mean curvature",
        ));
    }
    let mut lo = 1e-12 * scale;
    let mut expanded = 0;
    while target(lo)? <= 0.0 {
        lo *= 0.1;
        expanded += 1;
        if expanded > 40 {
            return Err(GecError::domain(
                "free curvature bracket failed at the lower end (negative spectrum?)",
            ));
        }
    }
    let mut hi = scale;
    let mut grown = 0;
    while target(hi)? > 0.0 {
        hi *= 2.0;
        grown += 1;
        if grown > 60 {
            return Err(GecError::SolverFailure {
                context: "free curvature upper bracket",
                residual: target(hi)?,
                iterations: grown,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if target(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Relative defect of the free subordination identity at a given `η`:
/// `|R₁(−1/η) + R₂(−1/η) − η| / η`. Zero exactly at the
/// [`free_uniform_curvature`] root.
pub fn freeness_residual(s1: &SpectralModel, s2: &SpectralModel, eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(GecError::domain("freeness residual needs eta > 0"));
    }
    let w = -1.0 / eta;
    Ok((s1.r_transform(w)? + s2.r_transform(w)? - eta).abs() / eta)
}

/// First two asymptotic spectral moments of `AᵀA` for an `M×N` matrix
/// with centered independent entries of variance `1/M`: `m₁ = 1`,
/// `m₂ = 1 + N/M`. Used as an independent cross-check on generated
/// design matrices.
pub fn marchenko_pastur_moments(n_cols: usize, m_rows: usize) -> (f64, f64) {
    (1.0, 1.0 + n_cols as f64 / m_rows as f64)
}

/// One solution of the scalar replica fixed point.
#[derive(Debug, Clone, Copy)]
pub struct ReplicaSolution {
    /// Belief precision at the fixed point.
    pub eta: f64,
    /// Scalar-channel precision `R_Y(−1/η)`.
    pub gamma1: f64,
    /// Predicted mean-squared error, `1/η`.
    pub mse: f64,
}

/// Average posterior variance of the scalar channel `r = x + z/√γ₁`,
/// `x ~ exp(−f)`, `z ~ N(0,1)`: `E_{x,z}[ var(x | r) ]`.
///
/// Closed form for a Gaussian prior; spike-and-slab priors integrate the
/// (closed-form) conditional variance over the two mixture branches with
/// a tensorized Gauss–Hermite rule. Other penalties are not proper
/// priors and are rejected.
pub fn channel_average_variance(prior: &ScalarPenalty, gamma1: f64) -> Result<f64> {
    if !(gamma1 >= 0.0) || !gamma1.is_finite() {
        return Err(GecError::domain("channel precision must be nonnegative"));
    }
    // A vanishing channel precision means the observation carries no
    // information, so the posterior is the prior.
    if gamma1 < 1e-14 {
        return prior.marginal_moments().map(|(_, v)| v);
    }
    match *prior {
        ScalarPenalty::Gaussian { variance, .. } => Ok(1.0 / (gamma1 + 1.0 / variance)),
        ScalarPenalty::BernoulliGaussian {
            activity,
            slab_variance,
            ..
        } => {
            // r | (x = 0)      has density N(0, 1/γ₁)
            // r | (x ~ slab)   has density N(0, σ² + 1/γ₁)
            // and var(x | r) is closed-form, so E[var] is a 1-D integral
            // on the spike branch and a 2-D integral on the slab branch.
            let gh = gauss_hermite(63);
            let weights: Vec<f64> = gh.log_weights.iter().map(|lw| lw.exp() / SQRT_PI).collect();
            let scaled: Vec<f64> = gh
                .nodes
                .iter()
                .map(|t| std::f64::consts::SQRT_2 * t)
                .collect();
            let noise_sd = 1.0 / gamma1.sqrt();
            let slab_sd = slab_variance.sqrt();
            let var_at = |r: f64| -> Result<f64> {
                prior.mmse_moments(gamma1 * r, gamma1).map(|(_, v)| v)
            };

            let mut spike_term = 0.0;
            for (k, &z) in scaled.iter().enumerate() {
                spike_term += weights[k] * var_at(z * noise_sd)?;
            }

            let mut slab_term = 0.0;
            for (j, &u) in scaled.iter().enumerate() {
                let x0 = u * slab_sd;
                let mut inner = 0.0;
                for (k, &z) in scaled.iter().enumerate() {
                    inner += weights[k] * var_at(x0 + z * noise_sd)?;
                }
                slab_term += weights[j] * inner;
            }
            Ok((1.0 - activity) * spike_term + activity * slab_term)
        }
        _ => Err(GecError::domain(
            "channel average variance supports gaussian and bernoulli-gaussian priors",
        )),
    }
}

/// Solves the scalar replica fixed point for a separable prior observed
/// through a quadratic with spectrum `y_spectrum`:
///
/// ```text
/// γ₁ = R_Y(−1/η),        1/η = E[ var(x | x + N(0, 1/γ₁)) ].
/// ```
///
/// The damped iteration runs from three starts spanning two decades
/// around the prior precision; converged limits are deduplicated and
/// returned sorted by `η` (ascending, i.e. worst predicted MSE first).
/// Starts that fail to settle within the iteration cap are dropped; the
/// call errs only when every start fails.
pub fn replica_fixed_point(
    y_spectrum: &SpectralModel,
    prior: &ScalarPenalty,
) -> Result<Vec<ReplicaSolution>> {
    let (_, prior_var) = prior.marginal_moments()?;
    if !(prior_var > 0.0) {
        return Err(GecError::domain("replica prior must have positive variance"));
    }
    let base = 1.0 / prior_var;
    let mut solutions: Vec<ReplicaSolution> = Vec::new();
    let mut worst_residual: f64 = 0.0;

    for &start in REPLICA_STARTS.iter() {
        let mut eta = start * base;
        let mut converged = false;
        for _ in 0..REPLICA_MAX_ITERS {
            let gamma1 = y_spectrum.r_transform(-1.0 / eta)?;
            let avg_var = channel_average_variance(prior, gamma1)?;
            let next = eta + REPLICA_DAMPING * (1.0 / avg_var - eta);
            let moved = (next - eta).abs() / eta;
            eta = next;
            if moved <= REPLICA_TOL {
                converged = true;
                break;
            }
            worst_residual = moved;
        }
        if !converged {
            continue;
        }
        let gamma1 = y_spectrum.r_transform(-1.0 / eta)?;
        if !solutions
            .iter()
            .any(|s| (s.eta - eta).abs() <= REPLICA_DISTINCT_TOL * s.eta.max(eta))
        {
            solutions.push(ReplicaSolution {
                eta,
                gamma1,
                mse: 1.0 / eta,
            });
        }
    }

    if solutions.is_empty() {
        return Err(GecError::SolverFailure {
            context: "replica fixed point",
            residual: worst_residual,
            iterations: REPLICA_MAX_ITERS,
        });
    }
    solutions.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    Ok(solutions)
}

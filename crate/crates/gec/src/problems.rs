//! Reproducible problem-instance generators.
//!
//! Everything is seeded through ChaCha8, so an instance is a pure
//! function of `(kind, shape, seed)` — the harness relies on that for
//! byte-stable reports. Three design-matrix ensembles cover the regimes
//! the theory distinguishes:
//!
//! * [`MatrixKind::IidGaussian`] — entries `N(0, 1/M)`, the classical
//!   ensemble whose `AᵀA` spectrum approaches Marchenko–Pastur;
//! * [`MatrixKind::RowOrthogonal`] — `√(N/M)` times an orthonormal row
//!   frame, giving `AAᵀ ∝ I` (an atomic `AᵀA` spectrum);
//! * [`MatrixKind::HaarSpectrum`] — `UΣVᵀ` with Haar-random factors and
//!   a caller-chosen singular spectrum, the general rotation-invariant
//!   case.
//!
//! On top sit two synthesized inference problems: sparse (or dense)
//! linear regression with Gaussian noise, and a probit classification
//! model. Each comes with the penalty pair the solver consumes —
//! regression couples the prior to a quadratic data fit, classification
//! lifts to the extended variable `(x, z = Ax)` with a linear-constraint
//! penalty and per-row probit terms.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::GecError;
use crate::model::{ConstraintPenalty, PenaltyModel, QuadraticPenalty, ScalarPenalty};
use crate::Result;

/// Design-matrix ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixKind {
    /// Independent `N(0, 1/M)` entries (`M` = rows).
    IidGaussian,
    /// `√(N/M) Qᵀ` with `Q` a Haar-random orthonormal `N×M` frame;
    /// requires `M ≤ N`. Rows are exactly orthogonal.
    RowOrthogonal,
    /// `U diag(σ) Vᵀ` with independent Haar orthogonal `U` (M×M) and `V`
    /// (N×N); the vector must hold `min(M, N)` singular values.
    HaarSpectrum(Vec<f64>),
}

fn standard_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix: QR of an iid Gaussian square
/// matrix with the R-diagonal sign fixed (without the sign correction
/// the distribution is *not* Haar).
fn haar_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let qr = standard_matrix(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Draws an `m_rows × n_cols` design matrix from the ensemble.
pub fn generate_matrix(
    kind: &MatrixKind,
    m_rows: usize,
    n_cols: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if m_rows == 0 || n_cols == 0 {
        return Err(GecError::config("matrix dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        MatrixKind::IidGaussian => {
            let scale = 1.0 / (m_rows as f64).sqrt();
            Ok(standard_matrix(&mut rng, m_rows, n_cols) * scale)
        }
        MatrixKind::RowOrthogonal => {
            if m_rows > n_cols {
                return Err(GecError::config(
                    "row-orthogonal designs need at least as many columns as rows",
                ));
            }
            // Thin QR of a tall Gaussian block gives a Haar orthonormal
            // frame; scale so the mean squared singular value is N/M·M/N = 1
            // per column, matching the iid normalization.
            let qr = standard_matrix(&mut rng, n_cols, m_rows).qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..m_rows {
                if r[(j, j)] < 0.0 {
                    for i in 0..n_cols {
                        q[(i, j)] = -q[(i, j)];
                    }
                }
            }
            Ok(q.transpose() * (n_cols as f64 / m_rows as f64).sqrt())
        }
        MatrixKind::HaarSpectrum(svals) => {
            let k = m_rows.min(n_cols);
            if svals.len() != k {
                return Err(GecError::config(format!(
                    "expected {k} singular values, got {}",
                    svals.len()
                )));
            }
            if svals.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return Err(GecError::config("singular values must be finite and nonnegative"));
            }
            let u = haar_orthogonal(&mut rng, m_rows);
            let v = haar_orthogonal(&mut rng, n_cols);
            let mut sigma = DMatrix::zeros(m_rows, n_cols);
            for (i, s) in svals.iter().enumerate() {
                sigma[(i, i)] = *s;
            }
            Ok(&u * sigma * v.transpose())
        }
    }
}

/// Symmetric matrix `O diag(evals) Oᵀ` with Haar-random `O` — a spectrum
/// placed in generic position, the setting where two independent draws
/// are asymptotically free.
pub fn haar_rotated_spectrum(evals: &[f64], seed: u64) -> Result<DMatrix<f64>> {
    if evals.is_empty() {
        return Err(GecError::config("need at least one eigenvalue"));
    }
    if evals.iter().any(|v| !v.is_finite()) {
        return Err(GecError::config("eigenvalues must be finite"));
    }
    let n = evals.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = haar_orthogonal(&mut rng, n);
    let d = DMatrix::from_diagonal(&DVector::from_row_slice(evals));
    Ok(&o * d * o.transpose())
}

/// A synthesized linear-regression instance `y = A x* + w`,
/// `w ~ N(0, I/γ_w)`, `x*` iid from the prior.
#[derive(Debug, Clone)]
pub struct SlrInstance {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_true: DVector<f64>,
    /// Noise precision `γ_w`.
    pub noise_precision: f64,
    pub prior: ScalarPenalty,
}

/// Draws a complete regression instance. The RNG stream is consumed in
/// a fixed order (matrix, then signal, then noise), so instances are
/// stable across runs for a given seed.
pub fn synthesize_slr(
    kind: &MatrixKind,
    m_rows: usize,
    n_cols: usize,
    prior: &ScalarPenalty,
    noise_precision: f64,
    seed: u64,
) -> Result<SlrInstance> {
    if !(noise_precision > 0.0) || !noise_precision.is_finite() {
        return Err(GecError::config("noise precision must be positive and finite"));
    }
    prior.validate()?;
    let a = generate_matrix(kind, m_rows, n_cols, seed)?;
    // A distinct ChaCha stream keeps the signal/noise draws decoupled
    // from however many values the matrix construction consumed, while
    // the whole instance stays a pure function of the seed.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut x_true = DVector::zeros(n_cols);
    for i in 0..n_cols {
        x_true[i] = prior.sample(&mut rng)?;
    }
    let noise_sd = 1.0 / noise_precision.sqrt();
    let mut y = &a * &x_true;
    for i in 0..m_rows {
        let w: f64 = StandardNormal.sample(&mut rng);
        y[i] += noise_sd * w;
    }
    Ok(SlrInstance {
        a,
        y,
        x_true,
        noise_precision,
        prior: prior.clone(),
    })
}

/// Builds the penalty pair for a regression instance: the separable
/// prior against the quadratic data fit
/// `f₂(x) = (γ_w/2)‖y − Ax‖² = ½xᵀ(γ_wAᵀA)x − (γ_wAᵀy)ᵀx + (γ_w/2)‖y‖²`.
pub fn slr_penalties(inst: &SlrInstance) -> Result<(PenaltyModel, PenaltyModel)> {
    let n = inst.a.ncols();
    let f1 = PenaltyModel::separable(vec![inst.prior.clone(); n])?;
    let gw = inst.noise_precision;
    let p = inst.a.transpose() * &inst.a * gw;
    let b = inst.a.transpose() * &inst.y * gw;
    let c = 0.5 * gw * inst.y.norm_squared();
    let f2 = PenaltyModel::Quadratic(QuadraticPenalty::new(p, b, c)?);
    Ok((f1, f2))
}

/// A synthesized probit classification instance: labels
/// `yₘ = sign(aₘᵀx* + σ·wₘ)` with `w ~ N(0, I)`.
#[derive(Debug, Clone)]
pub struct GlmInstance {
    pub a: DMatrix<f64>,
    /// ±1 labels.
    pub labels: DVector<f64>,
    pub x_true: DVector<f64>,
    /// Probit noise scale σ.
    pub probit_scale: f64,
    pub prior: ScalarPenalty,
}

/// Draws a complete probit instance (same stream discipline as
/// [`synthesize_slr`]).
pub fn synthesize_probit_glm(
    kind: &MatrixKind,
    m_rows: usize,
    n_cols: usize,
    prior: &ScalarPenalty,
    probit_scale: f64,
    seed: u64,
) -> Result<GlmInstance> {
    if !(probit_scale > 0.0) || !probit_scale.is_finite() {
        return Err(GecError::config("probit scale must be positive and finite"));
    }
    prior.validate()?;
    let a = generate_matrix(kind, m_rows, n_cols, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut x_true = DVector::zeros(n_cols);
    for i in 0..n_cols {
        x_true[i] = prior.sample(&mut rng)?;
    }
    let z = &a * &x_true;
    let mut labels = DVector::zeros(m_rows);
    for i in 0..m_rows {
        let w: f64 = StandardNormal.sample(&mut rng);
        let activation = z[i] + probit_scale * w;
        labels[i] = if activation >= 0.0 { 1.0 } else { -1.0 };
    }
    Ok(GlmInstance {
        a,
        labels,
        x_true,
        probit_scale,
        prior: prior.clone(),
    })
}

/// Builds the penalty pair for a probit instance on the extended
/// variable `v = (x, z) ∈ R^{N+M}`: separable terms (prior on each `xₙ`,
/// a probit likelihood on each `zₘ`) against the constraint `z = Ax`.
/// Runs on this pair should use a two-block diagonalizer `[N, M]`.
pub fn glm_penalties(inst: &GlmInstance) -> Result<(PenaltyModel, PenaltyModel)> {
    let n = inst.a.ncols();
    let m = inst.a.nrows();
    let mut terms = Vec::with_capacity(n + m);
    for _ in 0..n {
        terms.push(inst.prior.clone());
    }
    for i in 0..m {
        terms.push(ScalarPenalty::ProbitLikelihood {
            label: inst.labels[i],
            scale: inst.probit_scale,
        });
    }
    let f1 = PenaltyModel::separable(terms)?;
    let f2 = PenaltyModel::LinearConstraint(ConstraintPenalty::new(inst.a.clone())?);
    Ok((f1, f2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn iid_designs_track_marchenko_pastur_moments() {
        let a = generate_matrix(&MatrixKind::IidGaussian, 100, 200, 7).unwrap();
        let w = a.transpose() * &a;
        let n = 200.0;
        let m1 = w.trace() / n;
        let m2 = (&w * &w).trace() / n;
        let (e1, e2) = crate::spectral::marchenko_pastur_moments(200, 100);
        // Finite-size fluctuations are O(1/√(MN)) for these traces.
        assert!((m1 - e1).abs() < 0.1, "m1 = {m1}");
        assert!((m2 - e2).abs() < 0.5, "m2 = {m2} vs {e2}");
    }

    #[test]
    fn row_orthogonal_designs_have_orthogonal_rows() {
        let a = generate_matrix(&MatrixKind::RowOrthogonal, 6, 15, 3).unwrap();
        let gram = &a * a.transpose();
        let scale = 15.0 / 6.0;
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { scale } else { 0.0 };
                assert_relative_eq!(gram[(i, j)], expect, epsilon = 1e-10);
            }
        }
        assert!(generate_matrix(&MatrixKind::RowOrthogonal, 15, 6, 3).is_err());
    }

    #[test]
    fn haar_spectrum_designs_carry_the_requested_singular_values() {
        let svals = vec![3.0, 2.0, 0.5];
        let a = generate_matrix(&MatrixKind::HaarSpectrum(svals.clone()), 3, 8, 11).unwrap();
        let mut got: Vec<f64> = a.svd(false, false).singular_values.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let mut want = svals;
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, epsilon = 1e-10);
        }
        assert!(generate_matrix(&MatrixKind::HaarSpectrum(vec![1.0]), 3, 8, 1).is_err());
    }

    #[test]
    fn rotated_spectra_preserve_eigenvalues_and_symmetry() {
        let evals = [0.5, 1.0, 2.5, 4.0];
        let p = haar_rotated_spectrum(&evals, 4).unwrap();
        assert_relative_eq!((&p - p.transpose()).amax(), 0.0, epsilon = 1e-12);
        let mut got: Vec<f64> = p.symmetric_eigen().eigenvalues.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&evals) {
            assert_relative_eq!(g, w, epsilon = 1e-10);
        }
    }

    #[test]
    fn haar_factors_are_actually_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = haar_orthogonal(&mut rng, 12);
        assert_relative_eq!(
            (&q * q.transpose() - DMatrix::<f64>::identity(12, 12)).amax(),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(q.determinant().abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn regression_instances_are_seed_deterministic() {
        let prior = ScalarPenalty::BernoulliGaussian {
            activity: 0.25,
            slab_variance: 1.0,
            map_spike_variance: 1e-6,
        };
        let a = synthesize_slr(&MatrixKind::IidGaussian, 20, 40, &prior, 4.0, 99).unwrap();
        let b = synthesize_slr(&MatrixKind::IidGaussian, 20, 40, &prior, 4.0, 99).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.y, b.y);
        assert_eq!(a.x_true, b.x_true);
        let c = synthesize_slr(&MatrixKind::IidGaussian, 20, 40, &prior, 4.0, 100).unwrap();
        assert_ne!(a.y, c.y);
        // Spike-and-slab draws should actually be sparse at this size.
        let zeros = a.x_true.iter().filter(|v| **v == 0.0).count();
        assert!(zeros > 15, "expected a mostly-zero signal, got {zeros}/40 zeros");
    }

    #[test]
    fn regression_penalties_reproduce_the_residual_objective() {
        let prior = ScalarPenalty::Gaussian { mean: 0.0, variance: 1.0 };
        let inst = synthesize_slr(&MatrixKind::IidGaussian, 12, 9, &prior, 2.5, 5).unwrap();
        let (f1, f2) = slr_penalties(&inst).unwrap();
        assert_eq!(f1.dim(), 9);
        assert_eq!(f2.dim(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = DVector::from_fn(9, |_, _| StandardNormal.sample(&mut rng));
        let direct = 0.5 * inst.noise_precision * (&inst.y - &inst.a * &x).norm_squared();
        assert_relative_eq!(f2.value(&x), direct, max_relative = 1e-12);
    }

    #[test]
    fn probit_instances_have_sane_labels_and_dimensions() {
        let prior = ScalarPenalty::Gaussian { mean: 0.0, variance: 1.0 };
        let inst = synthesize_probit_glm(&MatrixKind::IidGaussian, 30, 10, &prior, 0.5, 8).unwrap();
        assert!(inst.labels.iter().all(|l| *l == 1.0 || *l == -1.0));
        assert!(inst.labels.iter().any(|l| *l == 1.0));
        assert!(inst.labels.iter().any(|l| *l == -1.0));
        let (f1, f2) = glm_penalties(&inst).unwrap();
        assert_eq!(f1.dim(), 40);
        assert_eq!(f2.dim(), 40);

        // The constraint penalty accepts consistent extended vectors and
        // rejects inconsistent ones.
        let mut v = DVector::zeros(40);
        let x = DVector::from_element(10, 0.3);
        let z = &inst.a * &x;
        v.rows_mut(0, 10).copy_from(&x);
        v.rows_mut(10, 30).copy_from(&z);
        assert_eq!(f2.value(&v), 0.0);
        v[15] += 1.0;
        assert!(f2.value(&v).is_infinite());
    }
}

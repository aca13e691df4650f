//! Vector-level penalty models: separable stacks of scalar penalties,
//! quadratic forms with cached eigendecompositions, and hard linear
//! constraints (the graph penalty used by generalized linear models).
//!
//! Each model exposes the same two belief primitives in natural message
//! form `(β, γ)` — see the module docs in [`super`] — plus the values and
//! (sub)gradients the verification layers need. Quadratic and constraint
//! models detect uniform (or per-block uniform) precisions and route them
//! through an `O(N²)` eigenbasis path; general diagonal precisions take a
//! dense Cholesky path that is only intended for desk-scale dimensions.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::GecError;
use crate::tol::VAR_FLOOR;
use crate::Result;

use super::{BeliefSummary, ScalarPenalty};

/// Tolerance for symmetry / positive-semidefiniteness validation, scaled
/// by the matrix magnitude.
const MATRIX_VALIDATION_TOL: f64 = 1e-10;

/// Tolerance used when deciding whether a constraint is satisfied.
const CONSTRAINT_SLACK: f64 = 1e-6;

/// A penalty `f: R^N → R ∪ {+∞}` in one of the supported shapes.
#[derive(Debug, Clone)]
pub enum PenaltyModel {
    /// `f(x) = Σ_n f_n(x_n)` with per-coordinate scalar penalties.
    Separable(Vec<ScalarPenalty>),
    /// `f(x) = ½·xᵀPx − bᵀx + c` with `P` symmetric PSD.
    Quadratic(QuadraticPenalty),
    /// Indicator of the graph `{(u, z) : z = A·u}` on stacked coordinates.
    LinearConstraint(ConstraintPenalty),
}

impl PenaltyModel {
    /// Convenience constructor validating a separable stack.
    pub fn separable(penalties: Vec<ScalarPenalty>) -> Result<Self> {
        if penalties.is_empty() {
            return Err(GecError::config("separable penalty needs at least one coordinate"));
        }
        for p in &penalties {
            p.validate()?;
        }
        Ok(PenaltyModel::Separable(penalties))
    }

    pub fn dim(&self) -> usize {
        match self {
            PenaltyModel::Separable(ps) => ps.len(),
            PenaltyModel::Quadratic(q) => q.dim(),
            PenaltyModel::LinearConstraint(c) => c.dim(),
        }
    }

    /// `true` when `f` is differentiable everywhere.
    pub fn is_smooth(&self) -> bool {
        match self {
            PenaltyModel::Separable(ps) => ps.iter().all(|p| p.is_smooth()),
            PenaltyModel::Quadratic(_) => true,
            PenaltyModel::LinearConstraint(_) => false,
        }
    }

    /// Penalty value (may be `+∞` for an unsatisfied constraint).
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            PenaltyModel::Separable(ps) => {
                ps.iter().zip(x.iter()).map(|(p, &xi)| p.value(xi)).sum()
            }
            PenaltyModel::Quadratic(q) => q.value(x),
            PenaltyModel::LinearConstraint(c) => c.value(x),
        }
    }

    /// Componentwise subdifferential `[lo, hi]` of `f` at `x`.
    ///
    /// Errors for constraint penalties, whose normal cone has no interval
    /// representation; stationarity checks for those go through
    /// constraint-specific residuals instead.
    pub fn grad_interval(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        match self {
            PenaltyModel::Separable(ps) => {
                let mut lo = DVector::zeros(x.len());
                let mut hi = DVector::zeros(x.len());
                for (n, p) in ps.iter().enumerate() {
                    let (l, h) = p.grad_interval(x[n]);
                    lo[n] = l;
                    hi[n] = h;
                }
                Ok((lo, hi))
            }
            PenaltyModel::Quadratic(q) => {
                let g = q.grad(x);
                Ok((g.clone(), g))
            }
            PenaltyModel::LinearConstraint(_) => Err(GecError::domain(
                "a linear constraint has no interval subdifferential",
            )),
        }
    }

    /// Global Hessian bounds `(c_lo, c_hi)` when available: the scalar
    /// curvature range for smooth separable stacks, the eigenvalue range
    /// for quadratics.
    pub fn curvature_bounds(&self) -> Option<(f64, f64)> {
        match self {
            PenaltyModel::Separable(ps) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in ps {
                    let (l, h) = p.curvature_bounds()?;
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
                Some((lo, hi))
            }
            PenaltyModel::Quadratic(q) => {
                let evals = q.eigenvalues();
                Some((evals.min(), evals.max()))
            }
            PenaltyModel::LinearConstraint(_) => None,
        }
    }

    /// MAP belief: proximal point `argmin f(x) + ½‖x‖²_γ − βᵀx` and the
    /// diagonal of `(∇²f(x̂) + Γ)⁻¹` (zeros where the curvature is
    /// infinite; callers floor before inverting).
    pub fn map_belief(&self, beta: &DVector<f64>, gamma: &DVector<f64>) -> Result<BeliefSummary> {
        self.check_message_dims(beta, gamma)?;
        match self {
            PenaltyModel::Separable(ps) => {
                let mut mean = DVector::zeros(ps.len());
                let mut var = DVector::zeros(ps.len());
                for (n, p) in ps.iter().enumerate() {
                    let x = p.prox(beta[n], gamma[n])?;
                    mean[n] = x;
                    let c = p.curvature(x);
                    var[n] = if c.is_finite() { 1.0 / (c + gamma[n]) } else { 0.0 };
                }
                Ok(BeliefSummary { mean, var_diag: var })
            }
            PenaltyModel::Quadratic(q) => Ok(BeliefSummary {
                mean: q.solve_tilted(beta, gamma)?,
                var_diag: q.posterior_var_diag(gamma)?,
            }),
            PenaltyModel::LinearConstraint(c) => c.belief(beta, gamma),
        }
    }

    /// MMSE belief: mean and per-coordinate variance of
    /// `p(x) ∝ exp(−f(x) − ½‖x‖²_γ + βᵀx)`.
    ///
    /// For quadratic and constraint penalties the posterior is Gaussian
    /// (or a Gaussian on an affine subspace), so this coincides with the
    /// MAP belief.
    pub fn mmse_belief(&self, beta: &DVector<f64>, gamma: &DVector<f64>) -> Result<BeliefSummary> {
        self.check_message_dims(beta, gamma)?;
        match self {
            PenaltyModel::Separable(ps) => {
                let mut mean = DVector::zeros(ps.len());
                let mut var = DVector::zeros(ps.len());
                for (n, p) in ps.iter().enumerate() {
                    let (m, v) = p.mmse_moments(beta[n], gamma[n])?;
                    mean[n] = m;
                    var[n] = v;
                }
                Ok(BeliefSummary { mean, var_diag: var })
            }
            PenaltyModel::Quadratic(_) | PenaltyModel::LinearConstraint(_) => {
                self.map_belief(beta, gamma)
            }
        }
    }

    /// Proximal point only (used by reference splitting loops that do not
    /// need curvature information).
    pub fn map_estimate(&self, beta: &DVector<f64>, gamma: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.map_belief(beta, gamma)?.mean)
    }

    fn check_message_dims(&self, beta: &DVector<f64>, gamma: &DVector<f64>) -> Result<()> {
        let n = self.dim();
        if beta.len() != n || gamma.len() != n {
            return Err(GecError::config(format!(
                "message dimension mismatch: penalty has {n} coordinates, got beta {} / gamma {}",
                beta.len(),
                gamma.len()
            )));
        }
        Ok(())
    }
}

/// `f(x) = ½·xᵀPx − bᵀx + c` with a cached eigendecomposition of `P`.
///
/// The cache buys an `O(N²)` tilted solve and posterior diagonal for
/// uniform precisions — the dominant operations in spectral-scale runs.
#[derive(Debug, Clone)]
pub struct QuadraticPenalty {
    p: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    evals: DVector<f64>,
    evecs: DMatrix<f64>,
}

impl QuadraticPenalty {
    /// Validates symmetry and positive semidefiniteness, then caches the
    /// eigendecomposition.
    pub fn new(p: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n || b.len() != n || n == 0 {
            return Err(GecError::config("quadratic penalty dimensions are inconsistent"));
        }
        let scale = p.amax().max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (p[(i, j)] - p[(j, i)]).abs() > MATRIX_VALIDATION_TOL * scale {
                    return Err(GecError::config("quadratic penalty matrix is not symmetric"));
                }
            }
        }
        // Symmetrize exactly so the eigendecomposition sees what we checked.
        let sym = 0.5 * (&p + p.transpose());
        let eig = SymmetricEigen::new(sym.clone());
        let min_eval = eig.eigenvalues.min();
        if min_eval < -MATRIX_VALIDATION_TOL * scale {
            return Err(GecError::config(format!(
                "quadratic penalty matrix has negative eigenvalue {min_eval:.3e}"
            )));
        }
        Ok(QuadraticPenalty {
            p: sym,
            b,
            c,
            evals: eig.eigenvalues,
            evecs: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.b
    }

    /// Eigenvalues of `P` (unordered), e.g. for spectral models and
    /// Lipschitz constants.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.evals
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.p * x)[(0, 0)] - self.b.dot(x) + self.c
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x - &self.b
    }

    /// Solves `(P + Γ)x = b + β`.
    fn solve_tilted(&self, beta: &DVector<f64>, gamma: &DVector<f64>) -> Result<DVector<f64>> {
        let rhs = &self.b + beta;
        if let Some(g) = uniform_value(gamma) {
            let mut coeffs = self.evecs.transpose() * rhs;
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c /= self.evals[k] + g;
            }
            Ok(&self.evecs * coeffs)
        } else {
            let mut h = self.p.clone();
            for i in 0..h.nrows() {
                h[(i, i)] += gamma[i];
            }
            let chol = Cholesky::new(h).ok_or(GecError::IllConditioned("quadratic tilted solve"))?;
            Ok(chol.solve(&rhs))
        }
    }

    /// Diagonal of `(P + Γ)⁻¹` — the posterior variance diagonal.
    fn posterior_var_diag(&self, gamma: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        if let Some(g) = uniform_value(gamma) {
            let mut diag = DVector::zeros(n);
            for k in 0..n {
                let w = 1.0 / (self.evals[k] + g);
                let col = self.evecs.column(k);
                for i in 0..n {
                    diag[i] += col[i] * col[i] * w;
                }
            }
            Ok(diag)
        } else {
            let mut h = self.p.clone();
            for i in 0..n {
                h[(i, i)] += gamma[i];
            }
            let inv = Cholesky::new(h)
                .ok_or(GecError::IllConditioned("quadratic posterior diagonal"))?
                .inverse();
            Ok(inv.diagonal())
        }
    }
}

/// Indicator of `{x = (u, z) : z = A·u}` with `A ∈ R^{M×K}`; the stacked
/// dimension is `K + M` with `u` first.
///
/// The proximal map is the `Γ`-weighted projection onto the graph, and
/// the belief variance diagonal is `diag(H⁻¹)` on the input block and
/// `diag(A·H⁻¹·Aᵀ)` on the output block, with `H = Γ_u + AᵀΓ_z A`.
#[derive(Debug, Clone)]
pub struct ConstraintPenalty {
    a: DMatrix<f64>,
    /// Eigendecomposition `AᵀA = W·diag(d)·Wᵀ` (cached for the
    /// block-uniform fast path).
    ata_evals: DVector<f64>,
    ata_evecs: DMatrix<f64>,
    /// `A·W`, cached so output-block variances cost `O(M·K)`.
    a_evecs: DMatrix<f64>,
}

impl ConstraintPenalty {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(GecError::config("constraint matrix must be non-empty"));
        }
        let ata = a.transpose() * &a;
        let eig = SymmetricEigen::new(ata);
        let a_evecs = &a * &eig.eigenvectors;
        Ok(ConstraintPenalty {
            a,
            ata_evals: eig.eigenvalues,
            ata_evecs: eig.eigenvectors,
            a_evecs,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn input_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim(&self) -> usize {
        self.input_dim() + self.output_dim()
    }

    /// 0 on the graph (to slack), `+∞` off it.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let u = x.rows(0, self.input_dim());
        let z = x.rows(self.input_dim(), self.output_dim());
        let residual = (&self.a * u - z).amax();
        let scale = 1.0 + z.amax();
        if residual <= CONSTRAINT_SLACK * scale {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Belief of the projection: mean `(û, A·û)` with
    /// `H·û = β_u + Aᵀβ_z`, and the variance diagonal described above.
    pub fn belief(&self, beta: &DVector<f64>, gamma: &DVector<f64>) -> Result<BeliefSummary> {
        let (k, m) = (self.input_dim(), self.output_dim());
        let beta_u = beta.rows(0, k).clone_owned();
        let beta_z = beta.rows(k, m).clone_owned();
        let gamma_u = gamma.rows(0, k).clone_owned();
        let gamma_z = gamma.rows(k, m).clone_owned();
        let rhs = &beta_u + self.a.transpose() * &beta_z;

        let (u_hat, var_u, var_z) = match (uniform_value(&gamma_u), uniform_value(&gamma_z)) {
            (Some(gu), Some(gz)) => {
                // Eigenbasis path: H = W·diag(gu + gz·d)·Wᵀ.
                let mut coeffs = self.ata_evecs.transpose() * &rhs;
                let mut var_u = DVector::zeros(k);
                let mut var_z = DVector::zeros(m);
                for idx in 0..k {
                    let w = 1.0 / (gu + gz * self.ata_evals[idx]);
                    coeffs[idx] *= w;
                    let col_w = self.ata_evecs.column(idx);
                    for i in 0..k {
                        var_u[i] += col_w[i] * col_w[i] * w;
                    }
                    let col_aw = self.a_evecs.column(idx);
                    for j in 0..m {
                        var_z[j] += col_aw[j] * col_aw[j] * w;
                    }
                }
                (&self.ata_evecs * coeffs, var_u, var_z)
            }
            _ => {
                // General diagonal precisions: dense H.
                let mut h = DMatrix::zeros(k, k);
                for j in 0..m {
                    let row = self.a.row(j);
                    let gz = gamma_z[j];
                    for p in 0..k {
                        for q in 0..k {
                            h[(p, q)] += gz * row[p] * row[q];
                        }
                    }
                }
                for i in 0..k {
                    h[(i, i)] += gamma_u[i];
                }
                let chol =
                    Cholesky::new(h).ok_or(GecError::IllConditioned("constraint projection"))?;
                let u_hat = chol.solve(&rhs);
                let h_inv = chol.inverse();
                let var_u = h_inv.diagonal();
                let b = &self.a * &h_inv;
                let mut var_z = DVector::zeros(m);
                for j in 0..m {
                    var_z[j] = b.row(j).dot(&self.a.row(j));
                }
                (u_hat, var_u, var_z)
            }
        };

        let z_hat = &self.a * &u_hat;
        let mut mean = DVector::zeros(k + m);
        mean.rows_mut(0, k).copy_from(&u_hat);
        mean.rows_mut(k, m).copy_from(&z_hat);
        let mut var = DVector::zeros(k + m);
        var.rows_mut(0, k).copy_from(&var_u);
        var.rows_mut(k, m).copy_from(&var_z);
        // Rounding can nick a variance negative when A has tiny rows.
        var.apply(|v| *v = v.max(VAR_FLOOR));
        Ok(BeliefSummary { mean, var_diag: var })
    }
}

/// Returns `Some(v)` when every entry equals the first one exactly —
/// the invariant maintained by uniform and per-block diagonalizers.
fn uniform_value(v: &DVector<f64>) -> Option<f64> {
    let first = v[0];
    if v.iter().all(|&x| x == first) {
        Some(first)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_psd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        &g * g.transpose() / n as f64
    }

    fn random_vec(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn quadratic_uniform_and_dense_paths_agree() {
        let n = 12;
        let q = QuadraticPenalty::new(random_psd(n, 1), random_vec(n, 2), 0.3).unwrap();
        let beta = random_vec(n, 3);
        let g = 0.9;
        let uniform = DVector::from_element(n, g);
        // A perturbation far below the comparison tolerance, but enough to
        // break exact uniformity and force the dense path.
        let mut vector = uniform.clone();
        vector[n - 1] = g + 1e-12;

        let bu = q.solve_tilted(&beta, &uniform).unwrap();
        let bd = q.solve_tilted(&beta, &vector).unwrap();
        assert_relative_eq!((&bu - &bd).amax(), 0.0, epsilon = 1e-8);

        let vu = q.posterior_var_diag(&uniform).unwrap();
        let vd = q.posterior_var_diag(&vector).unwrap();
        assert_relative_eq!((&vu - &vd).amax(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn quadratic_belief_matches_brute_force() {
        let n = 9;
        let q = QuadraticPenalty::new(random_psd(n, 10), random_vec(n, 11), 0.0).unwrap();
        let beta = random_vec(n, 12);
        let gamma = DVector::from_fn(n, |i, _| 0.5 + 0.1 * i as f64);

        let model = PenaltyModel::Quadratic(q.clone());
        let belief = model.map_belief(&beta, &gamma).unwrap();

        let mut h = q.matrix().clone();
        for i in 0..n {
            h[(i, i)] += gamma[i];
        }
        let h_inv = h.clone().try_inverse().unwrap();
        let mean = &h_inv * (q.linear_term() + &beta);
        assert_relative_eq!((&belief.mean - &mean).amax(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(
            (&belief.var_diag - h_inv.diagonal()).amax(),
            0.0,
            epsilon = 1e-10
        );
        // MMSE coincides for Gaussians.
        let mmse = model.mmse_belief(&beta, &gamma).unwrap();
        assert_eq!(mmse.mean, belief.mean);
    }

    #[test]
    fn quadratic_constructor_rejects_bad_matrices() {
        let mut asym = random_psd(4, 20);
        asym[(0, 1)] += 1.0;
        assert!(QuadraticPenalty::new(asym, DVector::zeros(4), 0.0).is_err());

        let mut indef = random_psd(4, 21);
        indef[(0, 0)] = -5.0;
        assert!(QuadraticPenalty::new(indef, DVector::zeros(4), 0.0).is_err());

        assert!(QuadraticPenalty::new(random_psd(4, 22), DVector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn constraint_belief_projects_and_matches_brute_force() {
        let (m, k) = (4, 6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let a = DMatrix::from_fn(m, k, |_, _| StandardNormal.sample(&mut rng));
        let c = ConstraintPenalty::new(a.clone()).unwrap();
        let model = PenaltyModel::LinearConstraint(c);

        let beta = random_vec(k + m, 34);
        let gamma = DVector::from_fn(k + m, |i, _| 0.4 + 0.05 * i as f64);
        let belief = model.map_belief(&beta, &gamma).unwrap();

        // The output block must satisfy the constraint exactly.
        let u = belief.mean.rows(0, k).clone_owned();
        let z = belief.mean.rows(k, m).clone_owned();
        assert_relative_eq!((&a * &u - &z).amax(), 0.0, epsilon = 1e-10);

        // Brute force: H = Γ_u + AᵀΓ_z A.
        let gamma_u = DMatrix::from_diagonal(&gamma.rows(0, k).clone_owned());
        let gamma_z = DMatrix::from_diagonal(&gamma.rows(k, m).clone_owned());
        let h = &gamma_u + a.transpose() * &gamma_z * &a;
        let h_inv = h.try_inverse().unwrap();
        let u_ref = &h_inv * (beta.rows(0, k) + a.transpose() * beta.rows(k, m));
        assert_relative_eq!((&u - &u_ref).amax(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(
            (belief.var_diag.rows(0, k) - h_inv.diagonal()).amax(),
            0.0,
            epsilon = 1e-9
        );
        let az = &a * &h_inv * a.transpose();
        assert_relative_eq!(
            (belief.var_diag.rows(k, m) - az.diagonal()).amax(),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn constraint_block_uniform_path_matches_dense() {
        let (m, k) = (5, 7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        let a = DMatrix::from_fn(m, k, |_, _| StandardNormal.sample(&mut rng));
        let model = PenaltyModel::LinearConstraint(ConstraintPenalty::new(a).unwrap());
        let beta = random_vec(k + m, 45);

        let mut fast = DVector::zeros(k + m);
        fast.rows_mut(0, k).fill(0.8);
        fast.rows_mut(k, m).fill(2.5);
        let mut dense = fast.clone();
        dense[0] += 1e-13; // break exact uniformity → dense path

        let bf = model.map_belief(&beta, &fast).unwrap();
        let bd = model.map_belief(&beta, &dense).unwrap();
        assert_relative_eq!((&bf.mean - &bd.mean).amax(), 0.0, epsilon = 1e-8);
        assert_relative_eq!((&bf.var_diag - &bd.var_diag).amax(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn separable_interfaces_compose() {
        let model = PenaltyModel::separable(vec![
            ScalarPenalty::Gaussian { mean: 0.0, variance: 1.0 },
            ScalarPenalty::Laplace { rate: 2.0 },
        ])
        .unwrap();
        assert_eq!(model.dim(), 2);
        assert!(!model.is_smooth());
        assert!(model.curvature_bounds().is_none()); // Laplace has none

        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(model.value(&x), 0.5);
        let (lo, hi) = model.grad_interval(&x).unwrap();
        assert_relative_eq!(lo[0], 1.0);
        assert_relative_eq!(hi[0], 1.0);
        assert_relative_eq!(lo[1], -2.0);
        assert_relative_eq!(hi[1], 2.0);

        // MAP belief: Laplace coordinate dead at the kink → zero variance
        // proxy (the solver floors it).
        let beta = DVector::from_vec(vec![0.5, 0.4]);
        let gamma = DVector::from_element(2, 1.0);
        let belief = model.map_belief(&beta, &gamma).unwrap();
        assert_eq!(belief.mean[1], 0.0);
        assert_eq!(belief.var_diag[1], 0.0);
        assert_relative_eq!(belief.var_diag[0], 0.5);

        let smooth = PenaltyModel::separable(vec![
            ScalarPenalty::LogCoshQuad { scale: 1.0, slope: 2.0, quad: 0.5 },
            ScalarPenalty::LogCoshQuad { scale: 0.5, slope: 1.0, quad: 0.7 },
        ])
        .unwrap();
        let (lo, hi) = smooth.curvature_bounds().unwrap();
        assert_relative_eq!(lo, 0.5);
        assert_relative_eq!(hi, 4.5);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let model = PenaltyModel::separable(vec![ScalarPenalty::Laplace { rate: 1.0 }; 3]).unwrap();
        let beta = DVector::zeros(2);
        let gamma = DVector::from_element(3, 1.0);
        assert!(model.map_belief(&beta, &gamma).is_err());
        assert!(PenaltyModel::separable(vec![]).is_err());
    }
}

//! Executable checks of the solver's core mathematical guarantees.
//!
//! Every property the library rests on is verified here numerically, at
//! desk scale, against oracles that share no code with the solver loop:
//!
//! 1. exactness of MMSE runs on jointly Gaussian problems;
//! 2. stationarity of converged MAP runs and agreement with an
//!    independent proximal-gradient solver;
//! 3. the curvature identities behind the precision updates — exact for
//!    diagonal Hessians, free-convolution-accurate for rotated spectra;
//! 4. contraction of the frozen-precision recursion to a unique,
//!    precision-independent optimum;
//! 5. two-stage runs: the estimate stays pinned while the precisions
//!    adapt, the precision limit is initialization-independent, and the
//!    quadratic cavity map has the structure the argument needs;
//! 6. the spectral fixed-point identity `γ₁ = R_Y(−1/η)` on the actual
//!    eigenvalues, and agreement of `η⁻¹` with the scalar-channel
//!    prediction across random instances;
//! 7. step-for-step equivalence of frozen-precision MAP runs with a
//!    symmetric operator-splitting loop, including non-smooth l1;
//! 8. moment consistency of the fixed-point beliefs against direct
//!    quadrature.
//!
//! The suites are deterministic: every random quantity comes from a
//! fixed-seed ChaCha stream, and parallel sections collect results in
//! index order before reducing serially, so reports are identical across
//! runs and worker counts. Concurrency is sized by the `GEC_WORKERS`
//! environment variable (default: one thread per core).
//!
//! [`suites`] lists the eight suites in acceptance order, [`run_suite`]
//! runs one by name, and [`run_all`] runs every suite. Each returns a
//! [`SuiteReport`] whose [`CheckResult`]s carry the observed worst-case
//! quantity, the tolerance it must stay within, and a detail line saying
//! where the worst case occurred.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::engine::{
    fixed_point_residuals, run_gec, FixedPointReport, GecConfig, GecMode, RunTrace, Schedule,
    Termination,
};
use crate::error::GecError;
use crate::model::{Diagonalizer, PenaltyModel, PrecisionVec, QuadraticPenalty, ScalarPenalty};
use crate::oracles::{
    exact_gaussian_posterior, gec_admm_equivalence, generic_map_solve, grid_mmse,
};
use crate::problems::{haar_rotated_spectrum, slr_penalties, synthesize_slr, MatrixKind};
use crate::spectral::{free_uniform_curvature, freeness_residual, replica_fixed_point, SpectralModel};
use crate::Result;

/// One verified property: the worst observed value of a residual or
/// ratio, the tolerance it must stay within, and where the worst case
/// occurred.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: &'static str,
    /// 1-based position in the acceptance ordering.
    pub criterion: usize,
    pub summary: &'static str,
    pub checks: Vec<CheckResult>,
    pub wall_ms: u128,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The check closest to (or furthest past) its tolerance.
    pub fn worst(&self) -> Option<&CheckResult> {
        fn margin(c: &CheckResult) -> f64 {
            if c.tolerance > 0.0 {
                c.observed / c.tolerance
            } else if c.observed == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        self.checks.iter().max_by(|a, b| margin(a).total_cmp(&margin(b)))
    }
}

/// A named suite bound to its acceptance criterion.
pub struct SuiteSpec {
    pub name: &'static str,
    pub criterion: usize,
    pub summary: &'static str,
    run: fn() -> Result<SuiteReport>,
}

impl SuiteSpec {
    pub fn run(&self) -> Result<SuiteReport> {
        (self.run)()
    }
}

static SUITES: [SuiteSpec; 8] = [
    SuiteSpec {
        name: "gaussian-exact",
        criterion: 1,
        summary: "MMSE runs on jointly Gaussian problems reproduce the exact posterior",
        run: check_gaussian_exactness,
    },
    SuiteSpec {
        name: "map-stationarity",
        criterion: 2,
        summary: "converged MAP runs are stationary and match an independent solver",
        run: check_map_stationarity,
    },
    SuiteSpec {
        name: "curvature",
        criterion: 3,
        summary: "fixed-point precisions match exact diagonal curvature and the free-convolution prediction",
        run: check_curvature,
    },
    SuiteSpec {
        name: "first-order",
        criterion: 4,
        summary: "frozen-precision runs contract to a unique, precision-independent optimum",
        run: check_first_order,
    },
    SuiteSpec {
        name: "second-order",
        criterion: 5,
        summary: "two-stage runs pin the estimate, agree on the precision limit, and the cavity map is well-behaved",
        run: check_second_order,
    },
    SuiteSpec {
        name: "replica",
        criterion: 6,
        summary: "MMSE fixed points satisfy the spectral identity and track the scalar-channel prediction",
        run: check_replica,
    },
    SuiteSpec {
        name: "splitting",
        criterion: 7,
        summary: "frozen-precision MAP runs coincide with symmetric operator splitting",
        run: check_splitting,
    },
    SuiteSpec {
        name: "moment-match",
        criterion: 8,
        summary: "fixed-point beliefs match direct quadrature moments",
        run: check_moment_match,
    },
];

/// All suites, ordered by acceptance criterion.
pub fn suites() -> &'static [SuiteSpec] {
    &SUITES
}

/// Runs one suite by name; `None` if the name is unknown.
pub fn run_suite(name: &str) -> Option<Result<SuiteReport>> {
    suites().iter().find(|s| s.name == name).map(|s| s.run())
}

/// Runs every suite in acceptance order.
pub fn run_all() -> Result<Vec<SuiteReport>> {
    suites().iter().map(|s| s.run()).collect()
}

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

fn check(name: &'static str, observed: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name,
        observed,
        tolerance,
        passed: observed.is_finite() && observed <= tolerance,
        detail,
    }
}

fn timed(
    spec: (&'static str, usize, &'static str),
    body: impl FnOnce() -> Result<Vec<CheckResult>>,
) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = body()?;
    Ok(SuiteReport {
        suite: spec.0,
        criterion: spec.1,
        summary: spec.2,
        checks,
        wall_ms: start.elapsed().as_millis(),
    })
}

/// Thread pool for seed- and case-parallel sweeps, sized by the
/// `GEC_WORKERS` environment variable (unset: one thread per core;
/// anything else must parse as a positive integer). Parallelism never
/// affects results: work items are indexed, collected in order, and
/// reduced serially.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    match std::env::var("GEC_WORKERS") {
        Ok(raw) => {
            let workers: usize = raw.trim().parse().unwrap_or(0);
            if workers == 0 {
                return Err(GecError::config(format!(
                    "GEC_WORKERS must be a positive integer, got {raw:?}"
                )));
            }
            builder = builder.num_threads(workers);
        }
        Err(std::env::VarError::NotPresent) => {}
        Err(e) => return Err(GecError::config(format!("GEC_WORKERS: {e}"))),
    }
    builder
        .build()
        .map_err(|e| GecError::config(format!("failed to build worker pool: {e}")))
}

/// Running worst-case tracker that remembers where the worst happened.
struct Worst(Option<(f64, String)>);

impl Worst {
    fn new() -> Self {
        Worst(None)
    }

    fn update(&mut self, value: f64, detail: impl FnOnce() -> String) {
        let v = if value.is_finite() { value } else { f64::INFINITY };
        if self.0.as_ref().map_or(true, |(w, _)| v > *w) {
            self.0 = Some((v, detail()));
        }
    }

    fn take(self, if_empty: &str) -> (f64, String) {
        self.0
            .unwrap_or_else(|| (f64::INFINITY, if_empty.to_string()))
    }
}

fn converged(trace: &RunTrace) -> bool {
    trace.termination == Termination::Converged
}

fn max_residual(report: &FixedPointReport) -> f64 {
    report
        .mean_gap
        .max(report.eta_gap)
        .max(report.precision_sum_gap)
        .max(report.combination_gap)
}

fn normal_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v * scale
    })
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn pairwise_inf(points: &[DVector<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            worst = worst.max((&points[i] - &points[j]).amax());
        }
    }
    worst
}

/// An evenly spaced eigenvalue grid on `[lo, hi]` (cell midpoints, so the
/// extremes stay strictly inside the interval).
fn grid_spectrum(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
        .collect()
}

fn quadratic_of(f: &PenaltyModel) -> Result<&QuadraticPenalty> {
    match f {
        PenaltyModel::Quadratic(q) => Ok(q),
        _ => Err(GecError::Invariant(
            "expected a quadratic penalty model".to_string(),
        )),
    }
}

/// A separable stack of identical scalar penalties.
fn stack(penalty: &ScalarPenalty, n: usize) -> Result<PenaltyModel> {
    PenaltyModel::separable(vec![penalty.clone(); n])
}

// ---------------------------------------------------------------------
// Criterion 1 — Gaussian exactness
// ---------------------------------------------------------------------

/// On a jointly Gaussian problem (isotropic Gaussian prior, quadratic
/// data term) the MMSE fixed point is exact in two ways. The posterior
/// mean is recovered under any diagonalizer: summing the two belief
/// equations `(T + Γ₁)x̂ = Tμ + β₁` and `(P + Γ₂)x̂ = b + β₂` and using
/// `β₁ + β₂ = (γ₁ + γ₂)∘x̂` cancels every message term, leaving the
/// exact normal equations `(T + P)x̂ = Tμ + b`. Under the uniform
/// diagonalizer the variance is exact too: side 1 forces `η = τ⁻¹… + γ₁`
/// elementwise, hence `γ₂ = η − γ₁ = 1/variance`, so side 2 reports
/// `1/η = tr[(P + T)⁻¹]/N` — the true average posterior variance.
fn check_gaussian_exactness() -> Result<SuiteReport> {
    let spec = ("gaussian-exact", 1, SUITES[0].summary);
    timed(spec, || {
        let start = Instant::now();

        struct Out {
            seed: u64,
            n: usize,
            m: usize,
            kind: &'static str,
            converged: bool,
            mean_gap: f64,
            var_gap: f64,
        }

        let pool = worker_pool()?;
        let outs: Vec<Out> = pool.install(|| {
            (0..50u64)
                .into_par_iter()
                .map(|i| -> Result<Out> {
                    let seed = 1000 + i;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let n = rng.gen_range(4..=64usize);
                    let m = rng.gen_range((n / 2).max(2)..=2 * n);
                    let (kind, kind_name) = match i % 3 {
                        1 if m <= n => (MatrixKind::RowOrthogonal, "row-orthogonal"),
                        2 => {
                            let k = m.min(n);
                            let svals: Vec<f64> =
                                (0..k).map(|_| rng.gen_range(0.5..1.5)).collect();
                            (MatrixKind::HaarSpectrum(svals), "haar-spectrum")
                        }
                        _ => (MatrixKind::IidGaussian, "iid"),
                    };
                    let mean = rng.gen_range(-1.0..1.0);
                    let variance = rng.gen_range(0.2..3.0);
                    let noise_precision = rng.gen_range(0.5..8.0);
                    let prior = ScalarPenalty::Gaussian { mean, variance };
                    let inst = synthesize_slr(&kind, m, n, &prior, noise_precision, seed)?;
                    let (f1, f2) = slr_penalties(&inst)?;

                    let mut config = GecConfig::new(GecMode::Mmse, Diagonalizer::Uniform);
                    config.fixed_point_tol = 1e-12;
                    config.max_iters = 4000;
                    let trace = run_gec(&f1, &f2, &config)?;

                    let quad = quadratic_of(&f2)?;
                    let prior_mean = DVector::from_element(n, mean);
                    let prior_var = DVector::from_element(n, variance);
                    let (exact_mean, exact_cov) =
                        exact_gaussian_posterior(&prior_mean, &prior_var, quad)?;

                    let last = trace.last();
                    let mean_gap = (&last.x1 - &exact_mean).amax();
                    let var_gap = (1.0 / last.eta1[0] - exact_cov.trace() / n as f64).abs();
                    Ok(Out {
                        seed,
                        n,
                        m,
                        kind: kind_name,
                        converged: converged(&trace),
                        mean_gap,
                        var_gap,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut mean_worst = Worst::new();
        let mut var_worst = Worst::new();
        let mut stuck = 0usize;
        let mut stuck_detail = String::new();
        for o in &outs {
            if !o.converged {
                stuck += 1;
                if stuck_detail.is_empty() {
                    stuck_detail = format!("first: seed {} (N={}, M={})", o.seed, o.n, o.m);
                }
                continue;
            }
            let site = || format!("seed {} (N={}, M={}, {})", o.seed, o.n, o.m, o.kind);
            mean_worst.update(o.mean_gap, site);
            var_worst.update(o.var_gap, site);
        }
        let (mean_gap, mean_site) = mean_worst.take("no run converged");
        let (var_gap, var_site) = var_worst.take("no run converged");

        Ok(vec![
            check(
                "all-converged",
                stuck as f64,
                0.0,
                if stuck == 0 {
                    "all 50 runs converged at movement tolerance 1e-12".to_string()
                } else {
                    format!("{stuck} of 50 runs hit the iteration budget; {stuck_detail}")
                },
            ),
            check(
                "posterior-mean",
                mean_gap,
                1e-8,
                format!("worst ∞-norm gap to the exact posterior mean: {mean_site}"),
            ),
            check(
                "average-variance",
                var_gap,
                1e-8,
                format!("worst |η⁻¹ − tr(Σ)/N| against the exact posterior: {var_site}"),
            ),
            check(
                "runtime",
                start.elapsed().as_secs_f64(),
                10.0,
                "seconds for the 50-instance sweep".to_string(),
            ),
        ])
    })
}

// ---------------------------------------------------------------------
// Criterion 2 — MAP stationarity
// ---------------------------------------------------------------------

/// Converged MAP runs on strictly convex smooth problems must be
/// stationary points of `f₁ + f₂` (gradient sum ≤ 1e-6), satisfy the
/// four fixed-point consistency identities to 1e-8, and land on the same
/// minimizer as a proximal-gradient reference solver to 1e-6.
fn check_map_stationarity() -> Result<SuiteReport> {
    let spec = ("map-stationarity", 2, SUITES[1].summary);
    timed(spec, || {
        struct Out {
            seed: u64,
            n: usize,
            prior: &'static str,
            diag: &'static str,
            converged: bool,
            stationarity: f64,
            residual: f64,
            solver_gap: f64,
        }

        let pool = worker_pool()?;
        let outs: Vec<Out> = pool.install(|| {
            (0..50u64)
                .into_par_iter()
                .map(|i| -> Result<Out> {
                    let seed = 2000 + i;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let n = rng.gen_range(6..=32usize);

                    // Alternate prior families and data terms. Both
                    // constructions are strictly convex: the log-cosh
                    // stack has curvature ≥ quad > 0, the Gaussian prior
                    // has curvature 1/variance > 0.
                    let (f1, f2, prior_name) = if i % 2 == 0 {
                        let prior = ScalarPenalty::LogCoshQuad {
                            scale: rng.gen_range(0.4..1.5),
                            slope: rng.gen_range(0.7..2.0),
                            quad: rng.gen_range(0.3..1.0),
                        };
                        let lo = rng.gen_range(0.1..0.5);
                        let hi = rng.gen_range(1.0..4.0);
                        let p = haar_rotated_spectrum(&grid_spectrum(lo, hi, n), seed)?;
                        let b = normal_vector(&mut rng, n, 1.2);
                        (
                            stack(&prior, n)?,
                            PenaltyModel::Quadratic(QuadraticPenalty::new(p, b, 0.0)?),
                            "log-cosh",
                        )
                    } else {
                        let m = rng.gen_range((n / 2).max(3)..=2 * n);
                        let prior = ScalarPenalty::Gaussian {
                            mean: rng.gen_range(-1.0..1.0),
                            variance: rng.gen_range(0.3..2.0),
                        };
                        let noise_precision = rng.gen_range(0.5..6.0);
                        let inst =
                            synthesize_slr(&MatrixKind::IidGaussian, m, n, &prior, noise_precision, seed)?;
                        let (f1, f2) = slr_penalties(&inst)?;
                        (f1, f2, "gaussian")
                    };

                    let (diag, diag_name) = if i % 4 < 2 {
                        (Diagonalizer::Vector, "vector")
                    } else {
                        (Diagonalizer::Uniform, "uniform")
                    };
                    let mut config = GecConfig::new(GecMode::Map, diag);
                    config.fixed_point_tol = 1e-10;
                    config.max_iters = 3000;
                    let trace = run_gec(&f1, &f2, &config)?;

                    let report = fixed_point_residuals(&f1, &f2, &trace);
                    let reference = generic_map_solve(&f2, &f1, &DVector::zeros(n), 500_000)?;
                    Ok(Out {
                        seed,
                        n,
                        prior: prior_name,
                        diag: diag_name,
                        converged: converged(&trace),
                        stationarity: report.stationarity.unwrap_or(f64::INFINITY),
                        residual: max_residual(&report),
                        solver_gap: (&trace.last().x1 - &reference).amax(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut stat_worst = Worst::new();
        let mut res_worst = Worst::new();
        let mut gap_worst = Worst::new();
        let mut stuck = 0usize;
        let mut stuck_detail = String::new();
        for o in &outs {
            if !o.converged {
                stuck += 1;
                if stuck_detail.is_empty() {
                    stuck_detail = format!("first: seed {} (N={})", o.seed, o.n);
                }
                continue;
            }
            let site = || format!("seed {} (N={}, {} prior, {} diagonalizer)", o.seed, o.n, o.prior, o.diag);
            stat_worst.update(o.stationarity, site);
            res_worst.update(o.residual, site);
            gap_worst.update(o.solver_gap, site);
        }
        let (stationarity, stat_site) = stat_worst.take("no run converged");
        let (residual, res_site) = res_worst.take("no run converged");
        let (solver_gap, gap_site) = gap_worst.take("no run converged");

        Ok(vec![
            check(
                "all-converged",
                stuck as f64,
                0.0,
                if stuck == 0 {
                    "all 50 runs converged at movement tolerance 1e-10".to_string()
                } else {
                    format!("{stuck} of 50 runs hit the iteration budget; {stuck_detail}")
                },
            ),
            check(
                "stationarity",
                stationarity,
                1e-6,
                format!("worst ‖∇f₁(x̂) + ∇f₂(x̂)‖∞: {stat_site}"),
            ),
            check(
                "consistency-residuals",
                residual,
                1e-8,
                format!("worst fixed-point identity residual: {res_site}"),
            ),
            check(
                "matches-reference-solver",
                solver_gap,
                1e-6,
                format!("worst ∞-norm gap to proximal-gradient minimizer: {gap_site}"),
            ),
        ])
    })
}

// ---------------------------------------------------------------------
// Criterion 3 — curvature identities
// ---------------------------------------------------------------------

/// With diagonal Hessians the fixed-point belief precision is exactly
/// the summed curvature, `η = f₁''(x̂) + f₂''(x̂)` elementwise. With two
/// rotated spectra in generic position and uniform diagonalization, the
/// converged uniform `η` is predicted by free convolution: the root of
/// `η = R₁(−1/η) + R₂(−1/η)` — an asymptotic statement checked at
/// `N = 512` with a 5% budget for finite-size fluctuations.
fn check_curvature() -> Result<SuiteReport> {
    let spec = ("curvature", 3, SUITES[2].summary);
    timed(spec, || {
        let mut checks = Vec::new();

        // --- diagonal-Hessian exactness -------------------------------
        let mut diag_worst = Worst::new();
        let mut stuck = 0usize;
        for i in 0..8u64 {
            let seed = 3000 + i;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 12;
            let lcq = ScalarPenalty::LogCoshQuad {
                scale: rng.gen_range(0.5..1.4),
                slope: rng.gen_range(0.8..1.8),
                quad: rng.gen_range(0.3..0.9),
            };
            let f1 = stack(&lcq, n)?;
            let d = DVector::from_fn(n, |_, _| log_uniform(&mut rng, 0.3, 3.0));
            let b = normal_vector(&mut rng, n, 1.5);
            let f2 =
                PenaltyModel::Quadratic(QuadraticPenalty::new(DMatrix::from_diagonal(&d), b, 0.0)?);

            let mut config = GecConfig::new(GecMode::Map, Diagonalizer::Vector);
            config.fixed_point_tol = 1e-12;
            config.max_iters = 6000;
            let trace = run_gec(&f1, &f2, &config)?;
            if !converged(&trace) {
                stuck += 1;
                continue;
            }
            let last = trace.last();
            let eta_hat = DVector::from_fn(n, |k, _| lcq.curvature(last.x1[k]) + d[k]);
            let gap = (&last.eta1 - &eta_hat).amax() / eta_hat.amax();
            diag_worst.update(gap, || format!("seed {seed} (N={n})"));
        }
        let (diag_gap, diag_site) = diag_worst.take("no run converged");
        checks.push(check(
            "all-converged",
            stuck as f64,
            0.0,
            if stuck == 0 {
                "all 8 diagonal-Hessian runs converged at movement tolerance 1e-12".to_string()
            } else {
                format!("{stuck} of 8 diagonal-Hessian runs hit the iteration budget")
            },
        ));
        checks.push(check(
            "diagonal-curvature",
            diag_gap,
            1e-8,
            format!("worst ‖η − η̂‖∞/‖η̂‖∞ against the summed Hessian diagonal: {diag_site}"),
        ));

        // --- free-convolution prediction at N = 512 -------------------
        let n = 512;
        let evals1 = grid_spectrum(0.5, 2.5, n);
        let evals2: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 0.4 } else { 3.6 }).collect();
        let p1 = haar_rotated_spectrum(&evals1, 3101)?;
        let p2 = haar_rotated_spectrum(&evals2, 3102)?;
        let mut rng = ChaCha8Rng::seed_from_u64(3103);
        let b1 = normal_vector(&mut rng, n, 1.0);
        let b2 = normal_vector(&mut rng, n, 1.0);
        let f1 = PenaltyModel::Quadratic(QuadraticPenalty::new(p1, b1, 0.0)?);
        let f2 = PenaltyModel::Quadratic(QuadraticPenalty::new(p2, b2, 0.0)?);

        let mut config = GecConfig::new(GecMode::Map, Diagonalizer::Uniform);
        config.fixed_point_tol = 1e-9;
        config.max_iters = 1500;
        let trace = run_gec(&f1, &f2, &config)?;
        let eta_gec = trace.last().eta1[0];

        let s1 = SpectralModel::from_eigenvalues(evals1)?;
        let s2 = SpectralModel::from_eigenvalues(evals2)?;
        let eta_free = free_uniform_curvature(&s1, &s2)?;
        let free_gap = (eta_gec - eta_free).abs() / eta_free;
        let residual = freeness_residual(&s1, &s2, eta_gec)?;

        checks.push(check(
            "free-convolution",
            if converged(&trace) { free_gap } else { f64::INFINITY },
            0.05,
            format!(
                "N=512 rotated spectra: uniform η = {eta_gec:.6} vs free prediction {eta_free:.6} \
                 after {} iterations",
                trace.iterations()
            ),
        ));
        checks.push(check(
            "freeness-residual",
            residual,
            0.05,
            "relative defect of η = R₁(−1/η) + R₂(−1/η) at the converged η".to_string(),
        ));
        Ok(checks)
    })
}

// ---------------------------------------------------------------------
// Criterion 4 — frozen-precision contraction
// ---------------------------------------------------------------------

/// Largest step-to-step error ratio `‖r₁ᵏ⁺¹ − r₁*‖₂ / ‖r₁ᵏ − r₁*‖₂` over
/// the sweeps after the first, measured while the distance to the final
/// iterate is above the noise floor (ratios at rounding scale say
/// nothing about the operator). Also returns how many sweeps were
/// measured.
fn contraction_ratio(trace: &RunTrace) -> (f64, usize) {
    let target = &trace.last().r1;
    let floor = 1e-9 * (1.0 + target.norm());
    let dist: Vec<f64> = trace
        .records
        .iter()
        .map(|r| (&r.r1 - target).norm())
        .collect();
    let mut worst = 0.0_f64;
    let mut measured = 0usize;
    for k in 1..dist.len().saturating_sub(1) {
        if dist[k] >= floor {
            worst = worst.max(dist[k + 1] / dist[k]);
            measured += 1;
        }
    }
    (worst, measured)
}

/// For penalties with curvature in `[lo, hi]`, the reflected resolvent
/// at precision `γ` scales the error component at curvature `h` by
/// `|h − γ|/(h + γ)`; the factor is quasiconvex in `h`, so its maximum
/// over the range sits at an endpoint. The product over the two sides
/// bounds one full frozen sweep in the Euclidean norm.
fn corner_contraction_bound(b1: (f64, f64), b2: (f64, f64), gamma: f64) -> f64 {
    let side = |(lo, hi): (f64, f64)| {
        let r = |h: f64| (h - gamma).abs() / (h + gamma);
        r(lo).max(r(hi))
    };
    side(b1) * side(b2)
}

/// Frozen-precision (first-order) behavior: ten random starts reach a
/// common fixed point, every measured sweep contracts with a ratio below
/// the curvature corner bound, and the fixed point does not depend on
/// which frozen γ was used.
fn check_first_order() -> Result<SuiteReport> {
    let spec = ("first-order", 4, SUITES[3].summary);
    timed(spec, || {
        let n = 16;
        let lcq = ScalarPenalty::LogCoshQuad {
            scale: 1.0,
            slope: 1.1,
            quad: 0.5,
        };
        let f1 = stack(&lcq, n)?;
        let p = haar_rotated_spectrum(&grid_spectrum(0.6, 2.2, n), 4001)?;
        let mut rng = ChaCha8Rng::seed_from_u64(4002);
        let b = normal_vector(&mut rng, n, 1.0);
        let f2 = PenaltyModel::Quadratic(QuadraticPenalty::new(p, b, 0.0)?);
        let bounds1 = f1
            .curvature_bounds()
            .ok_or_else(|| GecError::Invariant("log-cosh stack must expose curvature bounds".to_string()))?;
        let bounds2 = f2
            .curvature_bounds()
            .ok_or_else(|| GecError::Invariant("quadratic must expose curvature bounds".to_string()))?;

        let frozen_run = |gamma: f64, r1: DVector<f64>| -> Result<RunTrace> {
            let mut config = GecConfig::new(GecMode::Map, Diagonalizer::Vector);
            config.schedule = Schedule::FrozenGamma;
            config.init_r1 = Some(r1);
            config.init_gamma1 = Some(PrecisionVec::uniform(n, gamma)?);
            config.init_gamma2 = Some(PrecisionVec::uniform(n, gamma)?);
            config.fixed_point_tol = 1e-13;
            config.max_iters = 4000;
            run_gec(&f1, &f2, &config)
        };

        let mut stuck = 0usize;
        let mut ratio_worst = Worst::new();
        let mut excess_worst = Worst::new();
        let mut sweeps_total = 0usize;

        // Ten random starts at a fixed γ.
        let mut rng = ChaCha8Rng::seed_from_u64(4003);
        let mut finals = Vec::with_capacity(10);
        for i in 0..10 {
            let trace = frozen_run(1.0, normal_vector(&mut rng, n, 2.0))?;
            if !converged(&trace) {
                stuck += 1;
            }
            let (ratio, measured) = contraction_ratio(&trace);
            sweeps_total += measured;
            let bound = corner_contraction_bound(bounds1, bounds2, 1.0);
            ratio_worst.update(ratio, || format!("start {i}, γ = 1.0"));
            excess_worst.update(ratio - bound, || {
                format!("start {i}, γ = 1.0 (ratio {ratio:.4} vs bound {bound:.4})")
            });
            finals.push(trace.last().x1.clone());
        }
        let common_gap = pairwise_inf(&finals);

        // Re-draws of the frozen precision from a fixed start.
        let mut rng = ChaCha8Rng::seed_from_u64(4004);
        let mut redraw_finals = vec![finals[0].clone()];
        for i in 0..5 {
            let gamma = log_uniform(&mut rng, 0.5, 2.5);
            let trace = frozen_run(gamma, DVector::zeros(n))?;
            if !converged(&trace) {
                stuck += 1;
            }
            let (ratio, measured) = contraction_ratio(&trace);
            sweeps_total += measured;
            let bound = corner_contraction_bound(bounds1, bounds2, gamma);
            ratio_worst.update(ratio, || format!("re-draw {i}, γ = {gamma:.4}"));
            excess_worst.update(ratio - bound, || {
                format!("re-draw {i}, γ = {gamma:.4} (ratio {ratio:.4} vs bound {bound:.4})")
            });
            redraw_finals.push(trace.last().x1.clone());
        }
        let redraw_gap = pairwise_inf(&redraw_finals);

        let (ratio, ratio_site) = ratio_worst.take("no sweeps measured");
        let (excess, excess_site) = excess_worst.take("no sweeps measured");
        Ok(vec![
            check(
                "all-converged",
                stuck as f64,
                0.0,
                "15 frozen-precision runs at movement tolerance 1e-13".to_string(),
            ),
            check(
                "common-fixed-point",
                common_gap,
                1e-7,
                "max pairwise ∞-norm gap between the limits of 10 random starts".to_string(),
            ),
            check(
                "contraction",
                ratio,
                0.99,
                format!("worst per-sweep error ratio across {sweeps_total} measured sweeps: {ratio_site}"),
            ),
            check(
                "corner-bound",
                excess,
                0.02,
                format!("worst (measured ratio − curvature corner bound): {excess_site}"),
            ),
            check(
                "gamma-invariance",
                redraw_gap,
                1e-6,
                "max pairwise ∞-norm gap between fixed points at 6 frozen-γ values".to_string(),
            ),
        ])
    })
}

// ---------------------------------------------------------------------
// Criterion 5 — two-stage second-order behavior
// ---------------------------------------------------------------------

/// The cavity map of a quadratic side: `G(γ) = 1 ./ diag((P + Γ)⁻¹) − γ`.
fn cavity_map(quad: &PenaltyModel, gamma: &DVector<f64>) -> Result<DVector<f64>> {
    let beta = DVector::zeros(gamma.len());
    let var = quad.map_belief(&beta, gamma)?.var_diag;
    Ok(DVector::from_fn(gamma.len(), |k, _| 1.0 / var[k] - gamma[k]))
}

/// Two-stage runs must keep the estimate pinned through the adaptive
/// stage, reach a precision limit that does not depend on the stage-one
/// γ, and the quadratic cavity map `G` must be nonnegative, monotone,
/// and sublinear under scaling, with `G(γ) → diag(P)` as `γ → ∞` — the
/// structure that makes the second stage a convergent recursion.
fn check_second_order() -> Result<SuiteReport> {
    let spec = ("second-order", 5, SUITES[4].summary);
    timed(spec, || {
        let n = 14;
        let lcq = ScalarPenalty::LogCoshQuad {
            scale: 0.9,
            slope: 1.2,
            quad: 0.6,
        };
        let f1 = stack(&lcq, n)?;
        let p = haar_rotated_spectrum(&grid_spectrum(0.5, 2.0, n), 5001)?;
        let mut rng = ChaCha8Rng::seed_from_u64(5002);
        let b = normal_vector(&mut rng, n, 1.2);
        let f2 = PenaltyModel::Quadratic(QuadraticPenalty::new(p, b, 0.0)?);

        let two_stage = |gamma0: f64| -> Result<RunTrace> {
            let mut config = GecConfig::new(GecMode::Map, Diagonalizer::Vector);
            config.schedule = Schedule::TwoStage;
            config.init_gamma1 = Some(PrecisionVec::uniform(n, gamma0)?);
            config.init_gamma2 = Some(PrecisionVec::uniform(n, gamma0)?);
            config.fixed_point_tol = 1e-11;
            config.max_iters = 4000;
            run_gec(&f1, &f2, &config)
        };

        let run_a = two_stage(0.8)?;
        let run_b = two_stage(3.0)?;

        let mut stuck = 0usize;
        let mut drift_worst = Worst::new();
        for (label, trace) in [("γ⁰ = 0.8", &run_a), ("γ⁰ = 3.0", &run_b)] {
            if !converged(trace) {
                stuck += 1;
            }
            let boundary = match trace.stage_boundary {
                Some(b) => b,
                None => {
                    drift_worst.update(f64::INFINITY, || {
                        format!("{label}: run never entered the adaptive stage")
                    });
                    continue;
                }
            };
            let x_hat = &trace.last().x1;
            let scale = 1.0 + x_hat.amax();
            for record in &trace.records[boundary..] {
                drift_worst.update((&record.x1 - x_hat).amax() / scale, || {
                    format!("{label}, adaptive-stage iteration {}", record.iteration)
                });
            }
        }
        let (drift, drift_site) = drift_worst.take("no adaptive stage recorded");

        let gamma_a = &run_a.last().gamma1;
        let gamma_b = &run_b.last().gamma1;
        let gamma_gap = (gamma_a - gamma_b).amax() / (1.0 + gamma_a.amax());

        // --- cavity-map structure over random (P, γ, α) cases ---------
        struct CaseOut {
            nonneg: f64,
            monotone: f64,
            scaling: f64,
            limit: f64,
        }
        let pool = worker_pool()?;
        let cases: Vec<CaseOut> = pool.install(|| {
            (0..200u64)
                .into_par_iter()
                .map(|i| -> Result<CaseOut> {
                    let mut rng = ChaCha8Rng::seed_from_u64(5100 + i);
                    let k = 6;
                    let rows = k + 3;
                    let w = DMatrix::from_fn(rows, k, |_, _| {
                        let v: f64 = StandardNormal.sample(&mut rng);
                        v / 3.0
                    });
                    let p = w.transpose() * &w + DMatrix::identity(k, k) * 0.05;
                    let diag_p = p.diagonal();
                    let quad =
                        PenaltyModel::Quadratic(QuadraticPenalty::new(p, DVector::zeros(k), 0.0)?);

                    let gamma = DVector::from_fn(k, |_, _| log_uniform(&mut rng, 1e-2, 1e2));
                    let gamma_up =
                        DVector::from_fn(k, |j, _| gamma[j] * (1.0 + rng.gen_range(0.0..1.0)));
                    let alpha = rng.gen_range(1.0..8.0);

                    let g = cavity_map(&quad, &gamma)?;
                    let g_up = cavity_map(&quad, &gamma_up)?;
                    let g_scaled = cavity_map(&quad, &(&gamma * alpha))?;
                    let g_limit = cavity_map(&quad, &DVector::from_element(k, 1e6))?;

                    // Violations are positive; clean cases land at or
                    // below zero.
                    let scale = 1.0 + diag_p.amax();
                    Ok(CaseOut {
                        nonneg: -g.min() / scale,
                        monotone: (&g - &g_up).max() / scale,
                        scaling: (&g_scaled - &(&g * alpha)).max() / scale,
                        limit: (&g_limit - &diag_p).amax() / scale,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut nonneg = Worst::new();
        let mut monotone = Worst::new();
        let mut scaling = Worst::new();
        let mut limit = Worst::new();
        for (i, c) in cases.iter().enumerate() {
            nonneg.update(c.nonneg, || format!("case {i}"));
            monotone.update(c.monotone, || format!("case {i}"));
            scaling.update(c.scaling, || format!("case {i}"));
            limit.update(c.limit, || format!("case {i}"));
        }
        let (nonneg, nonneg_site) = nonneg.take("no cases");
        let (monotone, monotone_site) = monotone.take("no cases");
        let (scaling, scaling_site) = scaling.take("no cases");
        let (limit, limit_site) = limit.take("no cases");

        Ok(vec![
            check(
                "all-converged",
                stuck as f64,
                0.0,
                "both two-stage runs at movement tolerance 1e-11".to_string(),
            ),
            check(
                "estimate-pinned",
                drift,
                1e-8,
                format!("worst scaled estimate movement during the adaptive stage: {drift_site}"),
            ),
            check(
                "gamma-limit-unique",
                gamma_gap,
                1e-6,
                "relative ∞-norm gap between precision limits from γ⁰ = 0.8 and γ⁰ = 3.0".to_string(),
            ),
            check(
                "cavity-nonnegative",
                nonneg,
                1e-10,
                format!("worst −min G(γ) over 200 random (P, γ) cases: {nonneg_site}"),
            ),
            check(
                "cavity-monotone",
                monotone,
                1e-10,
                format!("worst componentwise G(γ) − G(γ′) for γ′ ≥ γ over 200 cases: {monotone_site}"),
            ),
            check(
                "cavity-subscaling",
                scaling,
                1e-10,
                format!("worst componentwise G(αγ) − αG(γ) for α ≥ 1 over 200 cases: {scaling_site}"),
            ),
            check(
                "cavity-limit",
                limit,
                1e-4,
                format!("worst ‖G(10⁶·1) − diag(P)‖∞ over 200 cases: {limit_site}"),
            ),
        ])
    })
}

// ---------------------------------------------------------------------
// Criterion 6 — spectral identity and scalar-channel prediction
// ---------------------------------------------------------------------

/// At any uniform-diagonalizer MMSE fixed point of a regression problem,
/// the quadratic side forces `1/η = S_Y(−γ₂)` with `Y = γ_w AᵀA`, which
/// rearranges to the exact finite-N identity `γ₁ = R_Y(−1/η)` on the
/// actual eigenvalues. Replacing the empirical per-coordinate posterior
/// variance with its scalar-channel average turns the same two relations
/// into the asymptotic self-consistent prediction of `η`; at `N = 400`
/// the two must agree to a few percent.
fn check_replica() -> Result<SuiteReport> {
    let spec = ("replica", 6, SUITES[5].summary);
    timed(spec, || {
        let start = Instant::now();
        // Regime choice: the per-seed average posterior variance
        // fluctuates with the realized number of active components,
        // roughly like √((1−a)/(aN)), so denser signals concentrate
        // better; activity 0.4 puts the median sampling fluctuation near
        // 1.5% — well inside the 5% budget — while staying genuinely
        // sparse and single-solution for the scalar-channel equations.
        let prior = ScalarPenalty::BernoulliGaussian {
            activity: 0.4,
            slab_variance: 1.0,
            map_spike_variance: 1e-6,
        };
        let noise_precision = 2.0;
        let (m, n) = (200, 400);

        struct Out {
            seed: u64,
            converged: bool,
            iterations: usize,
            identity_gap: f64,
            mse_gap: f64,
            solutions: usize,
            eta_gec: f64,
            eta_pred: f64,
        }

        let prior_ref = &prior;
        let pool = worker_pool()?;
        let outs: Vec<Out> = pool.install(|| {
            (0..20u64)
                .into_par_iter()
                .map(|i| -> Result<Out> {
                    let seed = 6000 + i;
                    let inst = synthesize_slr(
                        &MatrixKind::IidGaussian,
                        m,
                        n,
                        prior_ref,
                        noise_precision,
                        seed,
                    )?;
                    let (f1, f2) = slr_penalties(&inst)?;
                    // The data-side spectrum: eigenvalues of γ_w·AᵀA,
                    // clamped at zero because the eigensolver can emit
                    // −1e-14 for the exact null space (M < N) and the
                    // transform domain arguments assume a nonnegative
                    // spectrum.
                    let evals: Vec<f64> = quadratic_of(&f2)?
                        .eigenvalues()
                        .iter()
                        .map(|&v| v.max(0.0))
                        .collect();
                    let spectrum = SpectralModel::from_eigenvalues(evals)?;

                    let mut config = GecConfig::new(GecMode::Mmse, Diagonalizer::Uniform);
                    config.fixed_point_tol = 1e-9;
                    config.max_iters = 1000;
                    let trace = run_gec(&f1, &f2, &config)?;
                    let last = trace.last();
                    let eta = last.eta1[0];
                    let gamma1 = last.gamma1[0];

                    let r_value = spectrum.r_transform(-1.0 / eta)?;
                    let identity_gap = (gamma1 - r_value).abs() / gamma1;

                    let solutions = replica_fixed_point(&spectrum, prior_ref)?;
                    let nearest = solutions
                        .iter()
                        .min_by(|a, b| {
                            (a.eta - eta).abs().total_cmp(&(b.eta - eta).abs())
                        })
                        .copied()
                        .ok_or_else(|| {
                            GecError::Invariant("replica solver returned no solutions".to_string())
                        })?;
                    let mse_gap = (1.0 / eta - nearest.mse).abs() / nearest.mse;

                    Ok(Out {
                        seed,
                        converged: converged(&trace),
                        iterations: trace.iterations(),
                        identity_gap,
                        mse_gap,
                        solutions: solutions.len(),
                        eta_gec: eta,
                        eta_pred: nearest.eta,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut identity_worst = Worst::new();
        let mut mse_worst = Worst::new();
        let mut stuck = 0usize;
        let mut ambiguous = 0usize;
        let mut iters_max = 0usize;
        for o in &outs {
            if !o.converged {
                stuck += 1;
                continue;
            }
            if o.solutions != 1 {
                ambiguous += 1;
            }
            iters_max = iters_max.max(o.iterations);
            identity_worst.update(o.identity_gap, || format!("seed {}", o.seed));
            mse_worst.update(o.mse_gap, || {
                format!("seed {}: η = {:.4} vs predicted {:.4}", o.seed, o.eta_gec, o.eta_pred)
            });
        }
        let gaps: Vec<f64> = outs.iter().filter(|o| o.converged).map(|o| o.mse_gap).collect();
        let median_gap = median(gaps);
        let (identity, identity_site) = identity_worst.take("no run converged");
        let (mse_max, mse_site) = mse_worst.take("no run converged");

        Ok(vec![
            check(
                "all-converged",
                stuck as f64,
                0.0,
                format!("20 MMSE runs at N={n}, M={m}; longest took {iters_max} iterations"),
            ),
            check(
                "spectral-identity",
                identity,
                1e-6,
                format!("worst |γ₁ − R_Y(−1/η)|/γ₁ on the empirical spectrum: {identity_site}"),
            ),
            check(
                "prediction-unique",
                ambiguous as f64,
                0.0,
                "seeds whose scalar-channel equations admitted more than one solution".to_string(),
            ),
            check(
                "prediction-median",
                median_gap,
                0.05,
                format!(
                    "median |η⁻¹ − η⁻¹_pred|/η⁻¹_pred over 20 seeds (worst {mse_max:.2e} at {mse_site})"
                ),
            ),
            check(
                "runtime",
                start.elapsed().as_secs_f64(),
                120.0,
                "seconds for the 20-seed comparison".to_string(),
            ),
        ])
    })
}

// ---------------------------------------------------------------------
// Criterion 7 — operator-splitting equivalence
// ---------------------------------------------------------------------

/// Frozen-precision MAP runs must replay the symmetric splitting loop
/// (two dual updates per cycle) exactly — every mean, pseudo-mean, and
/// scaled dual variable, every iteration — on smooth and on non-smooth
/// problems alike.
fn check_splitting() -> Result<SuiteReport> {
    let spec = ("splitting", 7, SUITES[6].summary);
    timed(spec, || {
        let mut checks = Vec::new();

        // Smooth strictly convex pair.
        {
            let n = 8;
            let lcq = ScalarPenalty::LogCoshQuad {
                scale: 0.8,
                slope: 1.3,
                quad: 0.4,
            };
            let f1 = stack(&lcq, n)?;
            let p = haar_rotated_spectrum(&grid_spectrum(0.5, 1.9, n), 7001)?;
            let mut rng = ChaCha8Rng::seed_from_u64(7002);
            let b = normal_vector(&mut rng, n, 1.0);
            let f2 = PenaltyModel::Quadratic(QuadraticPenalty::new(p, b, 0.0)?);
            let x0 = normal_vector(&mut rng, n, 1.5);
            let deviation = gec_admm_equivalence(&f1, &f2, 1.3, &x0, 100)?;
            checks.push(check(
                "smooth",
                deviation,
                1e-10,
                "log-cosh + rotated quadratic, γ = 1.3, 100 cycles".to_string(),
            ));
        }

        // Non-smooth l1 against an underdetermined data term: the
        // soft-threshold keeps exact zeros in play on both sides.
        {
            let prior = ScalarPenalty::Laplace { rate: 1.0 };
            let inst = synthesize_slr(&MatrixKind::IidGaussian, 6, 10, &prior, 4.0, 7003)?;
            let (f1, f2) = slr_penalties(&inst)?;
            let mut rng = ChaCha8Rng::seed_from_u64(7004);
            let x0 = normal_vector(&mut rng, 10, 1.0);
            let deviation = gec_admm_equivalence(&f1, &f2, 0.9, &x0, 100)?;
            checks.push(check(
                "lasso",
                deviation,
                1e-10,
                "l1 prior + underdetermined quadratic (N=10, M=6), γ = 0.9, 100 cycles".to_string(),
            ));
        }

        // Fully Gaussian pair.
        {
            let prior = ScalarPenalty::Gaussian {
                mean: 0.2,
                variance: 1.5,
            };
            let inst = synthesize_slr(&MatrixKind::IidGaussian, 9, 9, &prior, 1.0, 7005)?;
            let (f1, f2) = slr_penalties(&inst)?;
            let mut rng = ChaCha8Rng::seed_from_u64(7006);
            let x0 = normal_vector(&mut rng, 9, 1.0);
            let deviation = gec_admm_equivalence(&f1, &f2, 2.0, &x0, 100)?;
            checks.push(check(
                "gaussian",
                deviation,
                1e-10,
                "Gaussian prior + square quadratic, γ = 2.0, 100 cycles".to_string(),
            ));
        }

        Ok(checks)
    })
}

// ---------------------------------------------------------------------
// Criterion 8 — belief moment consistency
// ---------------------------------------------------------------------

/// At an MMSE fixed point with the vector diagonalizer, the tilted
/// belief on each side and the Gaussian summary `q = N(x̂, 1/η)` must
/// share means and marginal second moments. Side 1 is integrated by the
/// adaptive grid oracle; side 2 (quadratic) by the exact Gaussian
/// posterior oracle with the message recast as a Gaussian prior.
fn check_moment_match() -> Result<SuiteReport> {
    let spec = ("moment-match", 8, SUITES[7].summary);
    timed(spec, || {
        struct Case {
            label: &'static str,
            penalties: Vec<ScalarPenalty>,
            p: DMatrix<f64>,
            b: DVector<f64>,
        }
        let cases = vec![
            Case {
                label: "bernoulli-gaussian-1d",
                penalties: vec![ScalarPenalty::BernoulliGaussian {
                    activity: 0.4,
                    slab_variance: 1.5,
                    map_spike_variance: 1e-6,
                }],
                p: DMatrix::from_row_slice(1, 1, &[0.9]),
                b: DVector::from_row_slice(&[0.55]),
            },
            Case {
                label: "laplace-2d",
                penalties: vec![ScalarPenalty::Laplace { rate: 1.1 }; 2],
                p: DMatrix::from_row_slice(2, 2, &[1.2, 0.45, 0.45, 0.8]),
                b: DVector::from_row_slice(&[0.7, -0.4]),
            },
            Case {
                label: "logcosh-2d",
                penalties: vec![
                    ScalarPenalty::LogCoshQuad {
                        scale: 0.8,
                        slope: 1.3,
                        quad: 0.4,
                    };
                    2
                ],
                p: DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 1.4]),
                b: DVector::from_row_slice(&[-0.2, 0.9]),
            },
        ];

        let mut stuck = 0usize;
        let mut clips = 0usize;
        let mut b1_mean = Worst::new();
        let mut b1_moment = Worst::new();
        let mut b2_mean = Worst::new();
        let mut b2_moment = Worst::new();

        for case in &cases {
            let n = case.penalties.len();
            let f1 = PenaltyModel::separable(case.penalties.clone())?;
            let f2 = PenaltyModel::Quadratic(QuadraticPenalty::new(
                case.p.clone(),
                case.b.clone(),
                0.0,
            )?);
            let mut config = GecConfig::new(GecMode::Mmse, Diagonalizer::Vector);
            config.fixed_point_tol = 1e-11;
            config.max_iters = 5000;
            let trace = run_gec(&f1, &f2, &config)?;
            if !converged(&trace) {
                stuck += 1;
                continue;
            }
            clips += trace.gamma_clips;
            let last = trace.last();

            // Side 2's tilt (β₂, γ₂) recast as a Gaussian prior for the
            // exact-posterior oracle.
            let tilt_mean = DVector::from_fn(n, |k, _| last.beta2[k] / last.gamma2[k]);
            let tilt_var = DVector::from_fn(n, |k, _| 1.0 / last.gamma2[k]);
            let (g_mean, g_cov) =
                exact_gaussian_posterior(&tilt_mean, &tilt_var, quadratic_of(&f2)?)?;

            for k in 0..n {
                let site = || format!("{}, coordinate {k}", case.label);
                let x_hat = last.x1[k];
                let q_second = 1.0 / last.eta1[k] + x_hat * x_hat;

                let (m1, v1) = grid_mmse(&case.penalties[k], last.beta1[k], last.gamma1[k])?;
                b1_mean.update((m1 - x_hat).abs(), site);
                b1_moment.update((v1 + m1 * m1 - q_second).abs(), site);

                let m2 = g_mean[k];
                b2_mean.update((m2 - x_hat).abs(), site);
                b2_moment.update((g_cov[(k, k)] + m2 * m2 - q_second).abs(), site);
            }
        }

        let (b1m, b1m_site) = b1_mean.take("no case converged");
        let (b1s, b1s_site) = b1_moment.take("no case converged");
        let (b2m, b2m_site) = b2_mean.take("no case converged");
        let (b2s, b2s_site) = b2_moment.take("no case converged");
        Ok(vec![
            check(
                "all-converged",
                stuck as f64,
                0.0,
                format!("3 MMSE runs at movement tolerance 1e-11; {clips} precision clips"),
            ),
            check(
                "belief-mean",
                b1m,
                1e-6,
                format!("worst |E[x|b₁] − x̂| by direct quadrature: {b1m_site}"),
            ),
            check(
                "belief-second-moment",
                b1s,
                1e-6,
                format!("worst |E[x²|b₁] − E[x²|q]| by direct quadrature: {b1s_site}"),
            ),
            check(
                "gaussian-factor-mean",
                b2m,
                1e-6,
                format!("worst |E[x|b₂] − x̂| by the exact Gaussian oracle: {b2m_site}"),
            ),
            check(
                "gaussian-factor-second-moment",
                b2s,
                1e-6,
                format!("worst |E[x²|b₂] − E[x²|q]| by the exact Gaussian oracle: {b2s_site}"),
            ),
        ])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_ordered() {
        let names: Vec<_> = suites().iter().map(|s| s.name).collect();
        assert_eq!(names.len(), 8);
        for (i, s) in suites().iter().enumerate() {
            assert_eq!(s.criterion, i + 1, "criteria must be listed in order");
        }
        let mut unique = names.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), names.len(), "suite names must be unique");
        assert!(run_suite("no-such-suite").is_none());
    }

    #[test]
    fn splitting_suite_passes() {
        let report = run_suite("splitting").expect("registered").expect("runs");
        assert_eq!(report.criterion, 7);
        for c in &report.checks {
            assert!(c.passed, "{}: observed {:.3e} vs tolerance {:.3e} ({})",
                c.name, c.observed, c.tolerance, c.detail);
        }
    }

    #[test]
    fn moment_suite_passes() {
        let report = run_suite("moment-match").expect("registered").expect("runs");
        assert!(report.passed(), "worst: {:?}", report.worst());
    }

    #[test]
    fn worst_check_ranks_by_margin() {
        let report = SuiteReport {
            suite: "demo",
            criterion: 1,
            summary: "",
            checks: vec![
                check("tight", 0.9, 1.0, String::new()),
                check("loose", 1e-9, 1e-6, String::new()),
            ],
            wall_ms: 0,
        };
        assert_eq!(report.worst().unwrap().name, "tight");
        assert!(report.passed());
    }
}

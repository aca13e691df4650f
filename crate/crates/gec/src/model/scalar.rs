//! Per-coordinate penalties: values, (sub)gradients, proximal maps, and
//! tilted posterior moments.
//!
//! Every penalty works in the natural message parametrization `(β, γ)`:
//! the tilted density is `p(x) ∝ exp(−f(x) − ½γx² + βx)`, i.e. a Gaussian
//! pseudo-observation with precision `γ` and mean `β/γ`. Where a closed
//! form exists (Gaussian, Laplace, Bernoulli–Gaussian, probit) it is used
//! in an `erfcx`/log-odds formulation that stays accurate arbitrarily far
//! into the tails; the remaining case falls back to adaptive, mode-centered
//! Gauss–Hermite quadrature in log space.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::GecError;
use crate::special::{
    erfcx, gauss_hermite, inv_mills, ln_cosh, log_erfcx, log_normal_cdf, log_sum_exp, logistic,
    moments_from_log_terms, GH_LADDER, HALF_LN_2PI,
};
use crate::tol::{PROX_TOL, QUAD_TOL, VAR_FLOOR};
use crate::Result;

/// A scalar penalty `f: R → R` (possibly non-smooth or non-convex).
///
/// Interpreted as a prior `∝ exp(−f)` when attached to an unknown, or as
/// a likelihood factor when attached to a derived coordinate (probit).
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarPenalty {
    /// `f(x) = (x − mean)² / (2·variance)`.
    Gaussian { mean: f64, variance: f64 },

    /// `f(x) = rate·|x|`.
    Laplace { rate: f64 },

    /// Spike-and-slab prior `activity·N(0, slab_variance) + (1−activity)·δ₀`.
    ///
    /// MMSE operations treat the spike exactly. MAP operations need a
    /// twice-differentiable penalty, so they replace the spike with
    /// `N(0, map_spike_variance)`; the proximal map of the resulting
    /// two-Gaussian mixture is non-convex and is solved by bracketing
    /// every stationary point and keeping the lowest-objective root.
    BernoulliGaussian {
        activity: f64,
        slab_variance: f64,
        map_spike_variance: f64,
    },

    /// `f(x) = scale·ln cosh(slope·x) + quad·x²/2`: a smooth, strictly
    /// convex penalty with exact curvature bounds `[quad, quad + scale·slope²]`,
    /// and deliberately *no* closed-form posterior — it exercises the
    /// quadrature path.
    LogCoshQuad { scale: f64, slope: f64, quad: f64 },

    /// Probit likelihood `f(z) = −ln Φ(label·z/scale)`, `label ∈ {−1, +1}`.
    ProbitLikelihood { label: f64, scale: f64 },
}

impl ScalarPenalty {
    /// Checks parameter sanity; call once when a model is assembled.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarPenalty::Gaussian { mean, variance } => mean.is_finite() && variance > 0.0 && variance.is_finite(),
            ScalarPenalty::Laplace { rate } => rate > 0.0 && rate.is_finite(),
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                map_spike_variance,
            } => {
                (0.0..=1.0).contains(&activity)
                    && slab_variance > 0.0
                    && slab_variance.is_finite()
                    && map_spike_variance > 0.0
                    && map_spike_variance < slab_variance
            }
            ScalarPenalty::LogCoshQuad { scale, slope, quad } => {
                scale >= 0.0 && slope > 0.0 && quad >= 0.0 && scale * slope * slope + quad > 0.0
                    && [scale, slope, quad].iter().all(|v| v.is_finite())
            }
            ScalarPenalty::ProbitLikelihood { label, scale } => {
                (label == 1.0 || label == -1.0) && scale > 0.0 && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(GecError::config(format!("invalid scalar penalty parameters: {self:?}")))
        }
    }

    /// Whether `f` is differentiable everywhere (everything except Laplace).
    pub fn is_smooth(&self) -> bool {
        !matches!(self, ScalarPenalty::Laplace { .. })
    }

    /// Penalty value. Additive constants follow the density normalizers
    /// where the penalty is a normalized prior (Bernoulli–Gaussian), and
    /// are dropped where they cannot matter (pure quadratics); only
    /// differences of values are ever consumed.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ScalarPenalty::Gaussian { mean, variance } => (x - mean).powi(2) / (2.0 * variance),
            ScalarPenalty::Laplace { rate } => rate * x.abs(),
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                map_spike_variance,
            } => {
                let (l1, l2) = bg_log_components(x, activity, slab_variance, map_spike_variance);
                -log_sum_exp(l1, l2)
            }
            ScalarPenalty::LogCoshQuad { scale, slope, quad } => {
                scale * ln_cosh(slope * x) + 0.5 * quad * x * x
            }
            ScalarPenalty::ProbitLikelihood { label, scale } => -log_normal_cdf(label * x / scale),
        }
    }

    /// The subdifferential `∂f(x)` as a closed interval; a single point
    /// wherever `f` is differentiable.
    pub fn grad_interval(&self, x: f64) -> (f64, f64) {
        match *self {
            ScalarPenalty::Laplace { rate } => {
                if x > 0.0 {
                    (rate, rate)
                } else if x < 0.0 {
                    (-rate, -rate)
                } else {
                    (-rate, rate)
                }
            }
            _ => {
                let g = self.grad(x);
                (g, g)
            }
        }
    }

    /// Derivative of `f` where it exists (Laplace: away from the origin).
    fn grad(&self, x: f64) -> f64 {
        match *self {
            ScalarPenalty::Gaussian { mean, variance } => (x - mean) / variance,
            ScalarPenalty::Laplace { rate } => rate * x.signum(),
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                map_spike_variance,
            } => x * bg_mix_precision(x, activity, slab_variance, map_spike_variance).0,
            ScalarPenalty::LogCoshQuad { scale, slope, quad } => {
                scale * slope * (slope * x).tanh() + quad * x
            }
            ScalarPenalty::ProbitLikelihood { label, scale } => {
                -(label / scale) * inv_mills(label * x / scale)
            }
        }
    }

    /// Second derivative `f''(x)` where defined almost everywhere.
    ///
    /// Laplace reports `0` off the origin and `+∞` at it, so that the MAP
    /// curvature proxy `1/(f'' + γ)` is the soft-threshold sensitivity
    /// divided by `γ` in both regimes.
    pub fn curvature(&self, x: f64) -> f64 {
        match *self {
            ScalarPenalty::Gaussian { variance, .. } => 1.0 / variance,
            ScalarPenalty::Laplace { .. } => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                map_spike_variance,
            } => {
                let (w, pi1) = bg_mix_precision(x, activity, slab_variance, map_spike_variance);
                let (t1, t2) = (1.0 / slab_variance, 1.0 / map_spike_variance);
                w - x * x * pi1 * (1.0 - pi1) * (t1 - t2).powi(2)
            }
            ScalarPenalty::LogCoshQuad { scale, slope, quad } => {
                let th = (slope * x).tanh();
                scale * slope * slope * (1.0 - th * th) + quad
            }
            ScalarPenalty::ProbitLikelihood { label, scale } => {
                let u = label * x / scale;
                let h = inv_mills(u);
                h * (u + h) / (scale * scale)
            }
        }
    }

    /// Global curvature bounds `(inf f'', sup f'')` where `f` is smooth
    /// with bounded second derivative; `None` for non-smooth or
    /// non-convex penalties.
    pub fn curvature_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            ScalarPenalty::Gaussian { variance, .. } => Some((1.0 / variance, 1.0 / variance)),
            ScalarPenalty::LogCoshQuad { scale, slope, quad } => {
                Some((quad, quad + scale * slope * slope))
            }
            // sup h(u)(u + h(u)) = 1, approached as u → −∞.
            ScalarPenalty::ProbitLikelihood { scale, .. } => Some((0.0, 1.0 / (scale * scale))),
            _ => None,
        }
    }

    /// Proximal map in natural form: `argmin_x f(x) + ½γx² − βx`.
    pub fn prox(&self, beta: f64, gamma: f64) -> Result<f64> {
        debug_assert!(gamma > 0.0, "prox needs a positive tilt precision");
        match *self {
            ScalarPenalty::Gaussian { mean, variance } => {
                Ok((beta + mean / variance) / (gamma + 1.0 / variance))
            }
            ScalarPenalty::Laplace { rate } => {
                Ok(beta.signum() * (beta.abs() - rate).max(0.0) / gamma)
            }
            ScalarPenalty::LogCoshQuad { scale, slope, quad } => {
                // ψ(x) = (quad + γ)x + scale·slope·tanh(slope·x) − β is strictly
                // increasing; |tanh| ≤ 1 gives a hard bracket.
                let a = scale * slope;
                let lo = (beta - a) / (quad + gamma);
                let hi = (beta + a) / (quad + gamma);
                solve_monotone_root(
                    lo,
                    hi,
                    |x| self.grad(x) + gamma * x - beta,
                    |x| self.curvature(x) + gamma,
                    "logcosh prox",
                )
            }
            ScalarPenalty::ProbitLikelihood { .. } => {
                let (lo, hi) = bracket_root(
                    |z| self.grad(z) + gamma * z - beta,
                    beta / gamma,
                    1.0 / gamma.sqrt(),
                    "probit prox",
                )?;
                solve_monotone_root(
                    lo,
                    hi,
                    |z| self.grad(z) + gamma * z - beta,
                    |z| self.curvature(z) + gamma,
                    "probit prox",
                )
            }
            ScalarPenalty::BernoulliGaussian {
                slab_variance,
                map_spike_variance,
                ..
            } => {
                // The objective F(x) = f(x) + ½γx² − βx is non-convex, but
                // f'(x) = x·h(x) with h(x) the responsibility-weighted
                // mixture precision, bounded between the slab and spike
                // precisions. Every stationary point solves x = β/(γ + h(x)),
                // so all of them live between the two quadratic surrogates
                // x_v = β/(γ + 1/v). Sweep that bracket on a geometric
                // h-grid (the spike end varies fastest), bisect each sign
                // change of F', and keep the root with the lowest objective.
                // Distinct minima sit at opposite ends of the responsibility
                // transition, far apart on the h-grid; they can share a cell
                // only at the edge of bimodality, where they coincide to
                // working precision — so one root per cell is enough.
                if beta == 0.0 {
                    return Ok(0.0); // F'(x) = x(γ + h(x)) has the single root 0
                }
                let psi = |x: f64| self.grad(x) + gamma * x - beta;
                let objective = |x: f64| self.value(x) + 0.5 * gamma * x * x - beta * x;
                let h_lo = 1.0 / slab_variance.max(map_spike_variance);
                let h_hi = 1.0 / slab_variance.min(map_spike_variance);
                // Candidates are ranked by objective, but F only resolves
                // differences above its own rounding; within that slack the
                // smaller |F'| wins, so an exact root always beats a merely
                // nearby bracket endpoint whose objective rounds the same.
                let mut best: Option<(f64, f64, f64)> = None;
                let consider = |x: f64, best: &mut Option<(f64, f64, f64)>| {
                    let fx = objective(x);
                    let px = psi(x).abs();
                    let replace = match *best {
                        None => true,
                        Some((_, fb, pb)) => {
                            let slack = 4.0 * f64::EPSILON * (1.0 + fx.abs().max(fb.abs()));
                            fx < fb - slack || (fx <= fb + slack && px < pb)
                        }
                    };
                    if replace {
                        *best = Some((x, fx, px));
                    }
                };
                const POINTS: usize = 49;
                let ratio = (h_lo / h_hi).powf(1.0 / (POINTS - 1) as f64);
                let mut h = h_hi;
                let mut prev = beta / (gamma + h);
                let mut prev_psi = psi(prev);
                // The bracket ends are candidates in their own right: when
                // a stiff tilt collapses the bracket to rounding width, the
                // sign change can vanish, but then either end IS the root
                // to the last bit.
                consider(prev, &mut best);
                for _ in 1..POINTS {
                    h = (h * ratio).max(h_lo);
                    let cur = beta / (gamma + h);
                    let cur_psi = psi(cur);
                    if prev_psi == 0.0 {
                        consider(prev, &mut best);
                    } else if prev_psi * cur_psi < 0.0 {
                        consider(bisect_root(prev, prev_psi, cur, &psi), &mut best);
                    }
                    prev = cur;
                    prev_psi = cur_psi;
                }
                consider(prev, &mut best);
                Ok(best.expect("the sweep always considers its endpoints").0)
            }
        }
    }

    /// Mean and variance of the tilted posterior
    /// `p(x) ∝ exp(−f(x) − ½γx² + βx)`.
    pub fn mmse_moments(&self, beta: f64, gamma: f64) -> Result<(f64, f64)> {
        debug_assert!(gamma > 0.0, "posterior tilt precision must be positive");
        match *self {
            ScalarPenalty::Gaussian { mean, variance } => {
                let post_prec = gamma + 1.0 / variance;
                Ok(((beta + mean / variance) / post_prec, 1.0 / post_prec))
            }
            ScalarPenalty::Laplace { rate } => Ok(laplace_moments(beta, gamma, rate)),
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                ..
            } => Ok(bg_moments(beta, gamma, activity, slab_variance)),
            ScalarPenalty::ProbitLikelihood { label, scale } => {
                Ok(probit_moments(beta, gamma, label, scale))
            }
            ScalarPenalty::LogCoshQuad { .. } => self.quadrature_moments(beta, gamma),
        }
    }

    /// Mode-centered adaptive Gauss–Hermite moments for penalties without
    /// a closed-form posterior. Doubles the rule until mean and variance
    /// stabilize to [`QUAD_TOL`].
    fn quadrature_moments(&self, beta: f64, gamma: f64) -> Result<(f64, f64)> {
        let mode = self.prox(beta, gamma)?;
        let curv = (self.curvature(mode) + gamma).max(VAR_FLOOR);
        let s = curv.sqrt().recip();
        let log_tilt = |x: f64| -self.value(x) - 0.5 * gamma * x * x + beta * x;
        let center_value = log_tilt(mode);

        let mut prev: Option<(f64, f64)> = None;
        let mut last_change = f64::INFINITY;
        for &n in GH_LADDER.iter() {
            let rule = gauss_hermite(n);
            let mut deltas = Vec::with_capacity(n);
            let mut log_terms = Vec::with_capacity(n);
            for (t, lw) in rule.nodes.iter().zip(&rule.log_weights) {
                let dx = std::f64::consts::SQRT_2 * s * t;
                deltas.push(dx);
                log_terms.push(lw + t * t + log_tilt(mode + dx) - center_value);
            }
            // Moments of the *offset* from the mode: the offset mean is
            // O(s), so var = E[δ²] − E[δ]² is cancellation-free.
            let (_, dmean, dsecond) = moments_from_log_terms(&deltas, &log_terms);
            let mean = mode + dmean;
            let var = (dsecond - dmean * dmean).max(0.0);
            if let Some((pm, pv)) = prev {
                last_change = ((mean - pm).abs() / (s + mean.abs()))
                    .max((var - pv).abs() / pv.max(VAR_FLOOR));
                if last_change <= QUAD_TOL {
                    return Ok((mean, var));
                }
            }
            prev = Some((mean, var));
        }
        Err(GecError::QuadratureAccuracy {
            rel_change: last_change,
            nodes: *GH_LADDER.last().expect("ladder non-empty"),
        })
    }

    /// Draws from the normalized prior `∝ exp(−f)`, where that is a
    /// proper, directly sampleable density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            ScalarPenalty::Gaussian { mean, variance } => {
                let n = Normal::new(mean, variance.sqrt()).expect("validated variance");
                Ok(n.sample(rng))
            }
            ScalarPenalty::Laplace { rate } => {
                let e = Exp::new(rate).expect("validated rate");
                let mag = e.sample(rng);
                Ok(if rng.gen_bool(0.5) { mag } else { -mag })
            }
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                ..
            } => {
                if rng.gen_bool(activity) {
                    let n = Normal::new(0.0, slab_variance.sqrt()).expect("validated variance");
                    Ok(n.sample(rng))
                } else {
                    Ok(0.0)
                }
            }
            _ => Err(GecError::domain(format!(
                "{self:?} is not a sampleable prior"
            ))),
        }
    }

    /// Mean and variance of the normalized density `∝ exp(-f)`, for the
    /// penalties that are proper priors (the same set [`Self::sample`]
    /// supports). Laplace variance is `2/rate²`; the spike-and-slab
    /// variance follows from the law of total variance.
    pub fn marginal_moments(&self) -> Result<(f64, f64)> {
        match *self {
            ScalarPenalty::Gaussian { mean, variance } => Ok((mean, variance)),
            ScalarPenalty::Laplace { rate } => Ok((0.0, 2.0 / (rate * rate))),
            ScalarPenalty::BernoulliGaussian {
                activity,
                slab_variance,
                ..
            } => Ok((0.0, activity * slab_variance)),
            _ => Err(GecError::domain(format!(
                "{self:?} has no marginal moments: it is not a proper prior"
            ))),
        }
    }
}

/// Log-density of each Bernoulli–Gaussian mixture component at `x`, MAP
/// relaxation (spike treated as a narrow Gaussian).
fn bg_log_components(x: f64, activity: f64, slab_var: f64, spike_var: f64) -> (f64, f64) {
    let l_slab = activity.ln() - 0.5 * x * x / slab_var - HALF_LN_2PI - 0.5 * slab_var.ln();
    let l_spike = (1.0 - activity).ln() - 0.5 * x * x / spike_var - HALF_LN_2PI - 0.5 * spike_var.ln();
    (l_slab, l_spike)
}

/// Mixture-precision weight `w(x) = π₁τ₁ + π₂τ₂` of the relaxed
/// two-Gaussian penalty, plus the slab responsibility `π₁`.
fn bg_mix_precision(x: f64, activity: f64, slab_var: f64, spike_var: f64) -> (f64, f64) {
    let (l1, l2) = bg_log_components(x, activity, slab_var, spike_var);
    let pi1 = logistic(l1 - l2);
    let w = pi1 / slab_var + (1.0 - pi1) / spike_var;
    (w, pi1)
}

/// Closed-form moments of `p(x) ∝ exp(−rate·|x| − ½γx² + βx)`: a pair of
/// truncated Gaussians, mixed with `erfcx`-stable weights.
fn laplace_moments(beta: f64, gamma: f64, rate: f64) -> (f64, f64) {
    let s = gamma.sqrt().recip();
    let mu_p = (beta - rate) / gamma; // branch mean on x ≥ 0
    let mu_m = (beta + rate) / gamma; // branch mean on x ≤ 0
    let t_p = -mu_p / (s * std::f64::consts::SQRT_2);
    let t_m = mu_m / (s * std::f64::consts::SQRT_2);

    // Branch masses are ∝ erfcx(t±): the Gaussian prefactors cancel
    // exactly, so the weights need only a logistic of log-erfcx values.
    let pi_p = logistic(log_erfcx(t_p) - log_erfcx(t_m));
    let pi_m = 1.0 - pi_p;

    let sqrt_2_over_pi = (2.0 / std::f64::consts::PI).sqrt();
    // Truncated-normal moments; λ = φ(α)/Φ(−α) at the standardized cut.
    let lam_p = sqrt_2_over_pi / erfcx(t_p);
    let e_p = mu_p + s * lam_p;
    let var_p = (s * s * (1.0 - lam_p * (lam_p + mu_p / s))).max(0.0);

    let lam_m = sqrt_2_over_pi / erfcx(t_m);
    let e_m = mu_m - s * lam_m;
    let var_m = (s * s * (1.0 - lam_m * (lam_m - mu_m / s))).max(0.0);

    let mean = pi_p * e_p + pi_m * e_m;
    // Law of total variance: no cancellation even when one branch dominates.
    let var = pi_p * var_p + pi_m * var_m + pi_p * pi_m * (e_p - e_m) * (e_p - e_m);
    (mean, var)
}

/// Closed-form moments of the spike-and-slab posterior (exact atom at 0).
fn bg_moments(beta: f64, gamma: f64, activity: f64, slab_var: f64) -> (f64, f64) {
    let v_hat = 1.0 / (gamma + 1.0 / slab_var);
    let m_hat = beta * v_hat;
    let log_odds = (activity / (1.0 - activity)).ln() - 0.5 * (1.0 + gamma * slab_var).ln()
        + 0.5 * beta * beta * v_hat;
    let pi = logistic(log_odds);
    let mean = pi * m_hat;
    let var = pi * v_hat + pi * (1.0 - pi) * m_hat * m_hat;
    (mean, var)
}

/// Closed-form moments of `p(z) ∝ Φ(label·z/scale)·N(z; β/γ, 1/γ)`.
fn probit_moments(beta: f64, gamma: f64, label: f64, scale: f64) -> (f64, f64) {
    let mu = beta / gamma;
    let tau2 = 1.0 / gamma;
    let denom = (scale * scale + tau2).sqrt();
    let w = label * mu / denom;
    let h = inv_mills(w);
    let mean = mu + label * tau2 * h / denom;
    let var = (tau2 - tau2 * tau2 * h * (w + h) / (denom * denom)).max(0.0);
    (mean, var)
}

/// Safeguarded Newton for a strictly increasing residual `ψ` with a valid
/// bracket `[lo, hi]` (`ψ(lo) ≤ 0 ≤ ψ(hi)`). Newton steps that leave the
/// bracket fall back to bisection; the bracket shrinks monotonically.
///
/// Converges to an *argument* accuracy of `PROX_TOL·(1 + |x|)`: the
/// ψ-residual is converted through the local slope, so the guarantee does
/// not degrade when the tilt precision (and with it ψ's scale) is large
/// or small. Outer solvers difference prox outputs against each other, so
/// accuracy in x-units is the contract that matters.
fn solve_monotone_root(
    mut lo: f64,
    mut hi: f64,
    psi: impl Fn(f64) -> f64,
    dpsi: impl Fn(f64) -> f64,
    context: &'static str,
) -> Result<f64> {
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        residual = psi(x);
        if residual > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = dpsi(x);
        let slope_ok = slope.is_finite() && slope > 0.0;
        if residual == 0.0 || (slope_ok && residual.abs() <= slope * PROX_TOL * (1.0 + x.abs())) {
            return Ok(x);
        }
        // The bracket always contains the root, so its collapse bounds the
        // error rigorously even where the slope estimate is poor.
        if hi - lo <= f64::EPSILON * (lo.abs() + hi.abs() + 1.0) {
            return Ok(x);
        }
        let newton = x - residual / slope;
        x = if slope_ok && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(GecError::SolverFailure {
        context,
        residual: residual.abs(),
        iterations: 100,
    })
}

/// Expands a bracket geometrically from `x0` until the (increasing)
/// residual changes sign.
fn bracket_root(
    psi: impl Fn(f64) -> f64,
    x0: f64,
    step0: f64,
    context: &'static str,
) -> Result<(f64, f64)> {
    let f0 = psi(x0);
    if f0 == 0.0 {
        return Ok((x0, x0));
    }
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = step0.max(f64::MIN_POSITIVE);
    let mut prev = x0;
    for _ in 0..200 {
        let next = x0 + dir * step;
        let fn_ = psi(next);
        if fn_ == 0.0 {
            return Ok((next, next));
        }
        if (fn_ > 0.0) != (f0 > 0.0) {
            return Ok(if dir > 0.0 { (prev, next) } else { (next, prev) });
        }
        prev = next;
        step *= 2.0;
    }
    Err(GecError::SolverFailure {
        context,
        residual: f0.abs(),
        iterations: 200,
    })
}

/// Bisection on a sign-change bracket: `psi(a) = fa` and `psi(b)` carry
/// opposite signs. Narrows until the midpoint stops moving, so the root
/// is resolved to the last floating-point bit of its location — no
/// tolerance parameter involved.
fn bisect_root(mut a: f64, mut fa: f64, mut b: f64, psi: &impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let fm = psi(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Plain Simpson moments of `exp(log_f)` over `[lo, hi]` — an
    /// independent oracle for the closed forms (moderate parameters only,
    /// so no log-space care is needed).
    fn simpson_moments(log_f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
        assert!(n % 2 == 0);
        let h = (hi - lo) / n as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for k in 0..=n {
            let x = lo + k as f64 * h;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = log_f(x).exp() * w;
            m0 += f;
            m1 += f * x;
            m2 += f * x * x;
        }
        let mean = m1 / m0;
        (mean, m2 / m0 - mean * mean)
    }

    fn tilted(pen: &ScalarPenalty, beta: f64, gamma: f64) -> impl Fn(f64) -> f64 + '_ {
        move |x| -pen.value(x) - 0.5 * gamma * x * x + beta * x
    }

    #[test]
    fn gaussian_prox_and_moments_close_the_square() {
        let pen = ScalarPenalty::Gaussian { mean: 0.7, variance: 2.0 };
        // Posterior precision 1.5 + 0.5, mean (0.6 + 0.35)/2.
        let (m, v) = pen.mmse_moments(0.6, 1.5).unwrap();
        assert_relative_eq!(m, 0.475, max_relative = 1e-15);
        assert_relative_eq!(v, 0.5, max_relative = 1e-15);
        assert_relative_eq!(pen.prox(0.6, 1.5).unwrap(), 0.475, max_relative = 1e-15);
    }

    #[test]
    fn laplace_prox_is_the_soft_threshold() {
        let pen = ScalarPenalty::Laplace { rate: 1.0 };
        assert_relative_eq!(pen.prox(3.0, 2.0).unwrap(), 1.0);
        assert_relative_eq!(pen.prox(-3.0, 2.0).unwrap(), -1.0);
        assert_eq!(pen.prox(0.5, 2.0).unwrap(), 0.0);
        assert_eq!(pen.prox(-1.0, 2.0).unwrap(), 0.0);
        // Curvature convention: +∞ at the kink, 0 elsewhere, so that the
        // MAP variance proxy 1/(f'' + γ) is sensitivity/γ in both regimes.
        assert_eq!(pen.curvature(0.0), f64::INFINITY);
        assert_eq!(pen.curvature(0.3), 0.0);
    }

    #[test]
    fn laplace_moments_match_brute_force_quadrature() {
        let pen = ScalarPenalty::Laplace { rate: 1.3 };
        for &(beta, gamma) in &[(0.0, 1.0), (0.7, 2.0), (-2.5, 0.6), (6.0, 1.7), (1.2, 4.0)] {
            let (m, v) = pen.mmse_moments(beta, gamma).unwrap();
            let (om, ov) = simpson_moments(tilted(&pen, beta, gamma), -25.0, 25.0, 200_000);
            assert_abs_diff_eq!(m, om, epsilon = 1e-9);
            assert_abs_diff_eq!(v, ov, epsilon = 1e-9);
        }
        // Symmetry: zero tilt mean must be exactly zero.
        let (m0, _) = pen.mmse_moments(0.0, 1.0).unwrap();
        assert_eq!(m0, 0.0);
    }

    #[test]
    fn laplace_moments_survive_extreme_tilts() {
        // A message 10^4 standard deviations out: the posterior is a
        // nearly untruncated Gaussian at (β − λ)/γ with variance 1/γ.
        let pen = ScalarPenalty::Laplace { rate: 1.0 };
        let (m, v) = pen.mmse_moments(1e4, 1.0).unwrap();
        assert_relative_eq!(m, 1e4 - 1.0, max_relative = 1e-12);
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
        assert!(m.is_finite() && v.is_finite());
        let (m, v) = pen.mmse_moments(-1e8, 2.0).unwrap();
        assert_relative_eq!(m, (-1e8 + 1.0) / 2.0, max_relative = 1e-12);
        assert!(v.is_finite());
    }

    #[test]
    fn bernoulli_gaussian_moments_match_split_quadrature() {
        // Independent oracle: the atom contributes (1−ρ) exactly; the slab
        // integral is done by Simpson.
        let (rho, slab) = (0.3, 2.0);
        let pen = ScalarPenalty::BernoulliGaussian {
            activity: rho,
            slab_variance: slab,
            map_spike_variance: slab * 1e-4,
        };
        for &(beta, gamma) in &[(0.8, 1.5), (0.0, 0.7), (-3.0, 2.2), (5.0, 1.0)] {
            let (m, v) = pen.mmse_moments(beta, gamma).unwrap();
            let log_slab = |x: f64| {
                rho.ln() - 0.5 * x * x / slab - HALF_LN_2PI - 0.5 * slab.ln() - 0.5 * gamma * x * x
                    + beta * x
            };
            let n = 400_000;
            let (lo, hi) = (-20.0, 20.0);
            let h = (hi - lo) / n as f64;
            let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for k in 0..=n {
                let x = lo + k as f64 * h;
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                let f = log_slab(x).exp() * w * h / 3.0;
                z += f;
                m1 += f * x;
                m2 += f * x * x;
            }
            z += 1.0 - rho; // the spike's tilted mass: exp(β·0 − 0) = 1
            let om = m1 / z;
            let ov = m2 / z - om * om;
            assert_abs_diff_eq!(m, om, epsilon = 1e-8);
            assert_abs_diff_eq!(v, ov, epsilon = 1e-8);
        }
    }

    #[test]
    fn bernoulli_gaussian_moments_edge_activities() {
        // activity → 1 degenerates to the pure Gaussian slab.
        let pen = ScalarPenalty::BernoulliGaussian {
            activity: 1.0 - 1e-300,
            slab_variance: 2.0,
            map_spike_variance: 2e-4,
        };
        let (m, v) = pen.mmse_moments(0.9, 1.4).unwrap();
        let gauss = ScalarPenalty::Gaussian { mean: 0.0, variance: 2.0 };
        let (gm, gv) = gauss.mmse_moments(0.9, 1.4).unwrap();
        assert_relative_eq!(m, gm, max_relative = 1e-10);
        assert_relative_eq!(v, gv, max_relative = 1e-10);
        // A huge tilt must overwhelm even a tiny activity, not overflow.
        let sparse = ScalarPenalty::BernoulliGaussian {
            activity: 1e-6,
            slab_variance: 1.0,
            map_spike_variance: 1e-4,
        };
        let (m, v) = sparse.mmse_moments(200.0, 1.0).unwrap();
        assert_relative_eq!(m, 100.0, max_relative = 1e-6);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn bernoulli_gaussian_prox_beats_a_grid_search() {
        let pen = ScalarPenalty::BernoulliGaussian {
            activity: 0.25,
            slab_variance: 1.5,
            map_spike_variance: 1.5e-4,
        };
        let objective = |x: f64, beta: f64, gamma: f64| pen.value(x) + 0.5 * gamma * x * x - beta * x;
        // Includes tilts near the basin switch, where the objective is
        // genuinely bimodal and a single Newton start would be fooled.
        for &(beta, gamma) in &[
            (0.0, 1.0),
            (0.8, 1.0),
            (1.7, 1.0),
            (2.0, 1.0),
            (3.5, 1.0),
            (-2.4, 0.5),
            (6.0, 2.0),
        ] {
            let x = pen.prox(beta, gamma).unwrap();
            // Stationarity of the smooth relaxed objective...
            assert_abs_diff_eq!(pen.grad(x) + gamma * x - beta, 0.0, epsilon = 1e-8);
            // ...and global optimality against a fine grid.
            let mut best = (f64::INFINITY, 0.0);
            let mut t = -8.0;
            while t <= 8.0 {
                let f = objective(t, beta, gamma);
                if f < best.0 {
                    best = (f, t);
                }
                t += 1e-4;
            }
            assert!(
                objective(x, beta, gamma) <= best.0 + 1e-10,
                "grid found a better point than prox at beta={beta}, gamma={gamma}: {} vs {}",
                objective(x, beta, gamma),
                best.0
            );
        }
    }

    #[test]
    fn probit_moments_match_brute_force_quadrature() {
        for &label in &[1.0, -1.0] {
            let pen = ScalarPenalty::ProbitLikelihood { label, scale: 0.8 };
            for &(beta, gamma) in &[(1.0, 2.0), (0.0, 1.0), (-4.0, 1.3), (3.0, 0.5)] {
                let (m, v) = pen.mmse_moments(beta, gamma).unwrap();
                let (om, ov) = simpson_moments(tilted(&pen, beta, gamma), -30.0, 30.0, 200_000);
                assert_abs_diff_eq!(m, om, epsilon = 1e-9);
                assert_abs_diff_eq!(v, ov, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn probit_prox_satisfies_stationarity() {
        let pen = ScalarPenalty::ProbitLikelihood { label: -1.0, scale: 1.2 };
        for &(beta, gamma) in &[(2.0, 1.0), (-1.0, 0.3), (0.0, 2.0), (40.0, 5.0)] {
            let z = pen.prox(beta, gamma).unwrap();
            assert_abs_diff_eq!(
                pen.grad(z) + gamma * z - beta,
                0.0,
                epsilon = 1e-8 * beta.abs().max(1.0)
            );
        }
    }

    #[test]
    fn logcosh_prox_satisfies_stationarity_and_bounds() {
        let pen = ScalarPenalty::LogCoshQuad { scale: 1.5, slope: 2.0, quad: 0.3 };
        let (c_lo, c_hi) = pen.curvature_bounds().unwrap();
        assert_relative_eq!(c_lo, 0.3);
        assert_relative_eq!(c_hi, 0.3 + 1.5 * 4.0);
        for &(beta, gamma) in &[(0.0, 1.0), (5.0, 0.4), (-12.0, 2.0), (0.3, 7.0)] {
            let x = pen.prox(beta, gamma).unwrap();
            assert_abs_diff_eq!(
                pen.grad(x) + gamma * x - beta,
                0.0,
                epsilon = 1e-9 * beta.abs().max(1.0)
            );
            let c = pen.curvature(x);
            assert!(c >= c_lo - 1e-12 && c <= c_hi + 1e-12);
        }
    }

    #[test]
    fn logcosh_quadrature_matches_brute_force() {
        let pen = ScalarPenalty::LogCoshQuad { scale: 1.0, slope: 1.5, quad: 0.5 };
        for &(beta, gamma) in &[(0.9, 1.1), (0.0, 0.6), (-7.0, 2.0)] {
            let (m, v) = pen.mmse_moments(beta, gamma).unwrap();
            let (om, ov) = simpson_moments(tilted(&pen, beta, gamma), -30.0, 30.0, 400_000);
            assert_abs_diff_eq!(m, om, epsilon = 1e-9);
            assert_abs_diff_eq!(v, ov, epsilon = 1e-9);
        }
    }

    #[test]
    fn posterior_mean_derivative_equals_variance() {
        // For every tilted posterior, ∂mean/∂β = variance (exponential-
        // family identity). This catches sign and scaling slips in any
        // closed form, independently of quadrature oracles.
        let penalties: Vec<ScalarPenalty> = vec![
            ScalarPenalty::Gaussian { mean: -0.4, variance: 1.7 },
            ScalarPenalty::Laplace { rate: 0.9 },
            ScalarPenalty::BernoulliGaussian {
                activity: 0.35,
                slab_variance: 1.2,
                map_spike_variance: 1.2e-4,
            },
            ScalarPenalty::LogCoshQuad { scale: 0.8, slope: 1.3, quad: 0.4 },
            ScalarPenalty::ProbitLikelihood { label: 1.0, scale: 1.0 },
        ];
        for pen in &penalties {
            for &(beta, gamma) in &[(0.6, 1.4), (-1.9, 0.8), (3.2, 2.5)] {
                let h = 1e-5;
                let (mp, _) = pen.mmse_moments(beta + h, gamma).unwrap();
                let (mm, _) = pen.mmse_moments(beta - h, gamma).unwrap();
                let (_, v) = pen.mmse_moments(beta, gamma).unwrap();
                assert_abs_diff_eq!((mp - mm) / (2.0 * h), v, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn prox_results_are_local_minima() {
        let penalties: Vec<ScalarPenalty> = vec![
            ScalarPenalty::Gaussian { mean: 0.2, variance: 0.9 },
            ScalarPenalty::Laplace { rate: 1.1 },
            ScalarPenalty::LogCoshQuad { scale: 1.0, slope: 1.0, quad: 0.2 },
            ScalarPenalty::ProbitLikelihood { label: 1.0, scale: 1.5 },
        ];
        for pen in &penalties {
            for &(beta, gamma) in &[(1.3, 0.7), (-0.8, 2.0)] {
                let x = pen.prox(beta, gamma).unwrap();
                let obj = |t: f64| pen.value(t) + 0.5 * gamma * t * t - beta * t;
                assert!(obj(x) <= obj(x + 1e-4) + 1e-12);
                assert!(obj(x) <= obj(x - 1e-4) + 1e-12);
            }
        }
    }

    #[test]
    fn probit_curvature_matches_finite_differences() {
        let pen = ScalarPenalty::ProbitLikelihood { label: 1.0, scale: 0.7 };
        for &z in &[-3.0, -0.5, 0.0, 1.2, 4.0] {
            let h = 1e-5;
            let fd = (pen.grad(z + h) - pen.grad(z - h)) / (2.0 * h);
            assert_abs_diff_eq!(pen.curvature(z), fd, epsilon = 1e-5);
        }
        // Curvature stays within the advertised global bounds.
        let (lo, hi) = pen.curvature_bounds().unwrap();
        for &z in &[-60.0, -2.0, 0.0, 2.0, 60.0] {
            let c = pen.curvature(z);
            assert!(c >= lo && c <= hi + 1e-12, "curvature {c} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn bernoulli_gaussian_curvature_matches_finite_differences() {
        let pen = ScalarPenalty::BernoulliGaussian {
            activity: 0.4,
            slab_variance: 2.0,
            map_spike_variance: 0.01,
        };
        for &x in &[-1.5, -0.2, 0.0, 0.1, 0.8, 3.0] {
            let h = 1e-6;
            let fd = (pen.grad(x + h) - pen.grad(x - h)) / (2.0 * h);
            assert_relative_eq!(pen.curvature(x), fd, max_relative = 1e-4, epsilon = 1e-4);
        }
    }

    #[test]
    fn sampling_respects_prior_shape() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pen = ScalarPenalty::BernoulliGaussian {
            activity: 0.3,
            slab_variance: 1.0,
            map_spike_variance: 1e-4,
        };
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| pen.sample(&mut rng).unwrap()).collect();
        let zeros = draws.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
        assert_abs_diff_eq!(zeros, 0.7, epsilon = 0.02);
        let second: f64 = draws.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(second, 0.3, epsilon = 0.02); // ρ·σ²

        let lap = ScalarPenalty::Laplace { rate: 2.0 };
        let draws: Vec<f64> = (0..n).map(|_| lap.sample(&mut rng).unwrap()).collect();
        let mean: f64 = draws.iter().sum::<f64>() / n as f64;
        let second: f64 = draws.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.03);
        assert_abs_diff_eq!(second, 0.5, epsilon = 0.03); // 2/rate²

        assert!(ScalarPenalty::ProbitLikelihood { label: 1.0, scale: 1.0 }
            .sample(&mut rng)
            .is_err());
    }

    #[test]
    fn validation_rejects_nonsense() {
        assert!(ScalarPenalty::Gaussian { mean: 0.0, variance: 0.0 }.validate().is_err());
        assert!(ScalarPenalty::Laplace { rate: -1.0 }.validate().is_err());
        assert!(ScalarPenalty::BernoulliGaussian {
            activity: 1.3,
            slab_variance: 1.0,
            map_spike_variance: 1e-4
        }
        .validate()
        .is_err());
        // The spike relaxation must be strictly narrower than the slab.
        assert!(ScalarPenalty::BernoulliGaussian {
            activity: 0.5,
            slab_variance: 1.0,
            map_spike_variance: 2.0
        }
        .validate()
        .is_err());
        assert!(ScalarPenalty::LogCoshQuad { scale: 0.0, slope: 1.0, quad: 0.0 }
            .validate()
            .is_err());
        assert!(ScalarPenalty::ProbitLikelihood { label: 0.5, scale: 1.0 }.validate().is_err());
        assert!(ScalarPenalty::ProbitLikelihood { label: -1.0, scale: 1.0 }.validate().is_ok());
    }
}

//! The two-penalty message-passing solver.
//!
//! One iteration performs two half-steps. Entering with the natural
//! message `(β₁, γ₁)` addressed to penalty 1:
//!
//! 1. form penalty 1's belief (MAP: prox + curvature diagonal; MMSE:
//!    mean + variance diagonal), floor the variance diagonal, collapse
//!    it through the configured [`Diagonalizer`], and invert to get the
//!    belief precision `η₁`;
//! 2. send penalty 2 the *cavity* message `γ₂ = η₁ − γ₁`,
//!    `β₂ = η₁∘x̂₁ − β₁` (so the belief factorizes as the product of the
//!    two messages); repeat the half-step on side 2 to close the loop.
//!
//! Fixed points are characterized by matching means `x̂₁ = x̂₂` and
//! matching belief precisions `η₁ = η₂ = γ₁ + γ₂`; in MAP mode any fixed
//! point is a stationary point of `f₁ + f₂` ([`fixed_point_residuals`]
//! measures all of this).
//!
//! Three schedules share the loop:
//!
//! * [`Schedule::Adaptive`] — the full algorithm above;
//! * [`Schedule::FrozenGamma`] — precisions pinned at their initial
//!   values and `η ≡ γ₁ + γ₂`; only the means flow. For smooth strongly
//!   convex penalties this is a contraction, and with equal uniform
//!   precisions it reproduces a classical operator-splitting loop
//!   step-for-step (see [`crate::oracles`]);
//! * [`Schedule::TwoStage`] — run frozen until the means settle, then
//!   release the precisions. In MAP mode the estimate provably stays at
//!   the joint minimizer through the second stage while the precisions
//!   adapt, which the check suites verify to rounding accuracy.
//!
//! Precision subtraction can produce zero or negative entries (a one-
//! dimensional l1 problem does so deterministically, since the
//! soft-threshold slope is 1 wherever it exists). Those entries are
//! clipped to a configurable floor and counted in the trace; `β` is
//! carried in exact form so clipping never multiplies an infinity into
//! the means.

use nalgebra::DVector;

use crate::error::GecError;
use crate::model::{Diagonalizer, PenaltyModel, PrecisionVec};
use crate::tol::{DIVERGENCE_FACTOR, FIXED_POINT_TOL, GAMMA_FLOOR, STAGE1_TOL, VAR_FLOOR};
use crate::Result;

/// Inference mode: proximal (posterior mode) or posterior-mean updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GecMode {
    Map,
    Mmse,
}

/// Precision schedule across iterations; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Adaptive,
    FrozenGamma,
    TwoStage,
}

/// Solver configuration. `new` fills conventional defaults; the init
/// fields are optional and default to `r₁ = 0`, `γ₁ = γ₂ = 1`.
#[derive(Debug, Clone)]
pub struct GecConfig {
    pub mode: GecMode,
    pub diagonalizer: Diagonalizer,
    pub schedule: Schedule,
    /// Initial pseudo-mean for side 1 (`β₁ = γ₁∘r₁`). Defaults to zeros.
    pub init_r1: Option<DVector<f64>>,
    /// Initial message precision for side 1. Defaults to all-ones.
    pub init_gamma1: Option<PrecisionVec>,
    /// Initial message precision for side 2 (consumed by the frozen and
    /// two-stage schedules, where `η = γ₁ + γ₂` before release; the
    /// adaptive schedule derives `γ₂` in its first half-step).
    pub init_gamma2: Option<PrecisionVec>,
    /// Iteration budget (per stage, for the two-stage schedule).
    pub max_iters: usize,
    /// Relative fixed-point tolerance; termination needs two consecutive
    /// iterations at or below it (`<=`, so an exactly stationary iterate
    /// terminates).
    pub fixed_point_tol: f64,
    /// Floor applied to outgoing message precisions.
    pub gamma_floor: f64,
    /// Damping on outgoing messages: `new = θ·proposed + (1−θ)·old`.
    /// `1.0` disables damping. Fixed points are unaffected.
    pub damping: f64,
}

impl GecConfig {
    pub fn new(mode: GecMode, diagonalizer: Diagonalizer) -> Self {
        GecConfig {
            mode,
            diagonalizer,
            schedule: Schedule::Adaptive,
            init_r1: None,
            init_gamma1: None,
            init_gamma2: None,
            max_iters: 500,
            fixed_point_tol: FIXED_POINT_TOL,
            gamma_floor: GAMMA_FLOOR,
            damping: 1.0,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        self.diagonalizer.validate(dim)?;
        if let Some(r1) = &self.init_r1 {
            if r1.len() != dim {
                return Err(GecError::config("init_r1 length does not match the problem"));
            }
        }
        for (name, g) in [("init_gamma1", &self.init_gamma1), ("init_gamma2", &self.init_gamma2)] {
            if let Some(g) = g {
                if g.len() != dim {
                    return Err(GecError::config(format!("{name} length does not match the problem")));
                }
            }
        }
        if self.max_iters == 0 {
            return Err(GecError::config("max_iters must be at least 1"));
        }
        if !(self.fixed_point_tol > 0.0) {
            return Err(GecError::config("fixed_point_tol must be positive"));
        }
        if !(self.gamma_floor > 0.0) {
            return Err(GecError::config("gamma_floor must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(GecError::config("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Snapshot of one full iteration. Message fields are the values
/// *entering* each half-step, so the algebraic relations
/// `r₂ = (η₁∘x̂₁ − β₁)/γ₂` etc. hold within a single record.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Message into side 1 at the start of the iteration.
    pub beta1: DVector<f64>,
    pub gamma1: DVector<f64>,
    pub r1: DVector<f64>,
    /// Side-1 belief.
    pub x1: DVector<f64>,
    pub eta1: DVector<f64>,
    /// Message into side 2 (after damping and flooring).
    pub beta2: DVector<f64>,
    pub gamma2: DVector<f64>,
    pub r2: DVector<f64>,
    /// Side-2 belief.
    pub x2: DVector<f64>,
    pub eta2: DVector<f64>,
    /// Relative max-norm movement of `(x̂₁, x̂₂, γ₁, γ₂)` versus the
    /// previous iteration (`∞` on the first).
    pub delta: f64,
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The movement metric stayed at or below tolerance for two
    /// consecutive iterations.
    Converged,
    /// The iteration budget ran out first. Clipped-precision runs can
    /// end here legitimately: their means settle while a floored
    /// precision keeps the metric alive.
    MaxIters,
}

/// Full run history plus bookkeeping.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Number of precision entries clipped to the floor across the run.
    pub gamma_clips: usize,
    /// Two-stage runs: index of the first record of the adaptive stage.
    pub stage_boundary: Option<usize>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a run trace always has at least one record")
    }
}

/// Residuals of the fixed-point characterization, evaluated on the last
/// iteration of a trace. All entries are relative max-norms.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// `x̂₁` vs `x̂₂`.
    pub mean_gap: f64,
    /// `η₁` vs `η₂`.
    pub eta_gap: f64,
    /// `η` vs `γ₁ + γ₂` (max over both sides' `η`).
    pub precision_sum_gap: f64,
    /// `x̂₁` vs the precision-weighted message combination
    /// `(β₁ + β₂)/(γ₁ + γ₂)`.
    pub combination_gap: f64,
    /// MAP stationarity: `∞`-norm distance of `0` from the interval sum
    /// `∂f₁(x̂) + ∂f₂(x̂)`. `None` when a penalty has no interval
    /// subdifferential (linear constraints).
    pub stationarity: Option<f64>,
}

/// Relative `∞`-norm difference, scaled by the new iterate's magnitude.
fn rel_inf(new: &DVector<f64>, old: &DVector<f64>) -> f64 {
    (new - old).amax() / (1.0 + new.amax())
}

struct HalfStepOutput {
    x: DVector<f64>,
    eta: DVector<f64>,
}

/// Belief + diagonalized precision for one side.
fn half_step(
    penalty: &PenaltyModel,
    mode: GecMode,
    diag: &Diagonalizer,
    beta: &DVector<f64>,
    gamma: &DVector<f64>,
) -> Result<HalfStepOutput> {
    let belief = match mode {
        GecMode::Map => penalty.map_belief(beta, gamma)?,
        GecMode::Mmse => penalty.mmse_belief(beta, gamma)?,
    };
    let mut q = belief.var_diag;
    q.apply(|v| *v = v.max(VAR_FLOOR));
    let mut eta = diag.apply(&q);
    eta.apply(|v| *v = 1.0 / *v);
    for &e in eta.iter() {
        if !e.is_finite() {
            return Err(GecError::Invariant(
                "belief precision became non-finite".to_string(),
            ));
        }
    }
    Ok(HalfStepOutput { x: belief.mean, eta })
}

/// Builds the cavity message `(β_j, γ_j) = (η∘x̂ − β_i, η − γ_i)`, with
/// damping against the previous message and flooring. Returns the new
/// message and how many entries were clipped.
fn cavity_message(
    eta: &DVector<f64>,
    x: &DVector<f64>,
    beta_in: &DVector<f64>,
    gamma_in: &DVector<f64>,
    prev_beta: &DVector<f64>,
    prev_gamma: &DVector<f64>,
    damping: f64,
    floor: f64,
) -> (DVector<f64>, DVector<f64>, usize) {
    let mut beta = DVector::zeros(eta.len());
    let mut gamma = DVector::zeros(eta.len());
    let mut clips = 0;
    for n in 0..eta.len() {
        let raw_gamma = eta[n] - gamma_in[n];
        let raw_beta = eta[n] * x[n] - beta_in[n];
        let mut g = damping * raw_gamma + (1.0 - damping) * prev_gamma[n];
        let b = damping * raw_beta + (1.0 - damping) * prev_beta[n];
        if g < floor {
            g = floor;
            clips += 1;
        }
        gamma[n] = g;
        beta[n] = b;
    }
    (beta, gamma, clips)
}

/// Runs the configured schedule. See the module docs for semantics.
pub fn run_gec(f1: &PenaltyModel, f2: &PenaltyModel, config: &GecConfig) -> Result<RunTrace> {
    let dim = f1.dim();
    if f2.dim() != dim {
        return Err(GecError::config(format!(
            "penalty dimensions disagree: {dim} vs {}",
            f2.dim()
        )));
    }
    config.validate(dim)?;

    match config.schedule {
        Schedule::Adaptive => run_loop(f1, f2, config, false, None),
        Schedule::FrozenGamma => run_loop(f1, f2, config, true, None),
        Schedule::TwoStage => {
            // Stage 1: frozen precisions, run the means to convergence at
            // the tighter stage tolerance.
            let mut stage1_cfg = config.clone();
            stage1_cfg.fixed_point_tol = STAGE1_TOL;
            let stage1 = run_loop(f1, f2, &stage1_cfg, true, None)?;
            // Stage 2: adaptive, seeded with the stage-1 message into
            // side 1 (same r₁ and γ₁; γ₂ is re-derived by the loop).
            let last = stage1.last();
            let mut stage2_cfg = config.clone();
            stage2_cfg.init_r1 = Some(last.r1.clone());
            stage2_cfg.init_gamma1 =
                Some(PrecisionVec::new(last.gamma1.clone()).expect("floored precisions are positive"));
            let stage2 = run_loop(f1, f2, &stage2_cfg, false, Some(&stage1))?;
            Ok(stage2)
        }
    }
}

/// The iteration loop. `continued_from` prepends an existing trace (used
/// by the two-stage schedule so the full history stays in one trace).
fn run_loop(
    f1: &PenaltyModel,
    f2: &PenaltyModel,
    config: &GecConfig,
    frozen: bool,
    continued_from: Option<&RunTrace>,
) -> Result<RunTrace> {
    let dim = f1.dim();
    let gamma1_init = config
        .init_gamma1
        .clone()
        .map(PrecisionVec::into_vector)
        .unwrap_or_else(|| DVector::from_element(dim, 1.0));
    let gamma2_init = config
        .init_gamma2
        .clone()
        .map(PrecisionVec::into_vector)
        .unwrap_or_else(|| DVector::from_element(dim, 1.0));
    let r1_init = config.init_r1.clone().unwrap_or_else(|| DVector::zeros(dim));
    let beta1_init = r1_init.component_mul(&gamma1_init);

    // Frozen schedules pin η at γ₁ + γ₂.
    let frozen_eta = &gamma1_init + &gamma2_init;

    let mut beta1 = beta1_init;
    let mut gamma1 = gamma1_init;
    let mut beta2 = DVector::zeros(dim);
    let mut gamma2 = gamma2_init.clone();

    let mut records: Vec<IterationRecord> = continued_from.map(|t| t.records.clone()).unwrap_or_default();
    let mut gamma_clips = continued_from.map(|t| t.gamma_clips).unwrap_or(0);
    let stage_boundary = continued_from.map(|t| t.records.len());
    let base_iteration = records.len();

    let mut magnitude_trace: Vec<f64> = Vec::new();
    let mut divergence_scale: Option<f64> = None;
    let mut prev: Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> = None;
    let mut hits = 0usize;
    let mut termination = Termination::MaxIters;

    for iteration in 0..config.max_iters {
        // --- half-step on side 1 -------------------------------------
        let h1 = half_step(f1, config.mode, &config.diagonalizer, &beta1, &gamma1)?;
        let eta1 = if frozen { frozen_eta.clone() } else { h1.eta };
        let (new_beta2, new_gamma2, clips2) = cavity_message(
            &eta1,
            &h1.x,
            &beta1,
            &gamma1,
            &beta2,
            &gamma2,
            config.damping,
            config.gamma_floor,
        );
        beta2 = new_beta2;
        if !frozen {
            gamma2 = new_gamma2;
            gamma_clips += clips2;
        }

        // --- half-step on side 2 -------------------------------------
        let h2 = half_step(f2, config.mode, &config.diagonalizer, &beta2, &gamma2)?;
        let eta2 = if frozen { frozen_eta.clone() } else { h2.eta };
        let (new_beta1, new_gamma1, clips1) = cavity_message(
            &eta2,
            &h2.x,
            &beta2,
            &gamma2,
            &beta1,
            &gamma1,
            config.damping,
            config.gamma_floor,
        );

        // --- movement metric ------------------------------------------
        let delta = match &prev {
            Some((px1, px2, pg1, pg2)) => rel_inf(&h1.x, px1)
                .max(rel_inf(&h2.x, px2))
                .max(rel_inf(&gamma1, pg1))
                .max(rel_inf(&gamma2, pg2)),
            None => f64::INFINITY,
        };
        prev = Some((h1.x.clone(), h2.x.clone(), gamma1.clone(), gamma2.clone()));

        let record = IterationRecord {
            iteration: base_iteration + iteration,
            r1: beta1.component_div(&gamma1),
            beta1: beta1.clone(),
            gamma1: gamma1.clone(),
            x1: h1.x,
            eta1,
            r2: beta2.component_div(&gamma2),
            beta2: beta2.clone(),
            gamma2: gamma2.clone(),
            x2: h2.x,
            eta2,
            delta,
        };

        beta1 = new_beta1;
        if !frozen {
            gamma1 = new_gamma1;
            gamma_clips += clips1;
        }

        let magnitude = record.x1.amax().max(record.x2.amax());
        magnitude_trace.push(magnitude);
        let scale = *divergence_scale.get_or_insert(1.0 + magnitude);
        if magnitude > DIVERGENCE_FACTOR * scale {
            return Err(GecError::Divergence { magnitude_trace });
        }
        records.push(record);

        if delta <= config.fixed_point_tol {
            hits += 1;
            if hits >= 2 {
                termination = Termination::Converged;
                break;
            }
        } else {
            hits = 0;
        }
    }

    Ok(RunTrace {
        records,
        termination,
        gamma_clips,
        stage_boundary,
    })
}

/// Evaluates the fixed-point residuals on the last iteration of a trace.
pub fn fixed_point_residuals(
    f1: &PenaltyModel,
    f2: &PenaltyModel,
    trace: &RunTrace,
) -> FixedPointReport {
    let last = trace.last();
    let mean_gap = rel_inf(&last.x1, &last.x2);
    let eta_gap = rel_inf(&last.eta1, &last.eta2);
    let gamma_sum = &last.gamma1 + &last.gamma2;
    let precision_sum_gap = rel_inf(&last.eta1, &gamma_sum).max(rel_inf(&last.eta2, &gamma_sum));
    let combination = (&last.beta1 + &last.beta2).component_div(&gamma_sum);
    let combination_gap = rel_inf(&last.x1, &combination);

    let stationarity = match (f1.grad_interval(&last.x1), f2.grad_interval(&last.x1)) {
        (Ok((lo1, hi1)), Ok((lo2, hi2))) => {
            let mut worst = 0.0_f64;
            for n in 0..last.x1.len() {
                let lo = lo1[n] + lo2[n];
                let hi = hi1[n] + hi2[n];
                let dist = if lo > 0.0 {
                    lo
                } else if hi < 0.0 {
                    -hi
                } else {
                    0.0
                };
                worst = worst.max(dist);
            }
            Some(worst)
        }
        _ => None,
    };

    FixedPointReport {
        mean_gap,
        eta_gap,
        precision_sum_gap,
        combination_gap,
        stationarity,
    }
}

//! Seed orchestration: synthesize, solve, measure, persist.
//!
//! Each seed is an independent work item — its own instance, its own
//! solver run, its own trace file — executed on a worker pool sized by
//! `GEC_WORKERS`. A seed that fails (synthesis or solver error) is
//! recorded with an error status and the run continues; the caller
//! treats the run as failed only when every seed failed. Records are
//! sorted by seed before they are written, so output does not depend on
//! scheduling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use anyhow::Context;
use gec::engine::{fixed_point_residuals, run_gec, Termination};
use gec::model::PenaltyModel;
use gec::oracles::exact_gaussian_posterior;
use gec::problems::{glm_penalties, slr_penalties, synthesize_probit_glm, synthesize_slr};
use gec::spectral::{replica_fixed_point, SpectralModel};
use gec::nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ProblemClass};

/// One seed's outcome. Field order is the CSV column order; `wall_ms`
/// is last because it is the only nondeterministic column.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRecord {
    pub seed: u64,
    /// `"ok"`, or `"error: …"` with every metric empty.
    pub status: String,
    pub iterations: Option<u64>,
    pub converged: Option<bool>,
    /// `‖x̂ − x*‖² / ‖x*‖²` against the synthesized ground truth.
    pub nmse: Option<f64>,
    /// Mean of `1/η` over signal coordinates — the solver's own
    /// per-coordinate MSE prediction, independent of the ground truth.
    pub eta_inv_mean: Option<f64>,
    /// Scalar-channel MSE prediction on this seed's data spectrum
    /// (`[oracles] replica = true`).
    pub replica_mse: Option<f64>,
    /// `‖x̂ − exact posterior mean‖∞` (`[oracles] exact_posterior = true`).
    pub posterior_gap: Option<f64>,
    pub mean_gap: Option<f64>,
    pub eta_gap: Option<f64>,
    pub precision_sum_gap: Option<f64>,
    pub combination_gap: Option<f64>,
    /// MAP runs only: `‖∂f₁(x̂) + ∂f₂(x̂)‖∞`, the optimality gap of the
    /// combined objective. Empty for MMSE runs — the posterior mean is
    /// not a minimizer, so the gradient sum is not a residual there.
    pub stationarity: Option<f64>,
    pub gamma_clips: Option<u64>,
    pub wall_ms: Option<u64>,
}

impl ResultRecord {
    fn failure(seed: u64, message: String) -> Self {
        ResultRecord {
            seed,
            status: format!("error: {message}"),
            iterations: None,
            converged: None,
            nmse: None,
            eta_inv_mean: None,
            replica_mse: None,
            posterior_gap: None,
            mean_gap: None,
            eta_gap: None,
            precision_sum_gap: None,
            combination_gap: None,
            stationarity: None,
            gamma_clips: None,
            wall_ms: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// One trace line: enough to re-plot a convergence curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceLine {
    iteration: usize,
    /// Relative movement of the iteration's state.
    delta: f64,
    /// NMSE of the running estimate against the ground truth.
    nmse: f64,
    /// Mean of `1/η` over signal coordinates.
    eta_inv_mean: f64,
}

/// Runs every seed in the config and returns the records sorted by seed.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<Vec<ResultRecord>> {
    let gec_config = config.gec_config()?;
    let pool = gec::checks::worker_pool().map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut records: Vec<ResultRecord> = pool.install(|| {
        config
            .problem
            .seeds
            .par_iter()
            .map(|&seed| match run_seed(config, &gec_config, seed) {
                Ok(record) => record,
                Err(e) => ResultRecord::failure(seed, format!("{e:#}")),
            })
            .collect()
    });
    records.sort_by_key(|r| r.seed);
    Ok(records)
}

fn run_seed(
    config: &ExperimentConfig,
    gec_config: &gec::engine::GecConfig,
    seed: u64,
) -> anyhow::Result<ResultRecord> {
    let start = Instant::now();
    let prior = config.scalar_prior();
    let kind = config.matrix_kind();
    let (m, n) = (config.problem.m, config.problem.n);

    // Synthesize the instance and its penalty pair. `x_true` is the
    // ground truth for NMSE; for the GLM formulation the solver variable
    // is (x, z) and only the first `n` coordinates are the signal.
    let (f1, f2, x_true): (PenaltyModel, PenaltyModel, DVector<f64>) =
        match config.problem.class {
            ProblemClass::Slr => {
                let gw = config.problem.noise_precision.expect("validated");
                let inst = synthesize_slr(&kind, m, n, &prior, gw, seed)?;
                let (f1, f2) = slr_penalties(&inst)?;
                (f1, f2, inst.x_true)
            }
            ProblemClass::GlmProbit => {
                let scale = config.problem.probit_scale.expect("validated");
                let inst = synthesize_probit_glm(&kind, m, n, &prior, scale, seed)?;
                let (f1, f2) = glm_penalties(&inst)?;
                (f1, f2, inst.x_true)
            }
        };

    let trace = run_gec(&f1, &f2, gec_config)?;
    let report = fixed_point_residuals(&f1, &f2, &trace);
    let stationarity = match gec_config.mode {
        gec::GecMode::Map => report.stationarity,
        gec::GecMode::Mmse => None,
    };
    let last = trace.last();

    let signal_nmse = |x: &DVector<f64>| -> f64 {
        let mut err = 0.0;
        for k in 0..n {
            let d = x[k] - x_true[k];
            err += d * d;
        }
        err / x_true.norm_squared().max(f64::MIN_POSITIVE)
    };
    let eta_inv_mean = |eta: &DVector<f64>| -> f64 {
        (0..n).map(|k| 1.0 / eta[k]).sum::<f64>() / n as f64
    };

    if config.output.traces {
        let path = config.output.dir.join(format!("trace-{seed}.jsonl"));
        let file = File::create(&path)
            .with_context(|| format!("cannot create trace file {}", path.display()))?;
        let mut out = BufWriter::new(file);
        for record in &trace.records {
            let line = TraceLine {
                iteration: record.iteration,
                delta: record.delta,
                nmse: signal_nmse(&record.x1),
                eta_inv_mean: eta_inv_mean(&record.eta1),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }

    let replica_mse = if config.oracles.replica {
        let evals: Vec<f64> = match &f2 {
            PenaltyModel::Quadratic(q) => {
                q.eigenvalues().iter().map(|&v| v.max(0.0)).collect()
            }
            _ => unreachable!("replica oracle is validated to run on regression problems"),
        };
        let spectrum = SpectralModel::from_eigenvalues(evals)?;
        let solutions = replica_fixed_point(&spectrum, &prior)?;
        let eta = last.eta1[0];
        let nearest = solutions
            .iter()
            .min_by(|a, b| (a.eta - eta).abs().total_cmp(&(b.eta - eta).abs()))
            .context("scalar-channel equations returned no solution")?;
        Some(nearest.mse)
    } else {
        None
    };

    let posterior_gap = if config.oracles.exact_posterior {
        let quad = match &f2 {
            PenaltyModel::Quadratic(q) => q,
            _ => unreachable!("posterior oracle is validated to run on regression problems"),
        };
        let (mean, variance) = match prior {
            gec::model::ScalarPenalty::Gaussian { mean, variance } => (mean, variance),
            _ => unreachable!("posterior oracle is validated to run with a gaussian prior"),
        };
        let prior_mean = DVector::from_element(n, mean);
        let prior_var = DVector::from_element(n, variance);
        let (exact_mean, _) = exact_gaussian_posterior(&prior_mean, &prior_var, quad)?;
        Some((&last.x1 - &exact_mean).amax())
    } else {
        None
    };

    Ok(ResultRecord {
        seed,
        status: "ok".to_string(),
        iterations: Some(trace.iterations() as u64),
        converged: Some(trace.termination == Termination::Converged),
        nmse: Some(signal_nmse(&last.x1)),
        eta_inv_mean: Some(eta_inv_mean(&last.eta1)),
        replica_mse,
        posterior_gap,
        mean_gap: Some(report.mean_gap),
        eta_gap: Some(report.eta_gap),
        precision_sum_gap: Some(report.precision_sum_gap),
        combination_gap: Some(report.combination_gap),
        stationarity,
        gamma_clips: Some(trace.gamma_clips as u64),
        wall_ms: Some(start.elapsed().as_millis() as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn tiny_config(dir: &std::path::Path) -> ExperimentConfig {
        let text = format!(
            r#"
            [problem]
            class = "slr"
            n = 8
            m = 10
            noise_precision = 3.0
            seeds = [11, 5, 7]

            [problem.matrix]
            kind = "iid-gaussian"

            [problem.prior]
            kind = "gaussian"
            mean = 0.1
            variance = 1.0

            [gec]
            mode = "mmse"
            fixed_point_tol = 1e-11
            max_iters = 2000

            [oracles]
            exact_posterior = true

            [output]
            dir = "{}"
            "#,
            dir.display()
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn records_are_sorted_and_exact_on_gaussian_problems() {
        let dir = std::env::temp_dir().join(format!("gec-exp-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let config = tiny_config(&dir);
        let records = run_experiment(&config).unwrap();
        assert_eq!(
            records.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![5, 7, 11]
        );
        for r in &records {
            assert!(r.is_ok(), "{}", r.status);
            assert!(r.posterior_gap.unwrap() <= 1e-8);
            assert!(r.mean_gap.unwrap() <= 1e-9);
            let trace = dir.join(format!("trace-{}.jsonl", r.seed));
            assert!(trace.exists());
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}

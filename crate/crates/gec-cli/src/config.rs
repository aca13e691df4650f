//! Experiment configuration: a single TOML file, strictly validated.
//!
//! Unknown keys anywhere in the file are hard errors, as are
//! structurally valid but inconsistent combinations (a probit scale on a
//! regression problem, a replica oracle on a MAP run, ...). The goal is
//! that a config that loads is a config that runs.
//!
//! ```toml
//! [problem]
//! class = "slr"                  # "slr" | "glm-probit"
//! n = 64                         # signal dimension
//! m = 32                         # measurements
//! noise_precision = 2.0          # slr only; glm-probit uses probit_scale
//! seeds = [1, 2, 3]
//!
//! [problem.matrix]
//! kind = "iid-gaussian"          # "row-orthogonal" | "haar-spectrum"
//! # singular_values = [...]      # haar-spectrum only, length min(m, n)
//!
//! [problem.prior]
//! kind = "bernoulli-gaussian"    # "gaussian" | "laplace"
//! activity = 0.4
//! slab_variance = 1.0
//! # map_spike_variance = 1e-6    # optional
//!
//! [gec]
//! mode = "mmse"                  # "map"
//! # diagonalizer = "uniform"     # "vector" | "block"; defaults: slr uniform, glm block
//! # schedule = "adaptive"        # "frozen-gamma" | "two-stage"
//! # max_iters = 500
//! # fixed_point_tol = 1e-8
//! # gamma_floor = 1e-8
//! # damping = 1.0
//! # init_gamma = 1.0
//!
//! [oracles]
//! # replica = false              # per-seed scalar-channel MSE prediction (slr + mmse)
//! # exact_posterior = false      # per-seed exact posterior gap (slr + gaussian prior)
//!
//! [output]
//! dir = "out/experiment"
//! # traces = true                # per-seed iteration traces
//!
//! [report]
//! # formats = ["csv", "text-summary"]   # what `run` renders beside records.jsonl
//! ```

use std::path::PathBuf;

use anyhow::{ensure, Context};
use gec::engine::{GecConfig, GecMode, Schedule};
use gec::model::{Diagonalizer, PrecisionVec, ScalarPenalty};
use gec::problems::MatrixKind;
use serde::Deserialize;

use crate::report::ReportFormat;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub gec: GecSection,
    #[serde(default)]
    pub oracles: OracleSection,
    pub output: OutputSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub class: ProblemClass,
    pub n: usize,
    pub m: usize,
    pub matrix: MatrixSection,
    pub prior: PriorSection,
    pub seeds: Vec<u64>,
    /// Gaussian noise precision of the linear observations (`slr` only).
    pub noise_precision: Option<f64>,
    /// Probit noise scale (`glm-probit` only).
    pub probit_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemClass {
    Slr,
    GlmProbit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSection {
    IidGaussian,
    RowOrthogonal,
    HaarSpectrum { singular_values: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSection {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Laplace {
        rate: f64,
    },
    BernoulliGaussian {
        activity: f64,
        slab_variance: f64,
        #[serde(default = "default_spike_variance")]
        map_spike_variance: f64,
    },
}

fn default_spike_variance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GecSection {
    pub mode: ModeName,
    pub diagonalizer: Option<DiagonalizerName>,
    #[serde(default)]
    pub schedule: ScheduleName,
    pub max_iters: Option<usize>,
    pub fixed_point_tol: Option<f64>,
    pub gamma_floor: Option<f64>,
    pub damping: Option<f64>,
    /// Uniform initial value for both message precisions.
    pub init_gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Map,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalizerName {
    Vector,
    Uniform,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleName {
    #[default]
    Adaptive,
    FrozenGamma,
    TwoStage,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Per-seed scalar-channel MSE prediction from the data spectrum.
    /// Requires `class = "slr"` and `mode = "mmse"`.
    #[serde(default)]
    pub replica: bool,
    /// Per-seed ∞-norm gap between the estimate and the exact Gaussian
    /// posterior mean. Requires `class = "slr"` and a Gaussian prior.
    #[serde(default)]
    pub exact_posterior: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for `records.jsonl`, rendered reports, and traces.
    /// Created if missing.
    pub dir: PathBuf,
    /// Write a per-seed iteration trace (`trace-<seed>.jsonl`).
    #[serde(default = "default_true")]
    pub traces: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Renderings `run` writes next to `records.jsonl`:
    /// `csv` → `results.csv`, `text-summary` → `summary.txt`
    /// (`json-lines` is always present as `records.jsonl` itself).
    pub formats: Vec<ReportFormat>,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            formats: vec![ReportFormat::Csv, ReportFormat::TextSummary],
        }
    }
}

impl ExperimentConfig {
    /// Parses and fully validates a TOML config.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).context("invalid config file")?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> anyhow::Result<()> {
        let p = &self.problem;
        ensure!(p.n >= 1 && p.m >= 1, "problem dimensions must be at least 1");
        ensure!(!p.seeds.is_empty(), "problem.seeds must not be empty");

        match p.class {
            ProblemClass::Slr => {
                let gw = p
                    .noise_precision
                    .context("slr problems require problem.noise_precision")?;
                ensure!(
                    gw > 0.0 && gw.is_finite(),
                    "problem.noise_precision must be positive and finite"
                );
                ensure!(
                    p.probit_scale.is_none(),
                    "problem.probit_scale only applies to class = \"glm-probit\""
                );
            }
            ProblemClass::GlmProbit => {
                let scale = p
                    .probit_scale
                    .context("glm-probit problems require problem.probit_scale")?;
                ensure!(
                    scale > 0.0 && scale.is_finite(),
                    "problem.probit_scale must be positive and finite"
                );
                ensure!(
                    p.noise_precision.is_none(),
                    "problem.noise_precision only applies to class = \"slr\""
                );
            }
        }

        if let MatrixSection::HaarSpectrum { singular_values } = &p.matrix {
            ensure!(
                singular_values.len() == p.m.min(p.n),
                "problem.matrix.singular_values needs length min(m, n) = {}",
                p.m.min(p.n)
            );
            ensure!(
                singular_values.iter().all(|v| v.is_finite() && *v >= 0.0),
                "singular values must be finite and nonnegative"
            );
        }

        // Prior parameters are validated by the model layer.
        self.scalar_prior()
            .validate()
            .map_err(|e| anyhow::anyhow!("problem.prior: {e}"))?;

        if self.gec.diagonalizer == Some(DiagonalizerName::Block) {
            ensure!(
                p.class == ProblemClass::GlmProbit,
                "the block diagonalizer applies to glm-probit problems only"
            );
        }
        if let Some(iters) = self.gec.max_iters {
            ensure!(iters >= 1, "gec.max_iters must be at least 1");
        }
        for (name, value) in [
            ("gec.fixed_point_tol", self.gec.fixed_point_tol),
            ("gec.gamma_floor", self.gec.gamma_floor),
            ("gec.init_gamma", self.gec.init_gamma),
        ] {
            if let Some(v) = value {
                ensure!(v > 0.0 && v.is_finite(), "{name} must be positive and finite");
            }
        }
        if let Some(d) = self.gec.damping {
            ensure!(d > 0.0 && d <= 1.0, "gec.damping must lie in (0, 1]");
        }

        if self.oracles.replica {
            ensure!(
                p.class == ProblemClass::Slr,
                "oracles.replica requires class = \"slr\""
            );
            ensure!(
                self.gec.mode == ModeName::Mmse,
                "oracles.replica predicts MMSE quantities; it requires gec.mode = \"mmse\""
            );
        }
        if self.oracles.exact_posterior {
            ensure!(
                p.class == ProblemClass::Slr,
                "oracles.exact_posterior requires class = \"slr\""
            );
            ensure!(
                matches!(p.prior, PriorSection::Gaussian { .. }),
                "oracles.exact_posterior requires a gaussian prior"
            );
        }
        ensure!(
            !self.report.formats.is_empty(),
            "report.formats must not be empty (omit the [report] table for defaults)"
        );
        Ok(())
    }

    /// The scalar prior penalty described by `[problem.prior]`.
    pub fn scalar_prior(&self) -> ScalarPenalty {
        match &self.problem.prior {
            PriorSection::Gaussian { mean, variance } => ScalarPenalty::Gaussian {
                mean: *mean,
                variance: *variance,
            },
            PriorSection::Laplace { rate } => ScalarPenalty::Laplace { rate: *rate },
            PriorSection::BernoulliGaussian {
                activity,
                slab_variance,
                map_spike_variance,
            } => ScalarPenalty::BernoulliGaussian {
                activity: *activity,
                slab_variance: *slab_variance,
                map_spike_variance: *map_spike_variance,
            },
        }
    }

    pub fn matrix_kind(&self) -> MatrixKind {
        match &self.problem.matrix {
            MatrixSection::IidGaussian => MatrixKind::IidGaussian,
            MatrixSection::RowOrthogonal => MatrixKind::RowOrthogonal,
            MatrixSection::HaarSpectrum { singular_values } => {
                MatrixKind::HaarSpectrum(singular_values.clone())
            }
        }
    }

    /// Dimension of the solver's variable: `n` for regression, `n + m`
    /// for the constrained GLM formulation.
    pub fn solver_dim(&self) -> usize {
        match self.problem.class {
            ProblemClass::Slr => self.problem.n,
            ProblemClass::GlmProbit => self.problem.n + self.problem.m,
        }
    }

    fn diagonalizer(&self) -> Diagonalizer {
        let name = self.gec.diagonalizer.unwrap_or(match self.problem.class {
            ProblemClass::Slr => DiagonalizerName::Uniform,
            ProblemClass::GlmProbit => DiagonalizerName::Block,
        });
        match name {
            DiagonalizerName::Vector => Diagonalizer::Vector,
            DiagonalizerName::Uniform => Diagonalizer::Uniform,
            DiagonalizerName::Block => {
                Diagonalizer::Block(vec![self.problem.n, self.problem.m])
            }
        }
    }

    /// The solver configuration shared by every seed.
    pub fn gec_config(&self) -> anyhow::Result<GecConfig> {
        let mode = match self.gec.mode {
            ModeName::Map => GecMode::Map,
            ModeName::Mmse => GecMode::Mmse,
        };
        let mut config = GecConfig::new(mode, self.diagonalizer());
        config.schedule = match self.gec.schedule {
            ScheduleName::Adaptive => Schedule::Adaptive,
            ScheduleName::FrozenGamma => Schedule::FrozenGamma,
            ScheduleName::TwoStage => Schedule::TwoStage,
        };
        if let Some(iters) = self.gec.max_iters {
            config.max_iters = iters;
        }
        if let Some(tol) = self.gec.fixed_point_tol {
            config.fixed_point_tol = tol;
        }
        if let Some(floor) = self.gec.gamma_floor {
            config.gamma_floor = floor;
        }
        if let Some(damping) = self.gec.damping {
            config.damping = damping;
        }
        if let Some(g0) = self.gec.init_gamma {
            let dim = self.solver_dim();
            let init = PrecisionVec::uniform(dim, g0)
                .map_err(|e| anyhow::anyhow!("gec.init_gamma: {e}"))?;
            config.init_gamma1 = Some(init.clone());
            config.init_gamma2 = Some(init);
        }
        Ok(config)
    }
}

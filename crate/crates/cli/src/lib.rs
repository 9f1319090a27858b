//! Named, reproducible experiments: each builds a model, certifies the
//! conditions its guarantee needs, schedules and runs gradient descent, and
//! validates the guaranteed bound. Results are written as JSON and CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use proxyopt_core::certify::CertReport;
use proxyopt_core::optimizer::{BoundReport, TheoremSchedule};

pub mod experiments;

use experiments::{Context, Outcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment `{0}` (see `proxyopt list`)")]
    UnknownExperiment(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] proxyopt_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownExperiment(_) => EXIT_UNKNOWN_EXPERIMENT,
            _ => EXIT_ERROR,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERT_FAILURE: i32 = 1;
pub const EXIT_BOUND_VIOLATION: i32 = 2;
pub const EXIT_UNKNOWN_EXPERIMENT: i32 = 3;
pub const EXIT_ERROR: i32 = 4;

/// One registry entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub default_eps: f64,
}

/// Registered experiments, in listing order.
pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "quadratic_pl",
        description: "½‖w‖² under the proxy-PL schedule (sanity check)",
        default_eps: 0.1,
    },
    ExperimentInfo {
        name: "leaky_neuron_pl",
        description: "leaky-ReLU neuron, PL constant λ s_min(X)² c_σ²",
        default_eps: 1e-3,
    },
    ExperimentInfo {
        name: "deep_linear_pl",
        description: "deep linear network, PL constant Lτ^(2L−2)/‖(XXᵀ)⁻¹X‖_F² with τ monitored",
        default_eps: 1e-3,
    },
    ExperimentInfo {
        name: "smooth_leaky_margin_pl",
        description: "one-hidden-layer smoothed leaky ReLU net, surrogate-loss proxy PL via a margin vector",
        default_eps: 0.25,
    },
    ExperimentInfo {
        name: "single_relu_proxy_convexity",
        description: "single ReLU neuron, proxy convexity with a Lipschitz loss",
        default_eps: 0.05,
    },
    ExperimentInfo {
        name: "ntk_selfbound",
        description: "width-512 ReLU net near initialization, self-bounding logistic loss",
        default_eps: 0.05,
    },
];

pub fn list_experiments() -> &'static [ExperimentInfo] {
    EXPERIMENTS
}

pub fn lookup(name: &str) -> Result<&'static ExperimentInfo> {
    EXPERIMENTS
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::UnknownExperiment(name.to_string()))
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Experiment configuration, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    /// Target accuracy; the experiment's default when absent.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed: 0,
            eps: None,
            overrides: BTreeMap::new(),
            out_dir: default_out_dir(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_override(mut self, key: &str, value: f64) -> Self {
        self.overrides.insert(key.to_string(), value);
        self
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = dir.into();
        self
    }

    /// The registered experiment and the accuracy to use.
    pub fn resolve(&self) -> Result<(&'static ExperimentInfo, f64)> {
        let info = lookup(&self.experiment)?;
        let eps = self.eps.unwrap_or(info.default_eps);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(CliError::Config(format!("eps must be positive, got {eps}")));
        }
        Ok((info, eps))
    }
}

/// A certification result and whether it decides the exit code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertEntry {
    #[serde(flatten)]
    pub report: CertReport,
    /// Advisory checks are reported but never fail the run.
    pub gating: bool,
}

impl CertEntry {
    pub fn gating(report: CertReport) -> Self {
        Self { report, gating: true }
    }

    pub fn advisory(report: CertReport) -> Self {
        Self { report, gating: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub eps: f64,
    pub overrides: BTreeMap<String, f64>,
    pub schedule: TheoremSchedule,
    pub cert_reports: Vec<CertEntry>,
    pub bound: BoundReport,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub pass: bool,
    pub exit_code: i32,
    pub artifacts: Vec<String>,
    pub runtime_ms: u64,
}

/// Worst outcome among the reports: a violated bound outranks a failed
/// gating certificate.
pub fn exit_code_for(certs: &[CertEntry], bound: Option<&BoundReport>) -> i32 {
    if bound.is_some_and(|b| !b.pass) {
        EXIT_BOUND_VIOLATION
    } else if certs.iter().any(|c| c.gating && !c.report.pass) {
        EXIT_CERT_FAILURE
    } else {
        EXIT_OK
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CERTS_FILE: &str = "certs.json";
pub const DATASET_FILE: &str = "dataset.csv";
pub const DATASET_META_FILE: &str = "dataset.meta.json";

/// Run an experiment and write its artifacts to `cfg.out_dir`.
///
/// Nothing is written when the configuration is rejected.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (info, eps) = cfg.resolve()?;
    let ctx = Context::new(info.name, cfg.seed, eps, &cfg.overrides)?;
    let start = Instant::now();
    let outcome = experiments::run(info.name, &ctx)?;
    let runtime_ms = start.elapsed().as_millis() as u64;
    write_outcome(cfg, info, eps, outcome, runtime_ms)
}

fn write_outcome(
    cfg: &ExperimentConfig,
    info: &ExperimentInfo,
    eps: f64,
    outcome: Outcome,
    runtime_ms: u64,
) -> Result<ExperimentReport> {
    let Outcome {
        schedule,
        certs,
        bound,
        trajectory,
        dataset,
        metrics,
        notes,
    } = outcome;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut artifacts = vec![REPORT_FILE.to_string(), TRAJECTORY_FILE.to_string(), CERTS_FILE.to_string()];
    trajectory.write_csv(fs::File::create(cfg.out_dir.join(TRAJECTORY_FILE))?)?;
    fs::write(cfg.out_dir.join(CERTS_FILE), serde_json::to_string_pretty(&certs)? + "\n")?;
    if let Some(ds) = &dataset {
        ds.write_csv(fs::File::create(cfg.out_dir.join(DATASET_FILE))?)?;
        ds.write_meta_json(fs::File::create(cfg.out_dir.join(DATASET_META_FILE))?)?;
        artifacts.push(DATASET_FILE.to_string());
        artifacts.push(DATASET_META_FILE.to_string());
    }
    let exit_code = exit_code_for(&certs, Some(&bound));
    let report = ExperimentReport {
        experiment: info.name.to_string(),
        seed: cfg.seed,
        eps,
        overrides: cfg.overrides.clone(),
        schedule,
        cert_reports: certs,
        bound,
        metrics,
        notes,
        pass: exit_code == EXIT_OK,
        exit_code,
        artifacts,
        runtime_ms,
    };
    fs::write(cfg.out_dir.join(REPORT_FILE), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

/// Certification only: check an experiment's conditions on `points` sampled
/// points without running gradient descent.
pub fn certify_experiment(cfg: &ExperimentConfig, points: usize) -> Result<Vec<CertEntry>> {
    let (info, eps) = cfg.resolve()?;
    if points == 0 {
        return Err(CliError::Config("--points must be at least 1".into()));
    }
    let ctx = Context::new(info.name, cfg.seed, eps, &cfg.overrides)?;
    experiments::certify(info.name, &ctx, points)
}

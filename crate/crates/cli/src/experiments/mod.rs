//! The registered experiments and the plumbing they share.

use std::collections::BTreeMap;

use proxyopt_core::certify::{sample_points, CertReport, SamplePolicy, WorstPoint};
use proxyopt_core::models::data::{gaussian_vec, rng_from_seed};
use proxyopt_core::models::Dataset;
use proxyopt_core::optimizer::{BoundReport, StepView, TheoremSchedule, Trajectory};
use proxyopt_core::param::norm_sq;
use proxyopt_core::ParamVector;

use crate::{CertEntry, CliError, Result};

mod deep_linear;
mod leaky;
mod margin;
mod ntk;
mod quadratic;
mod single_relu;

/// Seed, accuracy and validated overrides for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub eps: f64,
    overrides: BTreeMap<String, f64>,
}

impl Context {
    /// Rejects override keys the experiment does not understand.
    pub fn new(name: &str, seed: u64, eps: f64, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed = override_keys(name)?;
        for (key, value) in overrides {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown override `{key}` for {name} (allowed: {})",
                    allowed.join(", ")
                )));
            }
            if !value.is_finite() {
                return Err(CliError::Config(format!("override `{key}` must be finite")));
            }
        }
        Ok(Self {
            seed,
            eps,
            overrides: overrides.clone(),
        })
    }

    pub fn get(&self, key: &str, default: f64) -> f64 {
        self.overrides.get(key).copied().unwrap_or(default)
    }

    pub fn get_opt(&self, key: &str) -> Option<f64> {
        self.overrides.get(key).copied()
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.overrides.get(key) {
            None => Ok(default),
            Some(v) if *v >= 1.0 && v.fract() == 0.0 && *v <= 1e9 => Ok(*v as usize),
            Some(v) => Err(CliError::Config(format!("override `{key}` must be a positive integer, got {v}"))),
        }
    }

    pub fn get_positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Config(format!("override `{key}` must be positive, got {v}")))
        }
    }

    /// Independent seed for one random stream of the experiment.
    pub fn sub_seed(&self, stream: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream)
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub schedule: TheoremSchedule,
    pub certs: Vec<CertEntry>,
    pub bound: BoundReport,
    pub trajectory: Trajectory,
    pub dataset: Option<Dataset>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

pub fn override_keys(name: &str) -> Result<&'static [&'static str]> {
    Ok(match name {
        "quadratic_pl" => quadratic::KEYS,
        "leaky_neuron_pl" => leaky::KEYS,
        "deep_linear_pl" => deep_linear::KEYS,
        "smooth_leaky_margin_pl" => margin::KEYS,
        "single_relu_proxy_convexity" => single_relu::KEYS,
        "ntk_selfbound" => ntk::KEYS,
        _ => return Err(CliError::UnknownExperiment(name.to_string())),
    })
}

pub fn run(name: &str, ctx: &Context) -> Result<Outcome> {
    match name {
        "quadratic_pl" => quadratic::run(ctx),
        "leaky_neuron_pl" => leaky::run(ctx),
        "deep_linear_pl" => deep_linear::run(ctx),
        "smooth_leaky_margin_pl" => margin::run(ctx),
        "single_relu_proxy_convexity" => single_relu::run(ctx),
        "ntk_selfbound" => ntk::run(ctx),
        _ => Err(CliError::UnknownExperiment(name.to_string())),
    }
}

pub fn certify(name: &str, ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    match name {
        "quadratic_pl" => quadratic::certify(ctx, points),
        "leaky_neuron_pl" => leaky::certify(ctx, points),
        "deep_linear_pl" => deep_linear::certify(ctx, points),
        "smooth_leaky_margin_pl" => margin::certify(ctx, points),
        "single_relu_proxy_convexity" => single_relu::certify(ctx, points),
        "ntk_selfbound" => ntk::certify(ctx, points),
        _ => Err(CliError::UnknownExperiment(name.to_string())),
    }
}

/// Running minimum of a slack over every step of a run, for conditions
/// checked too often to keep each point.
#[derive(Debug, Clone)]
pub(crate) struct RunningCert {
    id: &'static str,
    count: usize,
    worst: Option<(f64, WorstPoint)>,
}

impl RunningCert {
    pub(crate) fn new(id: &'static str) -> Self {
        Self {
            id,
            count: 0,
            worst: None,
        }
    }

    pub(crate) fn push(&mut self, slack: f64, point: impl FnOnce() -> WorstPoint) {
        self.count += 1;
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if self.worst.as_ref().is_none_or(|(w, _)| slack < *w) {
            self.worst = Some((slack, point()));
        }
    }

    pub(crate) fn finish(self) -> Result<CertReport> {
        let mut report = CertReport::from_slacks(self.id, self.worst)?;
        report.points_checked = self.count;
        Ok(report)
    }
}

/// Descent-inequality slack `f(w_t) − η(1 − ηL₂/2)‖∇f(w_t)‖² − f(w_{t+1})`
/// at every step of a run.
#[derive(Debug, Clone)]
pub(crate) struct DescentMonitor {
    eta: f64,
    l2: f64,
    prev: Option<(u64, f64, f64)>,
    cert: RunningCert,
}

impl DescentMonitor {
    pub(crate) fn new(eta: f64, l2: f64) -> Self {
        Self {
            eta,
            l2,
            prev: None,
            cert: RunningCert::new("descent_inequality"),
        }
    }

    pub(crate) fn observe(&mut self, s: &StepView<'_>) {
        if let Some((t, f, g2)) = self.prev {
            let slack = f - self.eta * (1.0 - 0.5 * self.eta * self.l2) * g2 - s.f;
            self.cert.push(slack, || WorstPoint::Scalar(t as f64));
        }
        self.prev = Some((s.t, s.f, norm_sq(s.gradient)));
    }

    pub(crate) fn finish(self) -> Result<CertReport> {
        self.cert.finish()
    }
}

/// Kept iterates of a run, at most `limit` of them, evenly thinned.
pub(crate) fn kept_iterates(traj: &Trajectory, limit: usize) -> Vec<ParamVector> {
    let all: Vec<ParamVector> = traj.iterates().map(|(_, w)| w.clone()).collect();
    if all.len() <= limit {
        return all;
    }
    (0..limit).map(|k| all[k * all.len() / limit].clone()).collect()
}

/// `anchors` followed by `per_anchor` perturbations of each.
pub(crate) fn with_perturbations(anchors: &[ParamVector], per_anchor: usize, seed: u64) -> Result<Vec<ParamVector>> {
    let dim = anchors.first().map_or(0, |w| w.dim());
    Ok(sample_points(anchors, dim, &SamplePolicy::new(per_anchor, 0, 0.0, seed))?)
}

/// Exactly `count` points for certification-only runs: the anchors, their
/// perturbations, then fresh Gaussian points of scale `fresh_sd`.
pub(crate) fn certification_points(
    anchors: &[ParamVector],
    count: usize,
    fresh_sd: f64,
    seed: u64,
) -> Result<Vec<ParamVector>> {
    let dim = anchors[0].dim();
    let rest = count.saturating_sub(anchors.len());
    let per_anchor = rest / 2 / anchors.len();
    let fresh = rest - per_anchor * anchors.len();
    let mut points = sample_points(anchors, dim, &SamplePolicy::new(per_anchor, fresh, fresh_sd, seed))?;
    points.truncate(count);
    Ok(points)
}

pub(crate) fn gaussian_point(dim: usize, sd: f64, seed: u64) -> Result<ParamVector> {
    Ok(ParamVector::new(gaussian_vec(&mut rng_from_seed(seed), dim, sd))?)
}

pub(crate) fn metrics<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

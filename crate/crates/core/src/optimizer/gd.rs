use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::param::{norm, ParamVector};

/// Fixed-step full-batch gradient descent configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub eta: f64,
    /// Number of iterates `w_0 … w_{T−1}` visited.
    pub iterations: u64,
    /// Record scalar statistics every k-th step (first and last are always kept).
    pub record_every: u64,
    /// Keep the parameter vector every k-th step (first and last are always kept).
    pub iterate_every: u64,
}

impl GdConfig {
    pub fn new(eta: f64, iterations: u64) -> Result<Self> {
        let cfg = Self {
            eta,
            iterations,
            record_every: 1,
            iterate_every: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Statistics every step up to 10⁴ steps, thinned to about 10⁴ rows
    /// beyond that; at most about `max_iterates` parameter snapshots.
    pub fn thinned(eta: f64, iterations: u64, max_iterates: u64) -> Result<Self> {
        let mut cfg = Self::new(eta, iterations)?;
        cfg.record_every = iterations.div_ceil(10_000).max(1);
        cfg.iterate_every = iterations.div_ceil(max_iterates.max(1)).max(1);
        Ok(cfg)
    }

    pub fn with_record_every(mut self, k: u64) -> Self {
        self.record_every = k;
        self
    }

    pub fn with_iterate_every(mut self, k: u64) -> Self {
        self.iterate_every = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Precondition(format!("step size must be positive, got {}", self.eta)));
        }
        if self.iterations == 0 {
            return Err(Error::Precondition("iteration count must be at least 1".into()));
        }
        if self.record_every == 0 || self.iterate_every == 0 {
            return Err(Error::Precondition("recording strides must be positive".into()));
        }
        Ok(())
    }

    fn records(&self, t: u64) -> bool {
        t.is_multiple_of(self.record_every) || t + 1 == self.iterations
    }

    fn keeps_iterate(&self, t: u64) -> bool {
        t.is_multiple_of(self.iterate_every) || t + 1 == self.iterations
    }
}

/// One recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: u64,
    pub f: f64,
    pub grad_norm: f64,
    pub g: Option<f64>,
    pub w: Option<ParamVector>,
}

/// Recorded gradient-descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub eta: f64,
    pub iterations: u64,
    pub points: Vec<TrajectoryPoint>,
    /// `(t, g(w_t))` minimizing `g` over every step `t < T`, not only recorded ones.
    pub exact_best_g: Option<(u64, f64)>,
}

impl Trajectory {
    /// Build from already-computed points, e.g. for tests or imported runs.
    pub fn from_points(eta: f64, points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.windows(2).any(|p| p[0].t >= p[1].t) {
            return Err(Error::Contract("trajectory steps must be strictly increasing".into()));
        }
        if points.iter().any(|p| !(p.grad_norm >= 0.0)) {
            return Err(Error::Contract("gradient norms must be non-negative".into()));
        }
        let iterations = points.last().map_or(0, |p| p.t + 1);
        Ok(Self {
            eta,
            iterations,
            points,
            exact_best_g: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn f_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.f).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.grad_norm).collect()
    }

    /// Recorded proxy values, when every recorded step has one.
    pub fn g_values(&self) -> Option<Vec<f64>> {
        self.points.iter().map(|p| p.g).collect()
    }

    /// Kept `(t, w_t)` pairs.
    pub fn iterates(&self) -> impl Iterator<Item = (u64, &ParamVector)> {
        self.points.iter().filter_map(|p| p.w.as_ref().map(|w| (p.t, w)))
    }

    pub fn first(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory is non-empty")
    }

    /// CSV with columns `t,f,grad_norm,g`; `g` is empty when absent.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            t: u64,
            f: f64,
            grad_norm: f64,
            g: Option<f64>,
        }
        let mut wtr = csv::Writer::from_writer(out);
        for p in &self.points {
            wtr.serialize(Row {
                t: p.t,
                f: p.f,
                grad_norm: p.grad_norm,
                g: p.g,
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// What an observer sees at step `t`, before the update to `w_{t+1}`.
#[derive(Debug)]
pub struct StepView<'a> {
    pub t: u64,
    pub w: &'a [f64],
    pub f: f64,
    pub gradient: &'a [f64],
    pub g: Option<f64>,
}

/// `w_{t+1} = w_t − η∇f(w_t)` for `t = 0 … T−2`, recording `w_0 … w_{T−1}`.
pub fn run_gd<O: Objective + ?Sized>(obj: &O, w0: &ParamVector, cfg: &GdConfig) -> Result<Trajectory> {
    run_gd_observed(obj, w0, cfg, |_| {})
}

/// [`run_gd`] that also hands every step (recorded or not) to `observer`.
pub fn run_gd_observed<O, F>(obj: &O, w0: &ParamVector, cfg: &GdConfig, mut observer: F) -> Result<Trajectory>
where
    O: Objective + ?Sized,
    F: FnMut(&StepView<'_>),
{
    cfg.validate()?;
    if w0.dim() != obj.dim() {
        return Err(Error::Dimension {
            expected: obj.dim(),
            got: w0.dim(),
        });
    }
    let mut w = w0.to_vec();
    let mut points = Vec::new();
    let mut best: Option<(u64, f64)> = None;
    for t in 0..cfg.iterations {
        let eval = obj.evaluate(&w);
        if !eval.value.is_finite() || eval.gradient.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: t });
        }
        if let Some(g) = eval.proxy_g {
            if best.is_none_or(|(_, b)| g < b) {
                best = Some((t, g));
            }
        }
        observer(&StepView {
            t,
            w: &w,
            f: eval.value,
            gradient: &eval.gradient,
            g: eval.proxy_g,
        });
        // A kept iterate always gets a statistics row as well.
        let keep = cfg.keeps_iterate(t);
        if keep || cfg.records(t) {
            points.push(TrajectoryPoint {
                t,
                f: eval.value,
                grad_norm: norm(&eval.gradient),
                g: eval.proxy_g,
                w: keep.then(|| ParamVector::new(w.clone())).transpose()?,
            });
        }
        if t + 1 < cfg.iterations {
            for (wi, gi) in w.iter_mut().zip(&eval.gradient) {
                *wi -= cfg.eta * gi;
            }
        }
    }
    Ok(Trajectory {
        eta: cfg.eta,
        iterations: cfg.iterations,
        points,
        exact_best_g: best,
    })
}

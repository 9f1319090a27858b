//! The differentiable-objective abstraction.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::param::{norm, ParamVector};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Value, gradient and (optionally) proxy value at one point, computed together.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub proxy_g: Option<f64>,
}

/// A differentiable scalar function of a flat parameter vector, optionally
/// carrying proxy evaluators `g` and `h`.
///
/// Implementations are immutable after construction and shared freely
/// across threads.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    fn gradient(&self, w: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        (self.value(w), self.gradient(w))
    }

    fn proxy_g(&self, _w: &[f64]) -> Option<f64> {
        None
    }

    fn proxy_h(&self, _v: &[f64]) -> Option<f64> {
        None
    }

    fn has_proxy_g(&self) -> bool {
        false
    }

    /// Everything gradient descent needs at one step. Models override this
    /// to share work between the loss, its gradient and the proxy.
    fn evaluate(&self, w: &[f64]) -> Evaluation {
        let (value, gradient) = self.value_and_gradient(w);
        Evaluation {
            value,
            gradient,
            proxy_g: self.proxy_g(w),
        }
    }

    fn name(&self) -> &str;

    /// Construction parameters, for reports.
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
}

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An objective assembled from closures.
pub struct FnObjective {
    name: String,
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
    proxy_g: Option<ScalarFn>,
    proxy_h: Option<ScalarFn>,
}

impl FnObjective {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "objective dimension must be positive");
        Self {
            name: name.into(),
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            proxy_g: None,
            proxy_h: None,
        }
    }

    pub fn with_proxy_g(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.proxy_g = Some(Box::new(g));
        self
    }

    pub fn with_proxy_h(mut self, h: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.proxy_h = Some(Box::new(h));
        self
    }
}

impl fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        (self.value)(w)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        (self.gradient)(w)
    }

    fn proxy_g(&self, w: &[f64]) -> Option<f64> {
        self.proxy_g.as_ref().map(|g| g(w))
    }

    fn proxy_h(&self, v: &[f64]) -> Option<f64> {
        self.proxy_h.as_ref().map(|h| h(v))
    }

    fn has_proxy_g(&self) -> bool {
        self.proxy_g.is_some()
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// `f(w) = ½‖w‖²` with `g = h = f`.
pub fn half_squared_norm(dim: usize) -> FnObjective {
    let half_sq = |w: &[f64]| 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    FnObjective::new("half_squared_norm", dim, half_sq, |w: &[f64]| w.to_vec())
        .with_proxy_g(half_sq)
        .with_proxy_h(half_sq)
}

/// Parameters of a proxy PL claim `‖∇f(w)‖^α ≥ ½μ(g(w) − ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProxyPlParams {
    pub xi: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl ProxyPlParams {
    pub fn new(xi: f64, alpha: f64, mu: f64) -> Result<Self> {
        if !xi.is_finite() {
            return Err(Error::Precondition("xi must be finite".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Precondition(format!("alpha must be positive, got {alpha}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Precondition(format!("mu must be positive, got {mu}")));
        }
        Ok(Self { xi, alpha, mu })
    }
}

/// Central differences `(f(w + s·eᵢ) − f(w − s·eᵢ)) / 2s` per coordinate.
pub fn finite_diff_gradient<O: Objective + ?Sized>(
    obj: &O,
    w: &ParamVector,
    step: f64,
) -> Result<ParamVector> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Precondition("finite-difference step must be positive".into()));
    }
    if w.dim() != obj.dim() {
        return Err(Error::Dimension {
            expected: obj.dim(),
            got: w.dim(),
        });
    }
    let mut probe = w.to_vec();
    let mut grad = Vec::with_capacity(w.dim());
    for i in 0..w.dim() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = obj.value(&probe);
        probe[i] = orig - step;
        let minus = obj.value(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite { coordinate: i });
        }
        grad.push((plus - minus) / (2.0 * step));
    }
    ParamVector::new(grad)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute difference when both are below `floor`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = norm(&crate::param::sub(a, b));
    let scale = norm(a).max(norm(b));
    if scale < floor {
        diff
    } else {
        diff / scale
    }
}

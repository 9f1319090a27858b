//! Step-by-step checks of the inequalities behind the convergence guarantees.

use crate::param::{dist_sq, dot, norm_sq};

use super::gd::StepView;

/// One full gradient-descent step, kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub w: Vec<f64>,
    pub f: f64,
    pub gradient: Vec<f64>,
}

impl From<&StepView<'_>> for StepRecord {
    fn from(s: &StepView<'_>) -> Self {
        Self {
            w: s.w.to_vec(),
            f: s.f,
            gradient: s.gradient.to_vec(),
        }
    }
}

/// `min_t f(w_t) − η(1 − ηL₂/2)‖∇f(w_t)‖² − f(w_{t+1})`, the slack in the
/// descent inequality for an `L₂`-smooth objective.
pub fn descent_min_slack(steps: &[StepRecord], eta: f64, l2: f64) -> f64 {
    steps
        .windows(2)
        .map(|s| s[0].f - eta * (1.0 - 0.5 * eta * l2) * norm_sq(&s[0].gradient) - s[1].f)
        .fold(f64::INFINITY, f64::min)
}

/// `2f(w₀)/(ηT) − (1/T) Σ_{t<T} ‖∇f(w_t)‖²` over the recorded steps, with
/// `f ≥ 0`.
pub fn telescoping_slack(steps: &[StepRecord], eta: f64) -> f64 {
    let t = steps.len() as f64;
    let avg = steps.iter().map(|s| norm_sq(&s.gradient)).sum::<f64>() / t;
    2.0 * steps[0].f / (eta * t) - avg
}

/// Largest absolute deviation from
/// `‖w_t − v‖² − ‖w_{t+1} − v‖² = 2η⟨∇f(w_t), w_t − v⟩ − η²‖∇f(w_t)‖²`,
/// relative to `max(1, ‖w_t − v‖²)`.
pub fn distance_identity_max_error(steps: &[StepRecord], eta: f64, v: &[f64]) -> f64 {
    steps
        .windows(2)
        .map(|s| {
            let before = dist_sq(&s[0].w, v);
            let lhs = before - dist_sq(&s[1].w, v);
            let diff: Vec<f64> = s[0].w.iter().zip(v).map(|(a, b)| a - b).collect();
            let rhs = 2.0 * eta * dot(&s[0].gradient, &diff) - eta * eta * norm_sq(&s[0].gradient);
            (lhs - rhs).abs() / before.max(1.0)
        })
        .fold(0.0, f64::max)
}

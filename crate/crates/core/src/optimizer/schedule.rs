//! Step sizes and iteration counts prescribed by the proxy-PL and
//! proxy-convexity convergence guarantees, and validation of their bounds.

use serde::{Deserialize, Serialize};

use super::gd::Trajectory;
use crate::error::{Error, Result};
use crate::objective::ProxyPlParams;

/// Slack tolerance when comparing a realized proxy value with its bound.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Which guarantee a schedule instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// Proxy PL + L₂-smooth: `min_{t<T} g(w_t) ≤ ξ + ε`.
    ProxyPl,
    /// Proxy convex + `‖∇f‖ ≤ L₁`: `min_{t<T} g(w_t) ≤ h(v) + ε`.
    ProxyConvexLipschitz,
    /// Proxy convex + `‖∇f‖² ≤ 2L₂g`: `min_{t<T} g(w_t) ≤ (1 + 2ηL₂)h(v) + ε`.
    ProxyConvexSelfBounding,
}

/// Inputs a schedule was built from; absent fields do not apply.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInputs {
    pub eps: f64,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub xi: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub f_w0: Option<f64>,
    pub dist_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSchedule {
    pub guarantee: Guarantee,
    pub eta: f64,
    pub iterations: u64,
    /// Known up front for the PL guarantee; filled by [`with_comparator`](Self::with_comparator)
    /// for the proxy-convex ones.
    pub predicted_bound: Option<f64>,
    pub inputs: ScheduleInputs,
    /// Set when a constant feeding the schedule was estimated from samples.
    pub empirical_constant: bool,
}

impl TheoremSchedule {
    /// The guaranteed value of `min_{t<T} g(w_t)` given the comparator value `h(v)`
    /// (ignored by the PL guarantee).
    pub fn bound_for(&self, comparator_value: f64) -> f64 {
        let eps = self.inputs.eps;
        match self.guarantee {
            Guarantee::ProxyPl => self.inputs.xi.unwrap_or(0.0) + eps,
            Guarantee::ProxyConvexLipschitz => comparator_value + eps,
            Guarantee::ProxyConvexSelfBounding => {
                let l2 = self.inputs.l2.expect("self-bounding schedule carries L2");
                (1.0 + 2.0 * self.eta * l2) * comparator_value + eps
            }
        }
    }

    pub fn with_comparator(mut self, comparator_value: f64) -> Self {
        self.predicted_bound = Some(self.bound_for(comparator_value));
        self
    }

    pub fn mark_empirical(mut self) -> Self {
        self.empirical_constant = true;
        self
    }
}

/// Round an iteration count up, absorbing floating-point noise just above an
/// integer, and floor it at one.
fn iteration_count(x: f64) -> u64 {
    if !(x > 0.0) {
        return 1;
    }
    let nearest = x.round();
    let t = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (t as u64).max(1)
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{name} must be positive, got {v}")))
    }
}

/// `T = ⌈2η⁻¹(με/2)^(−2/α) f(w₀)⌉` with `η < 1/L₂` (default `η = 1/(2L₂)`).
pub fn schedule_proxy_pl(
    f_w0: f64,
    pl: &ProxyPlParams,
    eps: f64,
    l2: f64,
    eta: Option<f64>,
) -> Result<TheoremSchedule> {
    if !(f_w0 >= 0.0) || !f_w0.is_finite() {
        return Err(Error::Precondition(format!("f(w0) must be non-negative, got {f_w0}")));
    }
    require_positive("eps", eps)?;
    require_positive("L2", l2)?;
    let eta = match eta {
        Some(e) => {
            require_positive("eta", e)?;
            if e * l2 >= 1.0 {
                return Err(Error::Precondition(format!("eta = {e} must be below 1/L2 = {}", 1.0 / l2)));
            }
            e
        }
        None => 0.5 / l2,
    };
    let iterations = iteration_count(2.0 / eta * (pl.mu * eps / 2.0).powf(-2.0 / pl.alpha) * f_w0);
    Ok(TheoremSchedule {
        guarantee: Guarantee::ProxyPl,
        eta,
        iterations,
        predicted_bound: Some(pl.xi + eps),
        inputs: ScheduleInputs {
            eps,
            mu: Some(pl.mu),
            alpha: Some(pl.alpha),
            xi: Some(pl.xi),
            l2: Some(l2),
            f_w0: Some(f_w0),
            ..Default::default()
        },
        empirical_constant: false,
    })
}

/// `η = ε/L₁²`, `T = ⌈‖w₀ − v‖²/(ηε)⌉`.
pub fn schedule_proxy_convex_lipschitz(eps: f64, l1: f64, dist_sq: f64) -> Result<TheoremSchedule> {
    require_positive("eps", eps)?;
    require_positive("L1", l1)?;
    if !(dist_sq >= 0.0) || !dist_sq.is_finite() {
        return Err(Error::Precondition(format!("squared distance must be non-negative, got {dist_sq}")));
    }
    let eta = eps / (l1 * l1);
    Ok(TheoremSchedule {
        guarantee: Guarantee::ProxyConvexLipschitz,
        eta,
        iterations: iteration_count(dist_sq / (eta * eps)),
        predicted_bound: None,
        inputs: ScheduleInputs {
            eps,
            l1: Some(l1),
            dist_sq: Some(dist_sq),
            ..Default::default()
        },
        empirical_constant: false,
    })
}

/// `η = 1/(2L₂)`, `T = ⌈‖w₀ − v‖²/(ηε)⌉`.
pub fn schedule_proxy_convex_self_bounding(eps: f64, l2: f64, dist_sq: f64) -> Result<TheoremSchedule> {
    require_positive("eps", eps)?;
    require_positive("L2", l2)?;
    if !(dist_sq >= 0.0) || !dist_sq.is_finite() {
        return Err(Error::Precondition(format!("squared distance must be non-negative, got {dist_sq}")));
    }
    let eta = 0.5 / l2;
    Ok(TheoremSchedule {
        guarantee: Guarantee::ProxyConvexSelfBounding,
        eta,
        iterations: iteration_count(dist_sq / (eta * eps)),
        predicted_bound: None,
        inputs: ScheduleInputs {
            eps,
            l2: Some(l2),
            dist_sq: Some(dist_sq),
            ..Default::default()
        },
        empirical_constant: false,
    })
}

/// `(t*, min g)` over the trajectory, earliest step on ties.
///
/// Uses the exact running minimum tracked during the run when present; it
/// covers every step, so it never exceeds the minimum over recorded rows.
pub fn best_proxy_value(traj: &Trajectory) -> Result<(u64, f64)> {
    if let Some(best) = traj.exact_best_g {
        return Ok(best);
    }
    let mut best: Option<(u64, f64)> = None;
    for p in &traj.points {
        let g = p
            .g
            .ok_or_else(|| Error::Contract(format!("no proxy value recorded at step {}", p.t)))?;
        if best.is_none_or(|(_, b)| g < b) {
            best = Some((p.t, g));
        }
    }
    best.ok_or_else(|| Error::Contract("empty trajectory".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub guarantee: Guarantee,
    pub t_best: u64,
    pub g_min: f64,
    pub comparator_value: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub empirical_constant: bool,
}

/// Compare the best proxy value along `traj` against the schedule's guarantee.
/// A violated bound is reported, not raised.
pub fn validate_bound(traj: &Trajectory, sched: &TheoremSchedule, comparator_value: f64) -> Result<BoundReport> {
    let (t_best, g_min) = best_proxy_value(traj)?;
    let bound = sched.bound_for(comparator_value);
    let slack = bound - g_min;
    Ok(BoundReport {
        guarantee: sched.guarantee,
        t_best,
        g_min,
        comparator_value,
        bound,
        slack,
        pass: slack >= -BOUND_TOLERANCE,
        empirical_constant: sched.empirical_constant,
    })
}

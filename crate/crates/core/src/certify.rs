//! Sample-based certifiers for the proxy conditions, and estimators for the
//! constants the guarantees need.
//!
//! A passing [`CertReport`] means no violation was found on the points
//! checked. Estimated suprema (`L₁`, `L₂`) are lower bounds on the true
//! constants.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::activation::{logistic_loss, logistic_loss_derivative};
use crate::models::data::rng_from_seed;
use crate::models::one_layer::NetworkObjective;
use crate::objective::{Objective, ProxyPlParams};
use crate::param::{dot, mean, norm, norm_sq, sub, ParamVector};

/// Default slack tolerance: a report passes when `min_slack ≥ −1e−9`.
pub const CERT_TOLERANCE: f64 = 1e-9;

/// Where the smallest slack was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorstPoint {
    Point(ParamVector),
    Pair(ParamVector, ParamVector),
    Scalar(f64),
}

/// Outcome of checking one condition over a batch of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub condition_id: String,
    pub points_checked: usize,
    pub min_slack: f64,
    pub pass: bool,
    pub fitted_constant: Option<f64>,
    pub worst_point: WorstPoint,
    #[serde(skip, default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    CERT_TOLERANCE
}

impl CertReport {
    /// Reduce per-point slacks to a report. A NaN slack is treated as the
    /// worst possible outcome.
    pub fn from_slacks<I>(condition_id: &str, slacks: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, WorstPoint)>,
    {
        let mut count = 0;
        let mut worst: Option<(f64, WorstPoint)> = None;
        for (s, p) in slacks {
            count += 1;
            let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
            if worst.as_ref().is_none_or(|(w, _)| s < *w) {
                worst = Some((s, p));
            }
        }
        let (min_slack, worst_point) =
            worst.ok_or_else(|| Error::Precondition(format!("{condition_id}: no points to check")))?;
        Ok(Self {
            condition_id: condition_id.to_string(),
            points_checked: count,
            min_slack,
            pass: min_slack >= -CERT_TOLERANCE,
            fitted_constant: None,
            worst_point,
            tolerance: CERT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.min_slack >= -tolerance;
        self
    }

    pub fn with_fitted_constant(mut self, c: Option<f64>) -> Self {
        self.fitted_constant = c;
        self
    }

    pub fn with_condition_id(mut self, id: &str) -> Self {
        self.condition_id = id.to_string();
        self
    }
}

fn check_dim<O: Objective + ?Sized>(obj: &O, w: &[f64]) -> Result<()> {
    if w.len() == obj.dim() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: obj.dim(),
            got: w.len(),
        })
    }
}

/// `min ⟨∇f(w), w − v⟩ − g(w) + h(v)` over `pairs`.
///
/// The fitted constant is the largest `c` for which `f` is `(c·g, h)`-proxy
/// convex on the sample, over pairs with `g(w) > 0`.
pub fn check_proxy_convexity<O, G, H>(obj: &O, g: G, h: H, pairs: &[(ParamVector, ParamVector)]) -> Result<CertReport>
where
    O: Objective + ?Sized,
    G: Fn(&[f64]) -> f64,
    H: Fn(&[f64]) -> f64,
{
    let mut ratio = f64::INFINITY;
    let mut slacks = Vec::with_capacity(pairs.len());
    for (w, v) in pairs {
        check_dim(obj, w)?;
        check_dim(obj, v)?;
        let inner = dot(&obj.gradient(w), &sub(w, v));
        let (gw, hv) = (g(w), h(v));
        if gw > 0.0 {
            ratio = ratio.min((inner + hv) / gw);
        }
        slacks.push((inner - gw + hv, WorstPoint::Pair(w.clone(), v.clone())));
    }
    let fitted = ratio.is_finite().then_some(ratio);
    Ok(CertReport::from_slacks("proxy_convexity", slacks)?.with_fitted_constant(fitted))
}

/// `min ‖∇f(w)‖^α − ½μ(g(w) − ξ)` over `points`.
pub fn check_proxy_pl<O, G>(obj: &O, g: G, pl: &ProxyPlParams, points: &[ParamVector]) -> Result<CertReport>
where
    O: Objective + ?Sized,
    G: Fn(&[f64]) -> f64,
{
    let mut slacks = Vec::with_capacity(points.len());
    let mut ratio = f64::INFINITY;
    for w in points {
        check_dim(obj, w)?;
        let lhs = norm(&obj.gradient(w)).powf(pl.alpha);
        let gap = g(w) - pl.xi;
        if gap > 1e-12 {
            ratio = ratio.min(2.0 * lhs / gap);
        }
        slacks.push((lhs - 0.5 * pl.mu * gap, WorstPoint::Point(w.clone())));
    }
    let fitted = ratio.is_finite().then_some(ratio);
    Ok(CertReport::from_slacks("proxy_pl", slacks)?.with_fitted_constant(fitted))
}

/// Largest `μ` the sample admits: `inf 2‖∇f(w)‖^α / (g(w) − ξ)` over points
/// with `g(w) > ξ + 1e−12`.
pub fn fit_pl_mu<O, G>(obj: &O, g: G, xi: f64, alpha: f64, points: &[ParamVector]) -> Result<f64>
where
    O: Objective + ?Sized,
    G: Fn(&[f64]) -> f64,
{
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("alpha must be positive, got {alpha}")));
    }
    let mut best = f64::INFINITY;
    for w in points {
        check_dim(obj, w)?;
        let gap = g(w) - xi;
        if gap > 1e-12 {
            best = best.min(2.0 * norm(&obj.gradient(w)).powf(alpha) / gap);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::DegenerateSample(format!(
            "no sampled point has g(w) > ξ + 1e−12 (ξ = {xi})"
        )))
    }
}

/// `max ‖∇f(w)‖` over `points`.
pub fn estimate_l1<O: Objective + ?Sized>(obj: &O, points: &[ParamVector]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Precondition("estimate_l1 needs at least one point".into()));
    }
    let mut best = 0.0f64;
    for w in points {
        check_dim(obj, w)?;
        best = best.max(norm(&obj.gradient(w)));
    }
    Ok(best)
}

/// `max ‖∇f(w) − ∇f(w′)‖ / ‖w − w′‖` over pairs; coincident pairs are skipped.
pub fn estimate_l2_smooth<O: Objective + ?Sized>(obj: &O, pairs: &[(ParamVector, ParamVector)]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for (w, v) in pairs {
        check_dim(obj, w)?;
        check_dim(obj, v)?;
        let dw = norm(&sub(w, v));
        if dw == 0.0 {
            continue;
        }
        let dg = norm(&sub(&obj.gradient(w), &obj.gradient(v)));
        best = Some(best.map_or(dg / dw, |b: f64| b.max(dg / dw)));
    }
    best.ok_or_else(|| Error::DegenerateSample("every pair is coincident".into()))
}

/// `min 2L₂ g(w) − ‖∇f(w)‖²` over `points`.
pub fn check_self_bounding<O, G>(obj: &O, g: G, l2: f64, points: &[ParamVector]) -> Result<CertReport>
where
    O: Objective + ?Sized,
    G: Fn(&[f64]) -> f64,
{
    if !(l2 > 0.0) {
        return Err(Error::Precondition(format!("L2 must be positive, got {l2}")));
    }
    let mut slacks = Vec::with_capacity(points.len());
    let mut ratio = 0.0f64;
    for w in points {
        check_dim(obj, w)?;
        let gw = g(w);
        if gw < 0.0 {
            return Err(Error::Contract(format!("self-bounding proxy is negative: g = {gw}")));
        }
        let grad_sq = norm_sq(&obj.gradient(w));
        if gw > 0.0 {
            ratio = ratio.max(grad_sq / (2.0 * gw));
        }
        slacks.push((2.0 * l2 * gw - grad_sq, WorstPoint::Point(w.clone())));
    }
    Ok(CertReport::from_slacks("self_bounding", slacks)?.with_fitted_constant(Some(ratio)))
}

/// Variational lower bound on the gradient norm along a unit direction `v`:
/// `lower = (1/n) Σ −ℓ′(yᵢNᵢ) · yᵢ⟨∇N(w; xᵢ), v⟩ = ⟨∇f(w), −v⟩ ≤ ‖∇f(w)‖`.
///
/// Returns `(lower, ‖∇f(w)‖)`.
pub fn margin_pl_lower_bound<N: NetworkObjective + ?Sized>(net: &N, v: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    check_dim(net, v)?;
    check_dim(net, w)?;
    if (norm(v) - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("direction must be a unit vector, ‖v‖ = {}", norm(v))));
    }
    let y = &net.data().y;
    let margins = net.margins(w);
    let dirs = net.directional_derivatives(w, v);
    let terms: Vec<f64> = (0..y.len())
        .map(|i| -logistic_loss_derivative(margins[i]) * y[i] * dirs[i])
        .collect();
    Ok((mean(&terms), norm(&net.gradient(w))))
}

/// Per-sample margin behaviour of a comparator direction at one `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginCertificate {
    pub v: ParamVector,
    /// `yᵢ⟨∇N(w; xᵢ), v⟩`.
    pub per_sample_margins: Vec<f64>,
    /// `min yᵢ⟨∇N(w; xᵢ), v⟩ / c_σ` over samples whose label agrees with the
    /// dataset's teacher (all samples when there is none).
    pub empirical_c: f64,
    /// Smallest `ξ ≥ 0` with `lower ≥ c_σ·c₁·(g(w) − ξ)`.
    pub xi_estimate: f64,
}

/// Margin certificate for direction `v` at `w`, with proxy-PL scale `c_σ·c₁`.
pub fn margin_certificate<N: NetworkObjective + ?Sized>(
    net: &N,
    v: &ParamVector,
    w: &[f64],
    c_sigma: f64,
    c1: f64,
) -> Result<MarginCertificate> {
    if !(c_sigma > 0.0 && c1 > 0.0) {
        return Err(Error::Precondition("c_sigma and c1 must be positive".into()));
    }
    let (lower, _) = margin_pl_lower_bound(net, v, w)?;
    let data = net.data();
    let dirs = net.directional_derivatives(w, v);
    let per_sample: Vec<f64> = dirs.iter().zip(&data.y).map(|(d, y)| y * d).collect();
    let clean: Vec<bool> = match data.teacher() {
        Some(u) => (0..data.n()).map(|i| data.y[i] * dot(data.x.row(i), u) > 0.0).collect(),
        None => vec![true; data.n()],
    };
    let empirical_c = per_sample
        .iter()
        .zip(&clean)
        .filter(|(_, c)| **c)
        .map(|(m, _)| m / c_sigma)
        .fold(f64::INFINITY, f64::min);
    let g = crate::models::one_layer::surrogate_from_margins(&net.margins(w));
    Ok(MarginCertificate {
        v: v.clone(),
        per_sample_margins: per_sample,
        empirical_c,
        xi_estimate: (g - lower / (c_sigma * c1)).max(0.0),
    })
}

/// `min ℓ(z) − ℓ′(z)²` over the grid, for the logistic loss; passes when the
/// minimum is non-negative.
pub fn logistic_selfbound_check(z_grid: &[f64]) -> Result<CertReport> {
    let slacks = z_grid.iter().map(|z| {
        let d = logistic_loss_derivative(*z);
        (logistic_loss(*z) - d * d, WorstPoint::Scalar(*z))
    });
    Ok(CertReport::from_slacks("logistic_self_bound", slacks)?.with_tolerance(0.0))
}

/// The smoothness-type constants a guarantee may need.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// `‖∇f(w)‖ ≤ L₁`.
    pub l1: Option<f64>,
    /// `∇f` is `L₂`-Lipschitz.
    pub l2_smooth: Option<f64>,
    /// `‖∇f(w)‖² ≤ 2L₂ g(w)`.
    pub l2_self: Option<f64>,
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("L1", self.l1), ("L2_smooth", self.l2_smooth), ("L2_self", self.l2_self)] {
            if let Some(c) = c {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Precondition(format!("{name} must be positive and finite, got {c}")));
                }
            }
        }
        Ok(())
    }
}

/// How many points to add around and beyond a set of anchor points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePolicy {
    /// Gaussian perturbations per anchor, of overall scale `0.1‖w‖`.
    pub perturbations: usize,
    /// Fresh Gaussian points.
    pub fresh: usize,
    /// Per-coordinate standard deviation of fresh points.
    pub fresh_sd: f64,
    pub seed: u64,
}

impl SamplePolicy {
    pub fn new(perturbations: usize, fresh: usize, fresh_sd: f64, seed: u64) -> Self {
        Self {
            perturbations,
            fresh,
            fresh_sd,
            seed,
        }
    }
}

/// Anchors, then their perturbations, then fresh points.
pub fn sample_points(anchors: &[ParamVector], dim: usize, policy: &SamplePolicy) -> Result<Vec<ParamVector>> {
    let mut rng = rng_from_seed(policy.seed);
    let mut out: Vec<ParamVector> = anchors.to_vec();
    for w in anchors {
        if w.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: w.dim(),
            });
        }
        let sd = 0.1 * w.norm() / (dim as f64).sqrt();
        for _ in 0..policy.perturbations {
            out.push(perturb(&mut rng, w, sd)?);
        }
    }
    for _ in 0..policy.fresh {
        out.push(perturb(&mut rng, &ParamVector::zeros(dim), policy.fresh_sd)?);
    }
    Ok(out)
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, w: &ParamVector, sd: f64) -> Result<ParamVector> {
    let v = w
        .iter()
        .map(|x| {
            let e: f64 = StandardNormal.sample(rng);
            x + sd * e
        })
        .collect();
    ParamVector::new(v)
}

/// Consecutive pairs `(pᵢ, pᵢ₊₁)`.
pub fn consecutive_pairs(points: &[ParamVector]) -> Vec<(ParamVector, ParamVector)> {
    points.windows(2).map(|p| (p[0].clone(), p[1].clone())).collect()
}

/// Every point paired with one fixed comparator.
pub fn pair_with(points: &[ParamVector], v: &ParamVector) -> Vec<(ParamVector, ParamVector)> {
    points.iter().map(|w| (w.clone(), v.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{half_squared_norm, FnObjective};

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn quad_1d() -> FnObjective {
        half_squared_norm(1)
    }

    #[test]
    fn convex_quadratic_is_self_proxy_convex() {
        let f = half_squared_norm(2);
        let g = |w: &[f64]| f.value(w);
        let r = check_proxy_convexity(&f, g, g, &[(pv(&[2.0, 0.0]), pv(&[1.0, 0.0]))]).unwrap();
        assert_eq!(r.min_slack, 0.5);
        assert!(r.pass);
        let r = check_proxy_convexity(&f, g, g, &[(pv(&[1.0, 3.0]), pv(&[1.0, 3.0]))]).unwrap();
        assert_eq!(r.min_slack, 0.0);
    }

    #[test]
    fn proxy_pl_tight_and_violated() {
        let f = quad_1d();
        let g = |w: &[f64]| f.value(w);
        let pts = [pv(&[1.0])];
        let r = check_proxy_pl(&f, g, &ProxyPlParams::new(0.0, 2.0, 4.0).unwrap(), &pts).unwrap();
        assert_eq!(r.min_slack, 0.0);
        assert!(r.pass);
        let r = check_proxy_pl(&f, g, &ProxyPlParams::new(0.0, 2.0, 5.0).unwrap(), &pts).unwrap();
        assert_eq!(r.min_slack, -0.25);
        assert!(!r.pass);
    }

    #[test]
    fn fitted_mu_quadratic() {
        let f = quad_1d();
        let g = |w: &[f64]| f.value(w);
        let pts = [pv(&[1.0]), pv(&[2.0]), pv(&[0.5])];
        assert_eq!(fit_pl_mu(&f, g, 0.0, 2.0, &pts).unwrap(), 4.0);
        assert!(matches!(
            fit_pl_mu(&f, g, 10.0, 2.0, &pts),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn fitted_mu_quartic_vanishes_near_zero() {
        // f = g = ½w⁴: 2·(2w³)²/(½w⁴) = 16w².
        let f = FnObjective::new("quartic", 1, |w| 0.5 * w[0].powi(4), |w| vec![2.0 * w[0].powi(3)]);
        let g = |w: &[f64]| f.value(w);
        let pts = [pv(&[0.1]), pv(&[0.01]), pv(&[0.003])];
        let mu = fit_pl_mu(&f, g, 0.0, 2.0, &pts).unwrap();
        assert!((mu / 1.44e-4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l1_and_l2_estimates() {
        let f = half_squared_norm(2);
        assert_eq!(estimate_l1(&f, &[pv(&[1.0, 0.0]), pv(&[0.0, 2.0])]).unwrap(), 2.0);
        let c = FnObjective::new("const", 2, |_| 3.0, |_| vec![0.0, 0.0]);
        assert_eq!(estimate_l1(&c, &[pv(&[1.0, 5.0])]).unwrap(), 0.0);
        let pairs = [(pv(&[1.0, 0.0]), pv(&[0.0, 2.0])), (pv(&[3.0, 3.0]), pv(&[-1.0, 0.5]))];
        assert!((estimate_l2_smooth(&f, &pairs).unwrap() - 1.0).abs() < 1e-15);
        let lin = FnObjective::new("linear", 2, |w| w[0] - 2.0 * w[1], |_| vec![1.0, -2.0]);
        assert_eq!(estimate_l2_smooth(&lin, &pairs).unwrap(), 0.0);
        let same = [(pv(&[1.0, 1.0]), pv(&[1.0, 1.0]))];
        assert!(matches!(estimate_l2_smooth(&f, &same), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn self_bounding_quadratic() {
        let f = quad_1d();
        let g = |w: &[f64]| f.value(w);
        let pts = [pv(&[1.0]), pv(&[-3.0]), pv(&[0.2])];
        let r = check_self_bounding(&f, g, 1.0, &pts).unwrap();
        assert_eq!(r.min_slack, 0.0);
        assert!(r.pass);
        assert!(!check_self_bounding(&f, g, 0.4, &pts).unwrap().pass);
        assert!(matches!(
            check_self_bounding(&f, |_| -1.0, 1.0, &pts),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn logistic_self_bound_values() {
        let r = logistic_selfbound_check(&[0.0]).unwrap();
        assert!((r.min_slack - (std::f64::consts::LN_2 - 0.25)).abs() < 1e-15);
        assert!(logistic_selfbound_check(&[50.0]).unwrap().pass);
        let grid: Vec<f64> = (0..10_000).map(|k| -20.0 + 40.0 * k as f64 / 9_999.0).collect();
        let r = logistic_selfbound_check(&grid).unwrap();
        assert!(r.pass);
        assert_eq!(r.points_checked, 10_000);
    }

    #[test]
    fn report_serialization_shape() {
        let f = quad_1d();
        let g = |w: &[f64]| f.value(w);
        let r = check_proxy_pl(&f, g, &ProxyPlParams::new(0.0, 2.0, 4.0).unwrap(), &[pv(&[1.0])]).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"condition_id":"proxy_pl","points_checked":1,"min_slack":0.0,"pass":true,"fitted_constant":4.0,"worst_point":[1.0]}"#
        );
        let back: CertReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_batches_are_rejected() {
        let f = quad_1d();
        assert!(check_proxy_pl(&f, |_| 0.0, &ProxyPlParams::new(0.0, 2.0, 1.0).unwrap(), &[]).is_err());
        assert!(estimate_l1(&f, &[]).is_err());
    }

    #[test]
    fn nan_slack_fails() {
        let r = CertReport::from_slacks("x", [(f64::NAN, WorstPoint::Scalar(0.0)), (1.0, WorstPoint::Scalar(1.0))]).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst_point, WorstPoint::Scalar(0.0));
    }

    #[test]
    fn sampler_layout() {
        let anchors = [pv(&[3.0, 4.0])];
        let pts = sample_points(&anchors, 2, &SamplePolicy::new(5, 3, 1.0, 7)).unwrap();
        assert_eq!(pts.len(), 1 + 5 + 3);
        assert_eq!(pts[0], anchors[0]);
        for p in &pts[1..6] {
            assert!(norm(&sub(p, &anchors[0])) < 2.0);
        }
        let again = sample_points(&anchors, 2, &SamplePolicy::new(5, 3, 1.0, 7)).unwrap();
        assert_eq!(pts, again);
    }
}

//! Wide one-hidden-layer ReLU net near initialization under the logistic
//! loss: self-bounding gradients and proxy convexity against a comparator
//! found by a reference pre-run.

use proxyopt_core::certify::{check_self_bounding, logistic_selfbound_check, CertReport, WorstPoint};
use proxyopt_core::models::activation::logistic_loss;
use proxyopt_core::models::{
    classification_error, gen_halfspace_classification, make_one_layer, normalize_rows, random_unit_vector,
    self_bounding_constant, ActivationSpec, HalfspaceDataConfig, NetProxy, NetworkObjective, NetworkShape,
    OneLayerNet,
};
use proxyopt_core::optimizer::{
    run_gd, run_gd_observed, schedule_proxy_convex_self_bounding, validate_bound, GdConfig,
};
use proxyopt_core::param::{dist_sq, dot, mean, norm_sq, sub};
use proxyopt_core::{Objective, ParamVector};

use super::{certification_points, kept_iterates, metrics, with_perturbations, Context, Outcome, RunningCert};
use crate::{CertEntry, Result};

pub const KEYS: &[&str] = &["n", "d", "m", "gamma", "prerun_steps", "grid_points"];

fn setup(ctx: &Context) -> Result<(OneLayerNet, ParamVector)> {
    let d = ctx.get_usize("d", 16)?;
    let raw = gen_halfspace_classification(&HalfspaceDataConfig {
        n: ctx.get_usize("n", 512)?,
        d,
        u_bar: random_unit_vector(d, ctx.sub_seed(1)),
        opt: 0.0,
        gamma: ctx.get_positive("gamma", 0.4)?,
        seed: ctx.sub_seed(2),
    })?;
    let data = normalize_rows(&raw)?;
    let shape = NetworkShape::new(ctx.get_usize("m", 512)?, d, ctx.sub_seed(3))?;
    let net = make_one_layer(&shape, &ActivationSpec::relu(), &data)?.with_proxy(NetProxy::Loss);
    let w0 = net.gaussian_init(ctx.sub_seed(4));
    Ok((net, w0))
}

fn logistic_grid(ctx: &Context) -> Result<CertReport> {
    let k = ctx.get_usize("grid_points", 10_000)?.max(2);
    let grid: Vec<f64> = (0..k).map(|i| -20.0 + 40.0 * i as f64 / (k - 1) as f64).collect();
    Ok(logistic_selfbound_check(&grid)?)
}

/// `⟨∇f(w), w − v⟩ − f(w) + (1/n) Σ ℓ(yᵢ⟨∇N(w; xᵢ), v⟩)`, non-negative by
/// convexity of `ℓ` and homogeneity of the ReLU.
fn linearized_slack(net: &OneLayerNet, w: &[f64], v: &[f64]) -> f64 {
    let (f, grad) = net.value_and_gradient(w);
    let y = &net.data().y;
    let lin: Vec<f64> = net
        .directional_derivatives(w, v)
        .iter()
        .zip(y)
        .map(|(dv, yi)| logistic_loss(yi * dv))
        .collect();
    dot(&grad, &sub(w, v)) - f + mean(&lin)
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let (net, w0) = setup(ctx)?;
    let l2 = self_bounding_constant(&net);
    let prerun_steps = ctx.get_usize("prerun_steps", 200)? as u64;
    let prerun = run_gd(&net, &w0, &GdConfig::new(0.5 / l2, prerun_steps)?.with_iterate_every(prerun_steps))?;
    let v = prerun.last().w.clone().expect("last iterate kept");
    let f_v = net.value(&v);
    let d0 = dist_sq(&w0, &v);
    let schedule = schedule_proxy_convex_self_bounding(ctx.eps, l2, d0)?.mark_empirical();

    let mut h = f_v;
    let mut self_bound = RunningCert::new("self_bounding_every_step");
    let cfg = GdConfig::thinned(schedule.eta, schedule.iterations, 200)?;
    let trajectory = run_gd_observed(&net, &w0, &cfg, |s| {
        h = h.max(s.f - dot(s.gradient, &sub(s.w, &v)));
        self_bound.push(2.0 * l2 * s.f - norm_sq(s.gradient), || WorstPoint::Scalar(s.t as f64));
    })?;
    let schedule = schedule.with_comparator(h);
    let bound = validate_bound(&trajectory, &schedule, h)?;

    let iterates = kept_iterates(&trajectory, 50);
    let points = with_perturbations(&iterates, 1, ctx.sub_seed(5))?;
    let self_points = check_self_bounding(&net, |w: &[f64]| net.value(w), l2, &points)?;
    let mut linear = RunningCert::new("linearized_proxy_convexity");
    for w in &iterates {
        linear.push(linearized_slack(&net, w, &v), || WorstPoint::Point(w.clone()));
    }
    let train_error_v = classification_error(&net, &v);
    let interpolates = CertReport::from_slacks("comparator_interpolates", [(-train_error_v, WorstPoint::Scalar(train_error_v))])?;
    Ok(Outcome {
        metrics: metrics([
            ("l2", l2),
            ("dist_sq", d0),
            ("f_comparator", f_v),
            ("h_comparator", h),
            ("comparator_train_error", train_error_v),
            ("relative_distance", (d0 / norm_sq(&w0)).sqrt()),
            ("final_f", trajectory.last().f),
            ("min_f", bound.g_min),
        ]),
        schedule,
        certs: vec![
            CertEntry::gating(logistic_grid(ctx)?),
            CertEntry::gating(self_points),
            CertEntry::gating(self_bound.finish()?),
            CertEntry::gating(linear.finish()?),
            CertEntry::advisory(interpolates),
        ],
        bound,
        trajectory,
        dataset: Some(NetworkObjective::data(&net).clone()),
        notes: vec![
            "the comparator v is the last iterate of a reference pre-run from the same initialization".to_string(),
            "h(v) is the smallest value making proxy convexity hold at v and at every step of the run; the bound is empirical-constant"
                .to_string(),
        ],
    })
}

pub fn certify(ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    let (net, w0) = setup(ctx)?;
    let l2 = self_bounding_constant(&net);
    let sd = 1.0 / (net.shape().d as f64).sqrt();
    let pts = certification_points(&[w0], points, sd, ctx.sub_seed(5))?;
    Ok(vec![
        CertEntry::gating(logistic_grid(ctx)?),
        CertEntry::gating(check_self_bounding(&net, |w: &[f64]| net.value(w), l2, &pts)?),
    ])
}

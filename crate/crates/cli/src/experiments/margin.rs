//! One-hidden-layer smoothed leaky ReLU net on margin-γ halfspace data:
//! proxy PL for the surrogate loss, powered by a fixed margin direction `v`.

use proxyopt_core::certify::{
    check_proxy_pl, consecutive_pairs, estimate_l2_smooth, margin_certificate, margin_pl_lower_bound, CertReport,
    WorstPoint,
};
use proxyopt_core::models::{
    build_margin_vector, classification_error, gen_halfspace_classification, make_one_layer, random_unit_vector,
    smoothness_upper_bound, surrogate_loss, ActivationSpec, Dataset, HalfspaceDataConfig, NetworkObjective, NetworkShape,
    OneLayerNet,
};
use proxyopt_core::optimizer::{run_gd_observed, schedule_proxy_pl, validate_bound, GdConfig};
use proxyopt_core::param::dot;
use proxyopt_core::{Objective, ParamVector, ProxyPlParams};

use super::{
    certification_points, kept_iterates, metrics, with_perturbations, Context, DescentMonitor, Outcome, RunningCert,
};
use crate::{CertEntry, CliError, Result};

pub const KEYS: &[&str] = &["n", "d", "m", "c_sigma", "beta", "gamma", "opt", "error_ceiling"];

struct Setup {
    data: Dataset,
    net: OneLayerNet,
    v: ParamVector,
    w0: ParamVector,
    c_sigma: f64,
    gamma: f64,
}

fn setup(ctx: &Context) -> Result<Setup> {
    let d = ctx.get_usize("d", 5)?;
    let c_sigma = ctx.get_positive("c_sigma", 0.2)?;
    let gamma = ctx.get_positive("gamma", 0.5)?;
    let u = random_unit_vector(d, ctx.sub_seed(1));
    let data = gen_halfspace_classification(&HalfspaceDataConfig {
        n: ctx.get_usize("n", 300)?,
        d,
        u_bar: u.clone(),
        opt: ctx.get("opt", 0.0),
        gamma,
        seed: ctx.sub_seed(2),
    })?;
    let shape = NetworkShape::new(ctx.get_usize("m", 32)?, d, ctx.sub_seed(3))?;
    let act = ActivationSpec::smooth_leaky(c_sigma, ctx.get_positive("beta", 0.1)?)?;
    let net = make_one_layer(&shape, &act, &data)?;
    let v = build_margin_vector(&shape, &u)?;
    let w0 = net.gaussian_init(ctx.sub_seed(4));
    Ok(Setup {
        data,
        net,
        v,
        w0,
        c_sigma,
        gamma,
    })
}

/// `(1/n) Σ 1(yᵢNᵢ ≤ 0)` from precomputed margins.
fn error_from_margins(margins: &[f64]) -> f64 {
    margins.iter().filter(|z| **z <= 0.0).count() as f64 / margins.len() as f64
}

/// Per-point `lower − c_σγ·g` and `‖∇f‖ − lower` at `points`.
fn margin_checks(net: &OneLayerNet, v: &ParamVector, scale: f64, points: &[ParamVector]) -> Result<[CertReport; 2]> {
    let mut margin = RunningCert::new("margin_lower_bound");
    let mut variational = RunningCert::new("variational_norm_bound");
    for w in points {
        let (lower, grad_norm) = margin_pl_lower_bound(net, v, w)?;
        margin.push(lower - scale * surrogate_loss(net, w), || WorstPoint::Point(w.clone()));
        variational.push(grad_norm - lower, || WorstPoint::Point(w.clone()));
    }
    Ok([margin.finish()?, variational.finish()?])
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let Setup {
        data,
        net,
        v,
        w0,
        c_sigma,
        gamma,
    } = setup(ctx)?;
    let scale = c_sigma * gamma;
    let clean = data.meta.realized_flip_fraction == Some(0.0);
    let l2 = smoothness_upper_bound(&net).ok_or_else(|| CliError::Config("activation is not smooth".into()))?;
    let mu_hat = 2.0 * scale;
    // ξ enters only the predicted bound, which is refreshed once ξ̂ is known.
    let provisional = ProxyPlParams::new(0.0, 1.0, mu_hat)?;
    let schedule = schedule_proxy_pl(net.value(&w0), &provisional, ctx.eps, l2, None)?;
    let eta = schedule.eta;

    let mut xi_steps = 0.0f64;
    let mut lower_cert = RunningCert::new("margin_lower_bound_every_step");
    let mut error_cert = RunningCert::new("zero_one_vs_surrogate");
    let mut descent = DescentMonitor::new(eta, l2);
    let mut best: Option<(f64, ParamVector, f64)> = None;
    let mut final_error = f64::NAN;
    let cfg = GdConfig::thinned(eta, schedule.iterations, 200)?;
    let trajectory = run_gd_observed(&net, &w0, &cfg, |s| {
        let g = s.g.expect("surrogate proxy attached");
        let lower = -dot(s.gradient, &v);
        xi_steps = xi_steps.max(g - lower / scale);
        lower_cert.push(lower - scale * g, || WorstPoint::Scalar(s.t as f64));
        let err = error_from_margins(&net.margins(s.w));
        error_cert.push(2.0 * g - err, || WorstPoint::Scalar(s.t as f64));
        descent.observe(s);
        if best.as_ref().is_none_or(|(b, _, _)| g < *b) {
            best = Some((g, ParamVector::new(s.w.to_vec()).expect("finite iterate"), err));
        }
        final_error = err;
    })?;
    let (g_best, w_best, err_best) = best.expect("at least one step");

    let iterates = kept_iterates(&trajectory, 100);
    let points = with_perturbations(&iterates, 1, ctx.sub_seed(5))?;
    let mut xi_hat = xi_steps.max(0.0);
    for w in &points {
        let (lower, _) = margin_pl_lower_bound(&net, &v, w)?;
        xi_hat = xi_hat.max(surrogate_loss(&net, w) - lower / scale);
    }
    let pl = ProxyPlParams::new(xi_hat, 1.0, mu_hat)?;
    let mut schedule = schedule.mark_empirical();
    schedule.inputs.xi = Some(xi_hat);
    schedule.predicted_bound = Some(xi_hat + ctx.eps);

    let pl_cert = check_proxy_pl(&net, |w: &[f64]| surrogate_loss(&net, w), &pl, &points)?;
    let [margin_pts, variational] = margin_checks(&net, &v, scale, &points)?;
    let bound = validate_bound(&trajectory, &schedule, 0.0)?;
    let ceiling = ctx.get("error_ceiling", 0.25);
    let best_cert = CertReport::from_slacks(
        "best_iterate_error",
        [(2.0 * g_best - err_best, WorstPoint::Point(w_best.clone()))],
    )?;
    let bound_cert = CertReport::from_slacks(
        "error_vs_bound",
        [(2.0 * (xi_hat + ctx.eps) - err_best, WorstPoint::Point(w_best.clone()))],
    )?;
    let ceiling_cert = CertReport::from_slacks("final_error_ceiling", [(ceiling - final_error, WorstPoint::Scalar(final_error))])?;
    let l2_hat = estimate_l2_smooth(&net, &consecutive_pairs(&points))?;
    let l2_cert = CertReport::from_slacks("smoothness_estimate", [(l2 - l2_hat, WorstPoint::Scalar(l2_hat))])?;
    let certificate = margin_certificate(&net, &v, &w_best, c_sigma, gamma)?;
    let mut per_sample = RunningCert::new("margin_per_clean_sample");
    for w in &iterates {
        let c = margin_certificate(&net, &v, w, c_sigma, gamma)?.empirical_c;
        per_sample.push(c_sigma * (c - gamma), || WorstPoint::Point(w.clone()));
    }

    let clean_gate = |r: CertReport| if clean { CertEntry::gating(r) } else { CertEntry::advisory(r) };
    let certs = vec![
        CertEntry::gating(pl_cert),
        clean_gate(lower_cert.finish()?),
        clean_gate(margin_pts),
        CertEntry::gating(per_sample.finish()?),
        CertEntry::gating(variational),
        CertEntry::gating(error_cert.finish()?),
        CertEntry::gating(best_cert),
        CertEntry::gating(bound_cert),
        CertEntry::gating(ceiling_cert),
        CertEntry::gating(descent.finish()?),
        CertEntry::advisory(l2_cert),
    ];
    let mut notes = vec![
        "ξ̂ is the largest g − lower/(c_σγ) over every step and the certification points".to_string(),
        "μ̂ = 2c_σγ with α = 1; the schedule is empirical-constant through ξ̂".to_string(),
    ];
    if !clean {
        notes.push("labels contain flips, so the clean-data margin checks are advisory".to_string());
    }
    Ok(Outcome {
        metrics: metrics([
            ("xi_hat", xi_hat),
            ("mu_hat", mu_hat),
            ("l2", l2),
            ("l2_estimate", l2_hat),
            ("realized_flip_fraction", data.meta.realized_flip_fraction.unwrap_or_default()),
            ("min_surrogate", g_best),
            ("best_error", err_best),
            ("final_error", final_error),
            ("initial_error", classification_error(&net, &w0)),
            ("empirical_c", certificate.empirical_c),
        ]),
        schedule,
        certs,
        bound,
        trajectory,
        dataset: Some(data),
        notes,
    })
}

pub fn certify(ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    let Setup {
        data,
        net,
        v,
        w0,
        c_sigma,
        gamma,
    } = setup(ctx)?;
    let sd = 1.0 / (data.d() as f64).sqrt();
    let pts = certification_points(&[w0], points, sd, ctx.sub_seed(5))?;
    let [margin, variational] = margin_checks(&net, &v, c_sigma * gamma, &pts)?;
    let margin = if data.meta.realized_flip_fraction == Some(0.0) {
        CertEntry::gating(margin)
    } else {
        CertEntry::advisory(margin)
    };
    Ok(vec![margin, CertEntry::gating(variational)])
}

//! `f = g = ½‖w‖²`: PL with `μ = 4`, `α = 2`, `ξ = 0`, and 1-smooth.

use proxyopt_core::certify::check_proxy_pl;
use proxyopt_core::objective::half_squared_norm;
use proxyopt_core::optimizer::{run_gd, schedule_proxy_pl, validate_bound, GdConfig};
use proxyopt_core::{Objective, ParamVector, ProxyPlParams};

use super::{certification_points, kept_iterates, metrics, with_perturbations, Context, Outcome};
use crate::{CertEntry, Result};

pub const KEYS: &[&str] = &["mu", "l2", "eta", "w0_x", "w0_y"];

fn setup(ctx: &Context) -> Result<(ParamVector, ProxyPlParams, f64)> {
    let w0 = ParamVector::new(vec![ctx.get("w0_x", 2.0), ctx.get("w0_y", 0.0)])?;
    let pl = ProxyPlParams::new(0.0, 2.0, ctx.get_positive("mu", 4.0)?)?;
    Ok((w0, pl, ctx.get_positive("l2", 1.0)?))
}

fn half_norm_sq(w: &[f64]) -> f64 {
    0.5 * w.iter().map(|x| x * x).sum::<f64>()
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let obj = half_squared_norm(2);
    let (w0, pl, l2) = setup(ctx)?;
    let schedule = schedule_proxy_pl(obj.value(&w0), &pl, ctx.eps, l2, ctx.get_opt("eta"))?;
    let trajectory = run_gd(&obj, &w0, &GdConfig::thinned(schedule.eta, schedule.iterations, 200)?)?;
    let points = with_perturbations(&kept_iterates(&trajectory, 100), 1, ctx.sub_seed(1))?;
    let cert = check_proxy_pl(&obj, half_norm_sq, &pl, &points)?;
    let bound = validate_bound(&trajectory, &schedule, 0.0)?;
    Ok(Outcome {
        metrics: metrics([
            ("final_f", trajectory.last().f),
            ("min_g", bound.g_min),
            ("iterations", schedule.iterations as f64),
        ]),
        schedule,
        certs: vec![CertEntry::gating(cert)],
        bound,
        trajectory,
        dataset: None,
        notes: Vec::new(),
    })
}

pub fn certify(ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    let obj = half_squared_norm(2);
    let (w0, pl, _) = setup(ctx)?;
    let pts = certification_points(&[w0], points, 1.0, ctx.sub_seed(1))?;
    Ok(vec![CertEntry::gating(check_proxy_pl(&obj, half_norm_sq, &pl, &pts)?)])
}

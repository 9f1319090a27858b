//! Leaky-ReLU neuron on a well-conditioned square design: PL with the
//! closed-form constant `s_min(X)² c_σ²`.

use proxyopt_core::certify::check_proxy_pl;
use proxyopt_core::linalg::{largest_singular_value, smallest_singular_value};
use proxyopt_core::models::{
    gen_conditioned_features, gen_teacher_regression_on, make_leaky_neuron, random_unit_vector, ActivationSpec,
    Dataset, LeakyNeuronModel,
};
use proxyopt_core::optimizer::{run_gd, schedule_proxy_pl, validate_bound, GdConfig};
use proxyopt_core::{Objective, ParamVector, ProxyPlParams};

use super::{certification_points, gaussian_point, kept_iterates, metrics, with_perturbations, Context, Outcome};
use crate::{CertEntry, Result};

pub const KEYS: &[&str] = &["n", "d", "c_sigma", "s_lo", "s_hi", "noise_sd"];

struct Setup {
    data: Dataset,
    model: LeakyNeuronModel,
    w0: ParamVector,
    pl: ProxyPlParams,
}

fn setup(ctx: &Context) -> Result<Setup> {
    let d = ctx.get_usize("d", 8)?;
    let n = ctx.get_usize("n", d)?;
    let c = ctx.get_positive("c_sigma", 0.1)?;
    let x = gen_conditioned_features(n, d, ctx.get_positive("s_lo", 1.0)?, ctx.get_positive("s_hi", 2.0)?, ctx.sub_seed(1))?;
    let teacher = random_unit_vector(d, ctx.sub_seed(2));
    let act = ActivationSpec::leaky_relu(c)?;
    let data = gen_teacher_regression_on(x, &teacher, ctx.get("noise_sd", 0.0), ctx.sub_seed(3), &act)?;
    let model = make_leaky_neuron(&data, c)?;
    let w0 = gaussian_point(d, 1.0 / (d as f64).sqrt(), ctx.sub_seed(4))?;
    let pl = ProxyPlParams::new(model.xi, 2.0, model.mu_analytic)?;
    Ok(Setup { data, model, w0, pl })
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let Setup { data, model, w0, pl } = setup(ctx)?;
    let obj = &model.objective;
    let l2 = obj.piecewise_smoothness();
    let mut schedule = schedule_proxy_pl(obj.value(&w0), &pl, ctx.eps, l2, None)?;
    if model.xi_empirical {
        schedule = schedule.mark_empirical();
    }
    let trajectory = run_gd(obj, &w0, &GdConfig::thinned(schedule.eta, schedule.iterations, 100)?)?;
    let points = with_perturbations(&kept_iterates(&trajectory, 100), 1, ctx.sub_seed(5))?;
    let cert = check_proxy_pl(obj, |w: &[f64]| obj.value(w), &pl, &points)?;
    let bound = validate_bound(&trajectory, &schedule, 0.0)?;
    let mut notes = vec!["L2 = s_max(X)^2 bounds the curvature of every linear piece of f".to_string()];
    if model.xi_empirical {
        notes.push("f* taken from a reference descent run; the bound uses an empirical constant".to_string());
    }
    Ok(Outcome {
        metrics: metrics([
            ("s_min", smallest_singular_value(&data.x)?),
            ("s_max", largest_singular_value(&data.x)),
            ("mu", model.mu_analytic),
            ("xi", model.xi),
            ("l2", l2),
            ("final_f", trajectory.last().f),
            ("min_f", bound.g_min),
        ]),
        schedule,
        certs: vec![CertEntry::gating(cert)],
        bound,
        trajectory,
        dataset: Some(data),
        notes,
    })
}

pub fn certify(ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    let Setup { data, model, w0, pl } = setup(ctx)?;
    let obj = &model.objective;
    let sd = 1.0 / (data.d() as f64).sqrt();
    let pts = certification_points(&[w0, model.minimizer.clone()], points, sd, ctx.sub_seed(5))?;
    Ok(vec![CertEntry::gating(check_proxy_pl(obj, |w: &[f64]| obj.value(w), &pl, &pts)?)])
}

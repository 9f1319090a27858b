//! Deep linear network: PL with constant `Lτ^(2L−2)/‖(XXᵀ)⁻¹X‖_F²`, where
//! `τ` lower-bounds every layer's smallest singular value along the run.

use proxyopt_core::certify::{check_proxy_pl, consecutive_pairs, estimate_l2_smooth};
use proxyopt_core::linalg::deep_linear_mu;
use proxyopt_core::models::{
    gen_conditioned_features, gen_teacher_regression_on, make_deep_linear, random_unit_vector, ActivationSpec,
    Dataset, DeepLinear,
};
use proxyopt_core::optimizer::{run_gd_observed, schedule_proxy_pl, validate_bound, GdConfig};
use proxyopt_core::{Objective, ParamVector, ProxyPlParams};

use super::{kept_iterates, metrics, with_perturbations, Context, DescentMonitor, Outcome};
use crate::{CertEntry, CliError, Result};

pub const KEYS: &[&str] = &["n", "d", "depth", "hidden", "init_scale", "probe_steps"];

struct Setup {
    data: Dataset,
    net: DeepLinear,
    w0: ParamVector,
}

fn setup(ctx: &Context) -> Result<Setup> {
    let d = ctx.get_usize("d", 4)?;
    let n = ctx.get_usize("n", d)?;
    let depth = ctx.get_usize("depth", 2)?;
    let hidden = ctx.get_usize("hidden", d)?;
    let x = gen_conditioned_features(n, d, 1.0, 2.0, ctx.sub_seed(1))?;
    let teacher = random_unit_vector(d, ctx.sub_seed(2));
    let identity = ActivationSpec::leaky_relu(1.0)?;
    let data = gen_teacher_regression_on(x, &teacher, 0.0, ctx.sub_seed(3), &identity)?;
    let mut widths = vec![d];
    widths.extend(std::iter::repeat_n(hidden, depth - 1));
    widths.push(1);
    let net = make_deep_linear(&data, depth, &widths)?;
    let w0 = net.orthogonal_init(ctx.get_positive("init_scale", 1.0)?, ctx.sub_seed(4));
    Ok(Setup { data, net, w0 })
}

fn mu_for(net: &DeepLinear, tau: f64) -> Result<f64> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(CliError::Config(format!("a layer became singular (τ = {tau})")));
    }
    Ok(deep_linear_mu(net.features(), tau, net.depth())?)
}

/// `max ‖∇f(w) − ∇f(w′)‖/‖w − w′‖` over perturbation pairs around `w0`.
fn local_smoothness(net: &DeepLinear, w0: &ParamVector, seed: u64) -> Result<f64> {
    let points = with_perturbations(std::slice::from_ref(w0), 64, seed)?;
    Ok(estimate_l2_smooth(net, &consecutive_pairs(&points))?)
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let Setup { data, net, w0 } = setup(ctx)?;
    let l2_local = local_smoothness(&net, &w0, ctx.sub_seed(5))?;

    // Raise L2 until the descent inequality holds over a whole probe run
    // taken with step 1/(2L2); the main run repeats that probe as its prefix.
    let probe_steps = ctx.get_usize("probe_steps", 20_000)? as u64;
    let mut l2 = l2_local;
    let mut attempts = 0;
    let tau_probe = loop {
        let mut tau = f64::INFINITY;
        let mut descent = DescentMonitor::new(0.5 / l2, l2);
        run_gd_observed(&net, &w0, &GdConfig::thinned(0.5 / l2, probe_steps, 1)?, |s| {
            tau = tau.min(net.tau_min(s.w));
            descent.observe(s);
        })?;
        if descent.finish()?.pass {
            break tau;
        }
        attempts += 1;
        if attempts == 30 {
            return Err(CliError::Config("no smoothness estimate makes the probe run descend".into()));
        }
        l2 *= 1.5;
    };
    let eta = 0.5 / l2;
    let mu_probe = mu_for(&net, tau_probe)?;
    let pl = ProxyPlParams::new(0.0, 2.0, mu_probe)?;
    let schedule = schedule_proxy_pl(net.value(&w0), &pl, ctx.eps, l2, Some(eta))?.mark_empirical();

    let mut tau_run = f64::INFINITY;
    let mut descent = DescentMonitor::new(eta, l2);
    let cfg = GdConfig::thinned(eta, schedule.iterations, 200)?;
    let trajectory = run_gd_observed(&net, &w0, &cfg, |s| {
        tau_run = tau_run.min(net.tau_min(s.w));
        descent.observe(s);
    })?;
    let tau = tau_probe.min(tau_run);
    let mu = mu_for(&net, tau)?;
    let certified = ProxyPlParams::new(0.0, 2.0, mu)?;
    let points = kept_iterates(&trajectory, 200);
    let cert = check_proxy_pl(&net, |w: &[f64]| net.value(w), &certified, &points)?;
    let bound = validate_bound(&trajectory, &schedule, 0.0)?;
    Ok(Outcome {
        metrics: metrics([
            ("tau_probe", tau_probe),
            ("tau_run", tau_run),
            ("mu_schedule", mu_probe),
            ("mu_certified", mu),
            ("l2_local", l2_local),
                        ("l2_estimate", l2),
            ("final_f", trajectory.last().f),
            ("min_f", bound.g_min),
        ]),
        schedule,
        certs: vec![CertEntry::gating(cert), CertEntry::advisory(descent.finish()?)],
        bound,
        trajectory,
        dataset: Some(data),
        notes: vec![
            "L2 starts from gradient differences near w0 and is raised until a probe run satisfies the descent inequality; the schedule is empirical-constant".to_string(),
            "τ is the smallest layer singular value over a probe run and every step of the main run".to_string(),
        ],
    })
}

pub fn certify(ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    let Setup { net, w0, .. } = setup(ctx)?;
    let pts = with_perturbations(std::slice::from_ref(&w0), points - 1, ctx.sub_seed(5))?;
    let tau = pts.iter().map(|w| net.tau_min(w)).fold(f64::INFINITY, f64::min);
    let pl = ProxyPlParams::new(0.0, 2.0, mu_for(&net, tau)?)?;
    Ok(vec![CertEntry::gating(check_proxy_pl(&net, |w: &[f64]| net.value(w), &pl, &pts)?)])
}

//! Single ReLU neuron against a teacher `v*`: proxy convexity with
//! `g(w) = (1/n) Σ 2[σ(⟨w,x⟩) − σ(⟨v*,x⟩)]²σ′(⟨w,x⟩)` and `h = (1/n) Σ |σ(⟨v*,x⟩) − y|`,
//! run under the Lipschitz schedule.

use proxyopt_core::certify::{check_proxy_convexity, pair_with, WorstPoint};
use proxyopt_core::models::{gen_teacher_regression, make_single_relu_sq, random_unit_vector, ActivationSpec, SingleReluSq};
use proxyopt_core::optimizer::{run_gd, run_gd_observed, schedule_proxy_convex_lipschitz, validate_bound, GdConfig};
use proxyopt_core::param::{dist_sq, norm};
use proxyopt_core::ParamVector;

use super::{certification_points, gaussian_point, kept_iterates, metrics, with_perturbations, Context, Outcome, RunningCert};
use crate::{CertEntry, Result};

const TRAJECTORY_POINTS: usize = 200;

pub const KEYS: &[&str] = &["n", "d", "noise_sd", "prerun_eta", "prerun_steps", "max_iterations"];

struct Setup {
    obj: SingleReluSq,
    teacher: ParamVector,
    w0: ParamVector,
}

fn setup(ctx: &Context) -> Result<Setup> {
    let d = ctx.get_usize("d", 16)?;
    let teacher = random_unit_vector(d, ctx.sub_seed(1));
    let data = gen_teacher_regression(
        ctx.get_usize("n", 2000)?,
        d,
        &teacher,
        ctx.get("noise_sd", 0.0),
        ctx.sub_seed(2),
        &ActivationSpec::relu(),
    )?;
    let obj = make_single_relu_sq(&data)?;
    let w0 = gaussian_point(d, 1.0 / (d as f64).sqrt(), ctx.sub_seed(3))?;
    Ok(Setup {
        obj,
        teacher: ParamVector::new(teacher)?,
        w0,
    })
}

/// The three pair sets checked against one comparator.
fn convexity_certs(obj: &SingleReluSq, on_path: &[ParamVector], off_path: &[ParamVector], v: &ParamVector) -> Result<[CertEntry; 3]> {
    let g = |w: &[f64]| obj.proxy_g_value(w);
    let half = |w: &[f64]| 0.5 * obj.proxy_g_value(w);
    let h = |_: &[f64]| obj.h_value();
    let pairs = pair_with(on_path, v);
    Ok([
        CertEntry::gating(check_proxy_convexity(obj, g, h, &pairs)?),
        CertEntry::advisory(
            check_proxy_convexity(obj, half, h, &pairs)?.with_condition_id("proxy_convexity_half_scale"),
        ),
        CertEntry::advisory(
            check_proxy_convexity(obj, g, h, &pair_with(off_path, v))?.with_condition_id("proxy_convexity_off_trajectory"),
        ),
    ])
}

pub fn run(ctx: &Context) -> Result<Outcome> {
    let Setup { obj, teacher, w0 } = setup(ctx)?;
    let prerun_eta = ctx.get_positive("prerun_eta", 0.05)?;
    let prerun_steps = ctx.get_usize("prerun_steps", 500)? as u64;
    let prerun = run_gd(&obj, &w0, &GdConfig::new(prerun_eta, prerun_steps)?)?;
    let l1 = prerun.grad_norms().into_iter().fold(0.0, f64::max);
    let h = obj.h_value();
    let d0 = dist_sq(&w0, &teacher);
    let schedule = schedule_proxy_convex_lipschitz(ctx.eps, l1, d0)?.mark_empirical().with_comparator(h);

    let mut gradient_cert = RunningCert::new("gradient_bound");
    let iterations = (ctx.get_usize("max_iterations", schedule.iterations as usize)? as u64).min(schedule.iterations);
    let cfg = GdConfig::thinned(schedule.eta, iterations, 200)?;
    let trajectory = run_gd_observed(&obj, &w0, &cfg, |s| {
        gradient_cert.push(l1 - norm(s.gradient), || WorstPoint::Scalar(s.t as f64));
    })?;
    // Short scheduled runs are topped up with pre-run iterates, which lie on
    // a descent path from the same start.
    let mut on_path = kept_iterates(&trajectory, TRAJECTORY_POINTS);
    let missing = TRAJECTORY_POINTS - on_path.len();
    if missing > 0 {
        on_path.extend(kept_iterates(&prerun, missing + 1).into_iter().skip(1).take(missing));
    }
    let off_path: Vec<ParamVector> = with_perturbations(&on_path, 1, ctx.sub_seed(4))?.split_off(on_path.len());
    let [verbatim, half, off] = convexity_certs(&obj, &on_path, &off_path, &teacher)?;
    let fitted = verbatim.report.fitted_constant.unwrap_or(f64::NAN);
    let bound = validate_bound(&trajectory, &schedule, h)?;
    let mut notes = vec![
        "L1 is the largest gradient norm over a pre-run; the schedule is empirical-constant".to_string(),
        "for the ½-scaled squared loss ⟨∇f(w), w − v*⟩ ≥ g(w)/2 − h, so the unscaled check can fail by up to g/2"
            .to_string(),
    ];
    if iterations < schedule.iterations {
        notes.push(format!("run truncated to {iterations} of {} scheduled steps", schedule.iterations));
    }
    Ok(Outcome {
        metrics: metrics([
            ("l1_estimate", l1),
            ("dist_sq", d0),
            ("h_teacher", h),
            ("fitted_g_scale", fitted),
            ("final_f", trajectory.last().f),
            ("min_g", bound.g_min),
        ]),
        schedule,
        certs: vec![verbatim, CertEntry::gating(gradient_cert.finish()?), half, off],
        bound,
        trajectory,
        dataset: Some(obj.data().clone()),
        notes,
    })
}

pub fn certify(ctx: &Context, points: usize) -> Result<Vec<CertEntry>> {
    let Setup { obj, teacher, w0 } = setup(ctx)?;
    let sd = 1.0 / (teacher.dim() as f64).sqrt();
    let pts = certification_points(&[w0], points, sd, ctx.sub_seed(4))?;
    let [verbatim, half, _] = convexity_certs(&obj, &pts, &pts, &teacher)?;
    Ok(vec![verbatim, half])
}

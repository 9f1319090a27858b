use proxyopt_core::linalg::largest_singular_value;
use proxyopt_core::models::data::{gaussian_matrix, gaussian_vec, rng_from_seed};
use proxyopt_core::models::*;
use proxyopt_core::objective::{half_squared_norm, FnObjective, Objective};
use proxyopt_core::optimizer::audit::{descent_min_slack, distance_identity_max_error, telescoping_slack};
use proxyopt_core::optimizer::{run_gd_observed, GdConfig, StepRecord};
use proxyopt_core::param::{dot, sub};
use proxyopt_core::ParamVector;

fn record<O: Objective>(obj: &O, w0: Vec<f64>, eta: f64, t: u64) -> Vec<StepRecord> {
    let mut steps = Vec::new();
    let cfg = GdConfig::new(eta, t).unwrap();
    run_gd_observed(obj, &ParamVector::new(w0).unwrap(), &cfg, |s| steps.push(StepRecord::from(s))).unwrap();
    steps
}

/// Smooth objectives with a certified smoothness constant.
fn smooth_runs() -> Vec<(String, Vec<StepRecord>, f64, f64)> {
    let mut out = Vec::new();

    let quad = half_squared_norm(3);
    out.push(("quadratic".into(), record(&quad, vec![2.0, -1.0, 0.5], 0.5, 200), 0.5, 1.0));

    let mut rng = rng_from_seed(1);
    let x = gaussian_matrix(&mut rng, 10, 4, 1.0);
    let y = gaussian_vec(&mut rng, 10, 1.0);
    let l2 = largest_singular_value(&x).powi(2);
    let (xa, ya, xb, yb) = (x.clone(), y.clone(), x, y);
    let ls = FnObjective::new(
        "least_squares",
        4,
        move |w| {
            let r = sub(&xa.matvec(w).unwrap(), &ya);
            0.5 * dot(&r, &r)
        },
        move |w| xb.tmatvec(&sub(&xb.matvec(w).unwrap(), &yb)).unwrap(),
    );
    let eta = 0.9 / l2;
    out.push(("least_squares".into(), record(&ls, vec![1.0; 4], eta, 500), eta, l2));

    let ds = gen_halfspace_classification(&HalfspaceDataConfig {
        n: 100,
        d: 4,
        u_bar: random_unit_vector(4, 2),
        opt: 0.05,
        gamma: 0.3,
        seed: 3,
    })
    .unwrap();
    let shape = NetworkShape::new(16, 4, 4).unwrap();
    let net = make_one_layer(&shape, &ActivationSpec::smooth_leaky(0.2, 0.1).unwrap(), &ds).unwrap();
    let l2 = smoothness_upper_bound(&net).unwrap();
    let w0 = net.gaussian_init(5).into_inner();
    out.push(("smooth_leaky_net".into(), record(&net, w0, 0.5 / l2, 500), 0.5 / l2, l2));
    out
}

#[test]
fn descent_inequality_every_step() {
    for (name, steps, eta, l2) in smooth_runs() {
        let slack = descent_min_slack(&steps, eta, l2);
        assert!(slack >= -1e-8, "{name}: {slack}");
    }
}

#[test]
fn telescoping_bound() {
    for (name, steps, eta, _) in smooth_runs() {
        for t in [1, 2, 10, steps.len()] {
            let slack = telescoping_slack(&steps[..t], eta);
            assert!(slack >= -1e-8, "{name} T={t}: {slack}");
        }
    }
}

#[test]
fn distance_identity_on_random_runs() {
    let mut rng = rng_from_seed(6);
    let relu = ActivationSpec::relu();
    let teacher = random_unit_vector(5, 7);
    let ds = gen_teacher_regression(50, 5, &teacher, 0.1, 8, &relu).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    for k in 0..5 {
        let w0 = gaussian_vec(&mut rng, 5, 1.0);
        let v = gaussian_vec(&mut rng, 5, 1.0);
        let steps = record(&obj, w0, 0.05 * (k + 1) as f64, 200);
        let err = distance_identity_max_error(&steps, 0.05 * (k + 1) as f64, &v);
        assert!(err <= 1e-10, "{err}");
    }
}

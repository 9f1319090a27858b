use proxyopt_core::linalg::Matrix;
use proxyopt_core::models::data::{gaussian_matrix, gaussian_vec, rng_from_seed};
use proxyopt_core::models::*;
use proxyopt_core::objective::{finite_diff_gradient, relative_error, Objective, DEFAULT_FD_STEP};
use proxyopt_core::param::dot;
use proxyopt_core::ParamVector;

const POINTS: usize = 100;
const TOL: f64 = 1e-5;

/// Draw Gaussian points, keep those `valid` accepts, and compare gradients.
fn check_model<O: Objective>(obj: &O, sd: f64, seed: u64, valid: impl Fn(&[f64]) -> bool) {
    let mut rng = rng_from_seed(seed);
    let mut checked = 0;
    let mut draws = 0;
    while checked < POINTS {
        draws += 1;
        assert!(draws < 100 * POINTS, "{}: too few valid points", obj.name());
        let w = ParamVector::new(gaussian_vec(&mut rng, obj.dim(), sd)).unwrap();
        if !valid(&w) {
            continue;
        }
        let fd = finite_diff_gradient(obj, &w, DEFAULT_FD_STEP).unwrap();
        let an = obj.gradient(&w);
        let err = relative_error(&an, &fd, 1e-8);
        assert!(err <= TOL, "{}: relative error {err:e} at {w:?}", obj.name());
        checked += 1;
    }
}

fn min_abs_rows(x: &Matrix, w: &[f64]) -> f64 {
    (0..x.rows()).map(|i| dot(x.row(i), w).abs()).fold(f64::INFINITY, f64::min)
}

#[test]
fn single_relu_gradient() {
    let relu = ActivationSpec::relu();
    let teacher = random_unit_vector(5, 1);
    let ds = gen_teacher_regression(40, 5, &teacher, 0.1, 2, &relu).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    check_model(&obj, 1.0, 3, |w| obj.min_abs_preactivation(w) > 1e-3);
}

#[test]
fn single_relu_gradient_away_from_kinks() {
    let relu = ActivationSpec::relu();
    let teacher = random_unit_vector(3, 4);
    let ds = gen_teacher_regression(20, 3, &teacher, 0.0, 5, &relu).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    let mut rng = rng_from_seed(6);
    let mut found = 0;
    while found < 5 {
        let w = gaussian_vec(&mut rng, 3, 1.0);
        if obj.min_abs_preactivation(&w) <= 0.1 {
            continue;
        }
        let fd = finite_diff_gradient(&obj, &ParamVector::new(w.clone()).unwrap(), 1e-5).unwrap();
        assert!(relative_error(&obj.gradient(&w), &fd, 1e-8) <= 1e-6);
        found += 1;
    }
}

#[test]
fn leaky_neuron_gradient() {
    let act = ActivationSpec::leaky_relu(0.1).unwrap();
    let x = gen_conditioned_features(8, 8, 1.0, 2.0, 7).unwrap();
    let ds = gen_teacher_regression_on(x.clone(), &random_unit_vector(8, 8), 0.0, 9, &act).unwrap();
    let model = make_leaky_neuron(&ds, 0.1).unwrap();
    check_model(&model.objective, 1.0, 10, |w| min_abs_rows(&x, w) > 1e-3);
}

#[test]
fn deep_linear_gradient() {
    let mut rng = rng_from_seed(11);
    let x = gaussian_matrix(&mut rng, 6, 4, 1.0);
    let y = gaussian_matrix(&mut rng, 6, 2, 1.0);
    let net = make_deep_linear_with_targets(&x, &y, 3, &[4, 3, 3, 2]).unwrap();
    check_model(&net, 0.7, 12, |_| true);
    let single = make_deep_linear_with_targets(&x, &y, 1, &[4, 2]).unwrap();
    check_model(&single, 1.0, 13, |_| true);
}

fn classification_data(n: usize, d: usize, seed: u64) -> Dataset {
    gen_halfspace_classification(&HalfspaceDataConfig {
        n,
        d,
        u_bar: random_unit_vector(d, seed),
        opt: 0.1,
        gamma: 0.2,
        seed: seed + 1,
    })
    .unwrap()
}

#[test]
fn smooth_leaky_network_gradient() {
    let ds = classification_data(25, 3, 14);
    let shape = NetworkShape::new(6, 3, 15).unwrap();
    let net = make_one_layer(&shape, &ActivationSpec::smooth_leaky(0.2, 0.1).unwrap(), &ds).unwrap();
    check_model(&net, 1.0, 16, |_| true);
}

#[test]
fn relu_network_gradient() {
    let ds = classification_data(25, 3, 17);
    let shape = NetworkShape::new(6, 3, 18).unwrap();
    let net = make_one_layer(&shape, &ActivationSpec::relu(), &ds).unwrap();
    check_model(&net, 1.0, 19, |w| net.min_abs_preactivation(w) > 1e-3);
}

#[test]
fn single_neuron_network_is_the_activation() {
    let ds = classification_data(10, 2, 20);
    let mut shape = NetworkShape::new(1, 2, 0).unwrap();
    shape.a = vec![1.0];
    let act = ActivationSpec::smooth_leaky(0.2, 0.1).unwrap();
    let net = make_one_layer(&shape, &act, &ds).unwrap();
    let w = [0.4, -1.3];
    let out = net.outputs(&w);
    for (i, o) in out.iter().enumerate() {
        assert_eq!(*o, act.value(dot(ds.x.row(i), &w)));
    }
    let fd = finite_diff_gradient(&net, &ParamVector::new(w.to_vec()).unwrap(), 1e-5).unwrap();
    assert!(relative_error(&net.gradient(&w), &fd, 1e-8) <= 1e-5);
}

use proxyopt_core::linalg::Matrix;
use proxyopt_core::models::data::{gaussian_vec, rng_from_seed};
use proxyopt_core::models::*;
use proxyopt_core::objective::Objective;
use proxyopt_core::optimizer::{run_gd, GdConfig};
use proxyopt_core::param::{dot, norm};
use proxyopt_core::ParamVector;
use rand::Rng;

/// Deterministic design shared with an independent NumPy gradient descent
/// whose outputs are frozen below.
fn trig_design() -> (Matrix, Vec<f64>) {
    let (n, d) = (64, 4);
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            data.push(1.5 * (0.37 * (i + 1) as f64 * (j + 2) as f64 + 0.5).sin());
        }
    }
    let v = [0.6, -0.4, 0.5, 0.48];
    let len = norm(&v);
    (Matrix::new(n, d, data).unwrap(), v.iter().map(|x| x / len).collect())
}

#[test]
fn single_relu_gd_matches_reference_run() {
    let (x, teacher) = trig_design();
    let ds = gen_teacher_regression_on(x, &teacher, 0.0, 0, &ActivationSpec::relu()).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    let w0 = ParamVector::new(vec![0.3, 0.1, 0.2, -0.1]).unwrap();
    let traj = run_gd(&obj, &w0, &GdConfig::new(0.05, 500).unwrap()).unwrap();
    let f = traj.f_values();
    let close = |a: f64, b: f64, rel: f64| (a - b).abs() <= rel * b.abs();
    assert!(close(f[0], 0.15576836106617525, 1e-12));
    assert!(close(f[100], 0.004168486475197882, 1e-9));
    assert!(close(f[499], 3.3835103561323834e-10, 1e-6), "{}", f[499]);
    assert!(f[499] < 1e-3);
    let w = traj.last().w.as_ref().unwrap();
    let reference = [0.5998580778884203, -0.3998963255893208, 0.4999312574269338, 0.47989823730892095];
    for (a, b) in w.iter().zip(reference) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn non_invexity_witness() {
    let relu = ActivationSpec::relu();
    let teacher = random_unit_vector(6, 1);
    let ds = gen_teacher_regression(200, 6, &teacher, 0.0, 2, &relu).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    let zero = vec![0.0; 6];
    assert!(obj.gradient(&zero).iter().all(|g| *g == 0.0));
    assert!(obj.value(&zero) > obj.value(&teacher));
    assert_eq!(obj.value(&teacher), 0.0);
    assert_eq!(obj.h_value(), 0.0);
}

#[test]
fn comparator_proxy_is_root_of_teacher_loss() {
    let relu = ActivationSpec::relu();
    let teacher = random_unit_vector(5, 3);
    let ds = gen_teacher_regression(500, 5, &teacher, 0.1, 4, &relu).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    let mut acc = 0.0;
    for i in 0..ds.n() {
        let r = dot(ds.x.row(i), &teacher).max(0.0) - ds.y[i];
        acc += (2.0 * 0.5 * r * r).sqrt();
    }
    let expect = acc / ds.n() as f64;
    assert!((obj.h_value() - expect).abs() <= 1e-12 * expect);
    assert_eq!(obj.proxy_h(&[9.0; 5]), Some(obj.h_value()));
}

#[test]
fn noise_magnitude_matches_half_normal_mean() {
    let relu = ActivationSpec::relu();
    let teacher = random_unit_vector(4, 5);
    let ds = gen_teacher_regression(10_000, 4, &teacher, 0.1, 6, &relu).unwrap();
    let obj = make_single_relu_sq(&ds).unwrap();
    assert!((obj.h_value() - 0.1 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.003);
}

#[test]
fn margin_vector_is_unit() {
    for m in [1, 2, 8, 64] {
        let shape = NetworkShape::new(m, 5, m as u64).unwrap();
        let v = build_margin_vector(&shape, &random_unit_vector(5, 7)).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12, "m = {m}");
    }
}

#[test]
fn margin_vector_lower_bound_on_clean_data() {
    let (c_sigma, gamma) = (0.2, 0.5);
    let u = random_unit_vector(4, 8);
    let ds = gen_halfspace_classification(&HalfspaceDataConfig {
        n: 300,
        d: 4,
        u_bar: u.clone(),
        opt: 0.0,
        gamma,
        seed: 9,
    })
    .unwrap();
    let shape = NetworkShape::new(16, 4, 10).unwrap();
    let net = make_one_layer(&shape, &ActivationSpec::smooth_leaky(c_sigma, 0.1).unwrap(), &ds).unwrap();
    let v = build_margin_vector(&shape, &u).unwrap();
    let mut rng = rng_from_seed(11);
    for k in 0..20 {
        let w = gaussian_vec(&mut rng, net.dim(), 0.5 * (k as f64 + 1.0));
        let dirs = net.directional_derivatives(&w, &v);
        for (i, dv) in dirs.iter().enumerate() {
            assert!(ds.y[i] * dv >= c_sigma * gamma - 1e-12, "sample {i}: {}", ds.y[i] * dv);
        }
    }
}

/// Output `σ(⟨u,x⟩) − σ(−⟨u,x⟩) = ⟨u,x⟩` for the smoothed leaky ReLU.
fn odd_pair_net(ds: &Dataset, u: &[f64]) -> (OneLayerNet, Vec<f64>) {
    let mut shape = NetworkShape::new(2, u.len(), 0).unwrap();
    let s = 0.5f64.sqrt();
    shape.a = vec![s, -s];
    let net = make_one_layer(&shape, &ActivationSpec::smooth_leaky(0.2, 0.1).unwrap(), ds).unwrap();
    let mut w = u.to_vec();
    w.extend(u.iter().map(|x| -x));
    (net, w)
}

#[test]
fn classification_error_extremes() {
    let u = random_unit_vector(3, 12);
    let cfg = HalfspaceDataConfig {
        n: 200,
        d: 3,
        u_bar: u.clone(),
        opt: 0.0,
        gamma: 0.1,
        seed: 13,
    };
    let ds = gen_halfspace_classification(&cfg).unwrap();
    let (net, w) = odd_pair_net(&ds, &u);
    assert_eq!(classification_error(&net, &w), 0.0);
    let flipped = Dataset::new(ds.x.clone(), ds.y.iter().map(|y| -y).collect(), ds.meta.clone()).unwrap();
    let (net, w) = odd_pair_net(&flipped, &u);
    assert_eq!(classification_error(&net, &w), 1.0);
}

#[test]
fn classification_error_of_unrelated_predictions() {
    let n = 10_000;
    let mut rng = rng_from_seed(14);
    let x = Matrix::new(n, 3, gaussian_vec(&mut rng, n * 3, 1.0)).unwrap();
    let y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let ds = Dataset::new(x, y, DatasetMeta::classification()).unwrap();
    let (net, w) = odd_pair_net(&ds, &random_unit_vector(3, 15));
    let err = classification_error(&net, &w);
    assert!((err - 0.5).abs() <= 0.02, "{err}");
}

#[test]
fn zero_one_error_below_twice_surrogate() {
    let u = random_unit_vector(5, 16);
    let ds = gen_halfspace_classification(&HalfspaceDataConfig {
        n: 400,
        d: 5,
        u_bar: u,
        opt: 0.2,
        gamma: 0.0,
        seed: 17,
    })
    .unwrap();
    for act in [ActivationSpec::relu(), ActivationSpec::smooth_leaky(0.3, 0.1).unwrap()] {
        let shape = NetworkShape::new(8, 5, 18).unwrap();
        let net = make_one_layer(&shape, &act, &ds).unwrap();
        let mut rng = rng_from_seed(19);
        for _ in 0..50 {
            let w = gaussian_vec(&mut rng, net.dim(), 2.0);
            let s = surrogate_loss(&net, &w);
            assert!(classification_error(&net, &w) <= zero_one_from_surrogate(s).unwrap() + 1e-12);
        }
    }
}

#[test]
fn flip_rate_and_margins() {
    let u = random_unit_vector(6, 20);
    let cfg = HalfspaceDataConfig {
        n: 10_000,
        d: 6,
        u_bar: u.clone(),
        opt: 0.1,
        gamma: 0.3,
        seed: 21,
    };
    let ds = gen_halfspace_classification(&cfg).unwrap();
    let flipped = (0..ds.n()).filter(|i| ds.y[*i] * dot(ds.x.row(*i), &u) < 0.0).count();
    let rate = flipped as f64 / ds.n() as f64;
    assert!((rate - 0.1).abs() <= 0.01);
    assert_eq!(Some(rate), ds.meta.realized_flip_fraction);
    assert!((0..ds.n()).all(|i| dot(ds.x.row(i), &u).abs() >= 0.3));
}

#[test]
fn deep_linear_tau_monitor_along_run() {
    let x = gen_conditioned_features(2, 2, 1.0, 1.5, 22).unwrap();
    let y = Matrix::new(2, 2, vec![0.5, -0.2, 0.3, 0.8]).unwrap();
    let net = make_deep_linear_with_targets(&x, &y, 2, &[2, 2, 2]).unwrap();
    let w0 = net.orthogonal_init(1.0, 23);
    assert!((net.tau_min(&w0) - 1.0).abs() < 1e-12);
    let traj = run_gd(&net, &w0, &GdConfig::new(0.05, 3000).unwrap()).unwrap();
    assert!(traj.last().f < 1e-6 * traj.first().f, "{} -> {}", traj.first().f, traj.last().f);
    for (_, w) in traj.iterates() {
        assert!(net.tau_min(w) > 0.0);
    }
}

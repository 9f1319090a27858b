use std::collections::BTreeMap;

use super::activation::ActivationSpec;
use super::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{largest_singular_value, leaky_neuron_mu, Matrix};
use crate::objective::{Evaluation, Objective};
use crate::optimizer::{run_gd, GdConfig};
use crate::param::{dot, pairwise_sum, ParamVector};

/// Single leaky-ReLU neuron under the (summed) squared loss,
/// `f(w) = ½‖σ(Xw) − y‖²`, with `g = f`.
///
/// The squared loss here is 1-strongly convex in the network outputs, so
/// the standard PL constant is `s_min(X)² c_σ²`.
#[derive(Debug, Clone)]
pub struct LeakyNeuron {
    data: Dataset,
    act: ActivationSpec,
}

impl LeakyNeuron {
    pub fn activation(&self) -> &ActivationSpec {
        &self.act
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// `s_max(X)²`, the curvature bound on every linear piece of `f`.
    pub fn piecewise_smoothness(&self) -> f64 {
        largest_singular_value(&self.data.x).powi(2)
    }
}

impl Objective for LeakyNeuron {
    fn dim(&self) -> usize {
        self.data.d()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.evaluate(w).value
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.evaluate(w).gradient
    }

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let e = self.evaluate(w);
        (e.value, e.gradient)
    }

    fn proxy_g(&self, w: &[f64]) -> Option<f64> {
        Some(self.value(w))
    }

    fn has_proxy_g(&self) -> bool {
        true
    }

    fn evaluate(&self, w: &[f64]) -> Evaluation {
        let mut losses = Vec::with_capacity(self.data.n());
        let mut grad = vec![0.0; self.dim()];
        for i in 0..self.data.n() {
            let x = self.data.x.row(i);
            let z = dot(x, w);
            let r = self.act.value(z) - self.data.y[i];
            losses.push(0.5 * r * r);
            let c = r * self.act.derivative(z);
            for (gj, xj) in grad.iter_mut().zip(x) {
                *gj += c * xj;
            }
        }
        let value = pairwise_sum(&losses);
        Evaluation {
            value,
            gradient: grad,
            proxy_g: Some(value),
        }
    }

    fn name(&self) -> &str {
        "leaky_neuron"
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n".into(), self.data.n() as f64),
            ("d".into(), self.data.d() as f64),
            ("c_sigma".into(), self.act.c_sigma),
        ])
    }
}

/// Leaky neuron with its analytic PL constant and optimal value.
#[derive(Debug, Clone)]
pub struct LeakyNeuronModel {
    pub objective: LeakyNeuron,
    /// `λ s_min(X)² c_σ²` with `λ = 1`.
    pub mu_analytic: f64,
    /// `f*`, the PL optimality slack ξ.
    pub xi: f64,
    /// Set when `f*` came from a reference run rather than an exact solve.
    pub xi_empirical: bool,
    /// Minimizer when realizable, else the best reference-run iterate.
    pub minimizer: ParamVector,
}

/// Build the leaky neuron and compute `ξ = f*`.
///
/// Because the leaky ReLU is invertible, `f* = 0` exactly when `Xw = σ⁻¹(y)`
/// is solvable; that linear system is solved directly. Otherwise `f*` is the
/// best value of a long reference descent started from the least-squares
/// solution.
pub fn make_leaky_neuron(data: &Dataset, c_sigma: f64) -> Result<LeakyNeuronModel> {
    let act = ActivationSpec::leaky_relu(c_sigma)?;
    let objective = LeakyNeuron {
        data: data.clone(),
        act,
    };
    let mu_analytic = leaky_neuron_mu(&data.x, 1.0, c_sigma)?;
    let targets: Vec<f64> = data
        .y
        .iter()
        .map(|y| act.inverse(*y).expect("leaky ReLU is invertible"))
        .collect();
    let w_ls = least_squares(&data.x, &targets)?;
    let f_ls = objective.value(&w_ls);
    let scale = 1.0 + data.y.iter().map(|y| y * y).sum::<f64>();
    if f_ls <= 1e-18 * scale {
        return Ok(LeakyNeuronModel {
            objective,
            mu_analytic,
            xi: 0.0,
            xi_empirical: false,
            minimizer: ParamVector::new(w_ls)?,
        });
    }
    let eta = 0.5 / objective.piecewise_smoothness();
    let cfg = GdConfig::new(eta, 20_000)?.with_record_every(20_000).with_iterate_every(20_000);
    let w0 = ParamVector::new(w_ls)?;
    let traj = run_gd(&objective, &w0, &cfg)?;
    let (_, best) = traj.exact_best_g.expect("leaky neuron carries g = f");
    let last = traj.last().w.clone().expect("last iterate kept");
    Ok(LeakyNeuronModel {
        objective,
        mu_analytic,
        xi: best.min(f_ls),
        xi_empirical: true,
        minimizer: if best < f_ls { last } else { w0 },
    })
}

/// Least-squares solution of `Xw = u`; minimum-norm when `X` is wide.
fn least_squares(x: &Matrix, u: &[f64]) -> Result<Vec<f64>> {
    let xt = x.transpose();
    if x.rows() >= x.cols() {
        let gram = xt.matmul(x)?;
        gram.inverse()?.matvec(&xt.matvec(u)?)
    } else {
        let gram = x.matmul(&xt)?;
        let alpha = gram.inverse()?.matvec(u)?;
        xt.matvec(&alpha)
    }
    .map_err(|e| match e {
        Error::Rank(msg) => Error::Rank(format!("least-squares design: {msg}")),
        other => other,
    })
}

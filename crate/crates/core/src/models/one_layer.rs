use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::activation::{logistic_loss, logistic_loss_derivative, ActivationKind, ActivationSpec};
use super::data::{gaussian_vec, rng_from_seed, Dataset};
use crate::error::{Error, Result};
use crate::objective::{Evaluation, Objective};
use crate::param::{dot, mean, norm, ParamVector};

/// Hidden width `m`, input dimension `d`, and the fixed output weights `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub m: usize,
    pub d: usize,
    pub a: Vec<f64>,
    pub seed: u64,
}

impl NetworkShape {
    /// Output weights `±1/√m`, half of each sign (the extra one positive
    /// when `m` is odd), in seeded random order.
    pub fn new(m: usize, d: usize, seed: u64) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::Config("network needs m, d ≥ 1".into()));
        }
        let s = 1.0 / (m as f64).sqrt();
        let mut a: Vec<f64> = (0..m).map(|j| if j < m.div_ceil(2) { s } else { -s }).collect();
        a.shuffle(&mut rng_from_seed(seed));
        Ok(Self { m, d, a, seed })
    }

    pub fn num_params(&self) -> usize {
        self.m * self.d
    }
}

/// Which proxy a [`OneLayerNet`] attaches as `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetProxy {
    /// `(1/n) Σ −ℓ′(yᵢ N(w; xᵢ))`.
    Surrogate,
    /// The loss itself, `g = f`.
    Loss,
}

/// Networks exposing per-sample outputs and parameter-space directional
/// derivatives of `N(w; xᵢ)`.
pub trait NetworkObjective: Objective {
    fn data(&self) -> &Dataset;

    /// `N(w; xᵢ)` for every sample.
    fn outputs(&self, w: &[f64]) -> Vec<f64>;

    /// `⟨∇N(w; xᵢ), v⟩` for every sample.
    fn directional_derivatives(&self, w: &[f64], v: &[f64]) -> Vec<f64>;

    /// `yᵢ N(w; xᵢ)`.
    fn margins(&self, w: &[f64]) -> Vec<f64> {
        self.outputs(w).iter().zip(&self.data().y).map(|(n, y)| y * n).collect()
    }
}

/// One-hidden-layer network `N(w; x) = Σⱼ aⱼ σ(⟨wⱼ, x⟩)` with fixed `a`,
/// trained under the logistic loss `f(w) = (1/n) Σ ℓ(yᵢ N(w; xᵢ))`.
///
/// Parameters are the rows `w₁, …, w_m` concatenated.
#[derive(Debug, Clone)]
pub struct OneLayerNet {
    shape: NetworkShape,
    act: ActivationSpec,
    data: Dataset,
    proxy: NetProxy,
}

/// Logistic-loss network with the surrogate loss attached as `g`.
pub fn make_one_layer(shape: &NetworkShape, act: &ActivationSpec, data: &Dataset) -> Result<OneLayerNet> {
    if act.kind == ActivationKind::LeakyRelu {
        return Err(Error::Config("one-layer networks take relu or smooth_leaky activations".into()));
    }
    if shape.a.len() != shape.m {
        return Err(Error::Dimension {
            expected: shape.m,
            got: shape.a.len(),
        });
    }
    if data.d() != shape.d {
        return Err(Error::Dimension {
            expected: shape.d,
            got: data.d(),
        });
    }
    Ok(OneLayerNet {
        shape: shape.clone(),
        act: *act,
        data: data.clone(),
        proxy: NetProxy::Surrogate,
    })
}

impl OneLayerNet {
    pub fn with_proxy(mut self, proxy: NetProxy) -> Self {
        self.proxy = proxy;
        self
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.act
    }

    pub fn proxy(&self) -> NetProxy {
        self.proxy
    }

    /// Gaussian initialization with standard deviation `1/√d`.
    pub fn gaussian_init(&self, seed: u64) -> ParamVector {
        let sd = 1.0 / (self.shape.d as f64).sqrt();
        ParamVector::new(gaussian_vec(&mut rng_from_seed(seed), self.shape.num_params(), sd))
            .expect("Gaussian draws are finite")
    }

    fn neuron<'a>(&self, w: &'a [f64], j: usize) -> &'a [f64] {
        &w[j * self.shape.d..(j + 1) * self.shape.d]
    }

    fn output_at(&self, w: &[f64], x: &[f64]) -> f64 {
        (0..self.shape.m)
            .map(|j| self.shape.a[j] * self.act.value(dot(self.neuron(w, j), x)))
            .sum()
    }

    /// Smallest `|⟨wⱼ, xᵢ⟩|` over neurons and samples.
    pub fn min_abs_preactivation(&self, w: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.data.n() {
            let x = self.data.x.row(i);
            for j in 0..self.shape.m {
                best = best.min(dot(self.neuron(w, j), x).abs());
            }
        }
        best
    }
}

impl Objective for OneLayerNet {
    fn dim(&self) -> usize {
        self.shape.num_params()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let losses: Vec<f64> = self.margins(w).into_iter().map(logistic_loss).collect();
        mean(&losses)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.evaluate(w).gradient
    }

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let e = self.evaluate(w);
        (e.value, e.gradient)
    }

    fn proxy_g(&self, w: &[f64]) -> Option<f64> {
        let margins = self.margins(w);
        Some(match self.proxy {
            NetProxy::Surrogate => surrogate_from_margins(&margins),
            NetProxy::Loss => mean(&margins.into_iter().map(logistic_loss).collect::<Vec<_>>()),
        })
    }

    fn has_proxy_g(&self) -> bool {
        true
    }

    fn evaluate(&self, w: &[f64]) -> Evaluation {
        let (m, d, n) = (self.shape.m, self.shape.d, self.data.n());
        let mut grad = vec![0.0; m * d];
        let mut slopes = vec![0.0; m];
        let mut losses = Vec::with_capacity(n);
        let mut surrogates = Vec::with_capacity(n);
        for i in 0..n {
            let x = self.data.x.row(i);
            let y = self.data.y[i];
            let mut out = 0.0;
            for (j, s) in slopes.iter_mut().enumerate() {
                let z = dot(self.neuron(w, j), x);
                out += self.shape.a[j] * self.act.value(z);
                *s = self.act.derivative(z);
            }
            let margin = y * out;
            losses.push(logistic_loss(margin));
            let dl = logistic_loss_derivative(margin);
            surrogates.push(-dl);
            let c = dl * y / n as f64;
            for (j, s) in slopes.iter().enumerate() {
                let k = c * self.shape.a[j] * s;
                if k != 0.0 {
                    for (g, xv) in grad[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *g += k * xv;
                    }
                }
            }
        }
        let value = mean(&losses);
        let proxy = match self.proxy {
            NetProxy::Surrogate => mean(&surrogates),
            NetProxy::Loss => value,
        };
        Evaluation {
            value,
            gradient: grad,
            proxy_g: Some(proxy),
        }
    }

    fn name(&self) -> &str {
        "one_layer"
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("m".into(), self.shape.m as f64),
            ("d".into(), self.shape.d as f64),
            ("n".into(), self.data.n() as f64),
            ("c_sigma".into(), self.act.c_sigma),
            ("beta".into(), self.act.beta),
        ])
    }
}

impl NetworkObjective for OneLayerNet {
    fn data(&self) -> &Dataset {
        &self.data
    }

    fn outputs(&self, w: &[f64]) -> Vec<f64> {
        (0..self.data.n()).map(|i| self.output_at(w, self.data.x.row(i))).collect()
    }

    fn directional_derivatives(&self, w: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.data.n())
            .map(|i| {
                let x = self.data.x.row(i);
                (0..self.shape.m)
                    .map(|j| {
                        let z = dot(self.neuron(w, j), x);
                        self.shape.a[j] * self.act.derivative(z) * dot(self.neuron(v, j), x)
                    })
                    .sum()
            })
            .collect()
    }
}

/// `(1/n) Σ −ℓ′(yᵢ N(w; xᵢ))`, always in `(0, 1)`.
pub fn surrogate_loss<N: NetworkObjective + ?Sized>(net: &N, w: &[f64]) -> f64 {
    surrogate_from_margins(&net.margins(w))
}

pub fn surrogate_from_margins(margins: &[f64]) -> f64 {
    let terms: Vec<f64> = margins.iter().map(|z| -logistic_loss_derivative(*z)).collect();
    mean(&terms)
}

/// Upper bound `2·g` on the zero-one training error, from
/// `1(z ≤ 0) ≤ ℓ′(z)/ℓ′(0)` with `ℓ′(0) = −½`.
pub fn zero_one_from_surrogate(surrogate: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&surrogate) {
        return Err(Error::Precondition(format!("surrogate must lie in [0, 1), got {surrogate}")));
    }
    Ok(2.0 * surrogate)
}

/// Fraction of samples with `yᵢ N(w; xᵢ) ≤ 0`; a zero output counts as an error.
pub fn classification_error<N: NetworkObjective + ?Sized>(net: &N, w: &[f64]) -> f64 {
    let margins = net.margins(w);
    margins.iter().filter(|z| **z <= 0.0).count() as f64 / margins.len() as f64
}

/// Unit comparator `v` with `vⱼ = sign(aⱼ) ū / √m`, so that
/// `y⟨∇N(w; x), v⟩ = (1/m) Σⱼ σ′(⟨wⱼ, x⟩) · y⟨ū, x⟩`.
pub fn build_margin_vector(shape: &NetworkShape, u_bar: &[f64]) -> Result<ParamVector> {
    if u_bar.len() != shape.d {
        return Err(Error::Dimension {
            expected: shape.d,
            got: u_bar.len(),
        });
    }
    if (norm(u_bar) - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("ū must be a unit vector".into()));
    }
    let scale = 1.0 / (shape.m as f64).sqrt();
    let mut v = Vec::with_capacity(shape.num_params());
    for a in &shape.a {
        let s = a.signum() * scale;
        v.extend(u_bar.iter().map(|u| s * u));
    }
    ParamVector::new(v)
}

/// Analytic Lipschitz-gradient bound
/// `(1/n) Σ ‖xᵢ‖² (¼ Σⱼaⱼ² + maxⱼ|aⱼ| · sup|σ″|)` for smooth activations.
pub fn smoothness_upper_bound(net: &OneLayerNet) -> Option<f64> {
    let curvature = net.act.curvature_bound()?;
    let a_sq: f64 = net.shape.a.iter().map(|a| a * a).sum();
    let a_max = net.shape.a.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
    let data = NetworkObjective::data(net);
    let norms: Vec<f64> = (0..data.n()).map(|i| dot(data.x.row(i), data.x.row(i))).collect();
    Some(mean(&norms) * (0.25 * a_sq + a_max * curvature))
}

/// Self-bounding constant `L₂ = ½ maxᵢ‖xᵢ‖² Σⱼaⱼ²`, so that
/// `‖∇f(w)‖² ≤ 2L₂ f(w)` for a 1-Lipschitz activation and the logistic loss.
pub fn self_bounding_constant(net: &OneLayerNet) -> f64 {
    let a_sq: f64 = net.shape.a.iter().map(|a| a * a).sum();
    let data = NetworkObjective::data(net);
    let max_sq = (0..data.n())
        .map(|i| dot(data.x.row(i), data.x.row(i)))
        .fold(0.0f64, f64::max);
    0.5 * max_sq * a_sq * net.act.slope_bound().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::models::data::DatasetMeta;

    fn tiny(kind: ActivationSpec) -> OneLayerNet {
        let x = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, -1.1]]).unwrap();
        let ds = Dataset::new(x, vec![1.0, -1.0, 1.0], DatasetMeta::classification()).unwrap();
        make_one_layer(&NetworkShape::new(4, 2, 3).unwrap(), &kind, &ds).unwrap()
    }

    #[test]
    fn balanced_output_weights() {
        let s = NetworkShape::new(8, 3, 1).unwrap();
        let pos = s.a.iter().filter(|a| **a > 0.0).count();
        assert_eq!(pos, 4);
        assert!(s.a.iter().all(|a| (a.abs() - 8f64.sqrt().recip()).abs() < 1e-15));
        assert_eq!(NetworkShape::new(1, 3, 9).unwrap().a, vec![1.0]);
    }

    #[test]
    fn zero_weights_give_constant_output() {
        let net = tiny(ActivationSpec::smooth_leaky(0.2, 0.1).unwrap());
        let out = net.outputs(&[0.0; 8]);
        assert!(out.iter().all(|o| *o == out[0]));
    }

    #[test]
    fn relu_zero_is_stationary() {
        let net = tiny(ActivationSpec::relu());
        let w = [0.0; 8];
        assert_eq!(net.gradient(&w), vec![0.0; 8]);
        assert!((net.value(&w) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn surrogate_values() {
        assert_eq!(surrogate_from_margins(&[0.0, 0.0]), 0.5);
        assert!(surrogate_from_margins(&[50.0]) < 1e-21);
        assert!((surrogate_from_margins(&[0.0, 50.0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_one_bound() {
        assert_eq!(zero_one_from_surrogate(0.25).unwrap(), 0.5);
        assert_eq!(zero_one_from_surrogate(0.0).unwrap(), 0.0);
        assert!(zero_one_from_surrogate(1.0).is_err());
    }

    #[test]
    fn margin_vector_single_neuron() {
        let shape = NetworkShape::new(1, 2, 0).unwrap();
        let u = [0.6, 0.8];
        assert_eq!(build_margin_vector(&shape, &u).unwrap().as_slice(), &u);
        assert!(build_margin_vector(&shape, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn proxy_choice() {
        let net = tiny(ActivationSpec::smooth_leaky(0.2, 0.1).unwrap());
        let w = net.gaussian_init(4);
        assert_eq!(net.proxy_g(&w), Some(surrogate_loss(&net, &w)));
        let net = net.with_proxy(NetProxy::Loss);
        assert_eq!(net.proxy_g(&w), Some(net.value(&w)));
        assert_eq!(net.evaluate(&w).proxy_g, Some(net.value(&w)));
    }

    #[test]
    fn rejects_leaky_kind() {
        let x = Matrix::identity(2);
        let ds = Dataset::new(x, vec![1.0, -1.0], DatasetMeta::classification()).unwrap();
        let shape = NetworkShape::new(2, 2, 0).unwrap();
        let act = ActivationSpec::leaky_relu(0.5).unwrap();
        assert!(make_one_layer(&shape, &act, &ds).is_err());
    }
}

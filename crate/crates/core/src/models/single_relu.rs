use std::collections::BTreeMap;

use super::activation::ActivationSpec;
use super::data::Dataset;
use crate::error::{Error, Result};
use crate::objective::{Evaluation, Objective};
use crate::param::{dot, mean};

/// Single ReLU neuron under the squared loss,
/// `f(w) = (1/n) Σ ½(σ(⟨w, xᵢ⟩) − yᵢ)²`, with the trajectory proxies
///
/// - `g(w) = (1/n) Σ 2[σ(⟨w, xᵢ⟩) − σ(⟨v*, xᵢ⟩)]² σ′(⟨w, xᵢ⟩)`
/// - `h(v) = (1/n) Σ |σ(⟨v*, xᵢ⟩) − yᵢ|`, which does not depend on `v`.
#[derive(Debug, Clone)]
pub struct SingleReluSq {
    data: Dataset,
    teacher: Vec<f64>,
    teacher_out: Vec<f64>,
    h_value: f64,
}

const RELU: ActivationSpec = ActivationSpec {
    kind: super::activation::ActivationKind::Relu,
    c_sigma: 0.0,
    beta: 0.0,
};

/// Build the single-neuron objective; the dataset must carry its teacher `v*`.
pub fn make_single_relu_sq(data: &Dataset) -> Result<SingleReluSq> {
    let teacher = data
        .teacher()
        .ok_or_else(|| Error::Config("single ReLU objective needs a teacher vector in the dataset".into()))?
        .to_vec();
    if teacher.len() != data.d() {
        return Err(Error::Dimension {
            expected: data.d(),
            got: teacher.len(),
        });
    }
    let teacher_out: Vec<f64> = (0..data.n()).map(|i| RELU.value(dot(data.x.row(i), &teacher))).collect();
    let abs_res: Vec<f64> = teacher_out.iter().zip(&data.y).map(|(s, y)| (s - y).abs()).collect();
    Ok(SingleReluSq {
        data: data.clone(),
        teacher,
        teacher_out,
        h_value: mean(&abs_res),
    })
}

impl SingleReluSq {
    pub fn teacher(&self) -> &[f64] {
        &self.teacher
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// `h(v*)`, the comparator value.
    pub fn h_value(&self) -> f64 {
        self.h_value
    }

    pub fn proxy_g_value(&self, w: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.data.n())
            .map(|i| {
                let z = dot(self.data.x.row(i), w);
                let diff = RELU.value(z) - self.teacher_out[i];
                2.0 * diff * diff * RELU.derivative(z)
            })
            .collect();
        mean(&terms)
    }

    /// Smallest `|⟨w, xᵢ⟩|`; finite differences are exact only away from zero.
    pub fn min_abs_preactivation(&self, w: &[f64]) -> f64 {
        (0..self.data.n())
            .map(|i| dot(self.data.x.row(i), w).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl Objective for SingleReluSq {
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
        Some(self.proxy_g_value(w))
    }

    fn proxy_h(&self, _v: &[f64]) -> Option<f64> {
        Some(self.h_value)
    }

    fn has_proxy_g(&self) -> bool {
        true
    }

    fn evaluate(&self, w: &[f64]) -> Evaluation {
        let n = self.data.n();
        let mut losses = Vec::with_capacity(n);
        let mut proxies = Vec::with_capacity(n);
        let mut grad = vec![0.0; self.dim()];
        for i in 0..n {
            let x = self.data.x.row(i);
            let z = dot(x, w);
            let out = RELU.value(z);
            let slope = RELU.derivative(z);
            let r = out - self.data.y[i];
            losses.push(0.5 * r * r);
            let diff = out - self.teacher_out[i];
            proxies.push(2.0 * diff * diff * slope);
            let c = r * slope / n as f64;
            if c != 0.0 {
                for (gj, xj) in grad.iter_mut().zip(x) {
                    *gj += c * xj;
                }
            }
        }
        Evaluation {
            value: mean(&losses),
            gradient: grad,
            proxy_g: Some(mean(&proxies)),
        }
    }

    fn name(&self) -> &str {
        "single_relu_sq"
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n".into(), self.data.n() as f64),
            ("d".into(), self.data.d() as f64),
            ("h_teacher".into(), self.h_value),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::models::data::DatasetMeta;

    fn one_sample() -> SingleReluSq {
        let x = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let meta = DatasetMeta {
            teacher: Some(vec![1.0, 0.0]),
            ..DatasetMeta::regression()
        };
        make_single_relu_sq(&Dataset::new(x, vec![1.0], meta).unwrap()).unwrap()
    }

    #[test]
    fn hand_evaluated_point() {
        let obj = one_sample();
        let w = [2.0, 0.0];
        assert_eq!(obj.value(&w), 0.5);
        assert_eq!(obj.proxy_g(&w), Some(2.0));
        assert_eq!(obj.proxy_h(&w), Some(0.0));
        assert_eq!(obj.gradient(&w), vec![1.0, 0.0]);
    }

    #[test]
    fn interpolation_at_teacher() {
        let obj = one_sample();
        assert_eq!(obj.value(&[1.0, 0.0]), 0.0);
        assert_eq!(obj.proxy_g(&[1.0, 0.0]), Some(0.0));
    }

    #[test]
    fn zero_is_a_stationary_non_minimum() {
        let obj = one_sample();
        assert_eq!(obj.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert!(obj.value(&[0.0, 0.0]) > obj.value(obj.teacher()));
    }

    #[test]
    fn missing_teacher_is_config_error() {
        let x = Matrix::identity(2);
        let ds = Dataset::new(x, vec![1.0, 0.0], DatasetMeta::regression()).unwrap();
        assert!(matches!(make_single_relu_sq(&ds), Err(Error::Config(_))));
    }
}

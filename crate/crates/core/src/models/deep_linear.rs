use std::collections::BTreeMap;

use super::data::{random_orthonormal, rng_from_seed, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{smallest_singular_value, Matrix};
use crate::objective::{Evaluation, Objective};
use crate::param::ParamVector;

/// Deep linear network `N(w; x) = W_L ⋯ W_1 x` under
/// `f(w) = ½‖Y − N(w; X)‖_F²`, with `g = f`.
///
/// `W_i` has shape `widths[i] × widths[i−1]`; the parameter vector is the
/// row-major concatenation of `W_1, …, W_L`.
#[derive(Debug, Clone)]
pub struct DeepLinear {
    x: Matrix,
    y: Matrix,
    widths: Vec<usize>,
    offsets: Vec<usize>,
}

/// Deep linear network on `data`, with a single output fitted to `data.y`.
pub fn make_deep_linear(data: &Dataset, depth: usize, widths: &[usize]) -> Result<DeepLinear> {
    let y = Matrix::new(data.n(), 1, data.y.clone())?;
    make_deep_linear_with_targets(&data.x, &y, depth, widths)
}

/// Deep linear network with a target matrix `Y` (n×k).
pub fn make_deep_linear_with_targets(x: &Matrix, y: &Matrix, depth: usize, widths: &[usize]) -> Result<DeepLinear> {
    if depth == 0 || widths.len() != depth + 1 {
        return Err(Error::Config(format!(
            "depth {depth} needs {} widths, got {}",
            depth + 1,
            widths.len()
        )));
    }
    if widths.contains(&0) {
        return Err(Error::Config("layer widths must be positive".into()));
    }
    if widths[0] != x.cols() {
        return Err(Error::Config(format!(
            "input width {} does not match feature dimension {}",
            widths[0],
            x.cols()
        )));
    }
    if widths[depth] != y.cols() || y.rows() != x.rows() {
        return Err(Error::Config(format!(
            "targets are {}×{}, network maps {} samples to {} outputs",
            y.rows(),
            y.cols(),
            x.rows(),
            widths[depth]
        )));
    }
    let mut offsets = vec![0];
    for i in 1..=depth {
        offsets.push(offsets[i - 1] + widths[i] * widths[i - 1]);
    }
    Ok(DeepLinear {
        x: x.clone(),
        y: y.clone(),
        widths: widths.to_vec(),
        offsets,
    })
}

impl DeepLinear {
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn features(&self) -> &Matrix {
        &self.x
    }

    /// Layer `i` (1-based) as a matrix.
    pub fn layer(&self, w: &[f64], i: usize) -> Matrix {
        let (r, c) = (self.widths[i], self.widths[i - 1]);
        let slice = &w[self.offsets[i - 1]..self.offsets[i]];
        Matrix::new(r, c, slice.to_vec()).expect("layer slice has the layer's size")
    }

    /// Concatenate layers into a parameter vector.
    pub fn pack(&self, layers: &[Matrix]) -> Result<ParamVector> {
        if layers.len() != self.depth() {
            return Err(Error::Dimension {
                expected: self.depth(),
                got: layers.len(),
            });
        }
        let mut out = Vec::with_capacity(self.dim());
        for (i, m) in layers.iter().enumerate() {
            if m.rows() != self.widths[i + 1] || m.cols() != self.widths[i] {
                return Err(Error::Config(format!("layer {} has the wrong shape", i + 1)));
            }
            out.extend_from_slice(m.as_slice());
        }
        ParamVector::new(out)
    }

    /// `min_i s_min(W_i)`.
    pub fn tau_min(&self, w: &[f64]) -> f64 {
        (1..=self.depth())
            .map(|i| smallest_singular_value(&self.layer(w, i)).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Each `W_i` a random partial isometry scaled by `scale`, so every layer
    /// has all singular values equal to `scale`.
    pub fn orthogonal_init(&self, scale: f64, seed: u64) -> ParamVector {
        let mut rng = rng_from_seed(seed);
        let layers: Vec<Matrix> = (1..=self.depth())
            .map(|i| {
                let (r, c) = (self.widths[i], self.widths[i - 1]);
                let q = if r >= c {
                    random_orthonormal(&mut rng, r, c)
                } else {
                    random_orthonormal(&mut rng, c, r).transpose()
                };
                let data = q.as_slice().iter().map(|v| v * scale).collect();
                Matrix::new(r, c, data).expect("shape preserved")
            })
            .collect();
        self.pack(&layers).expect("init layers match widths")
    }

    /// `N(w; X)`, one row per sample.
    pub fn outputs(&self, w: &[f64]) -> Matrix {
        self.forward(w).pop().expect("at least one layer")
    }

    fn forward(&self, w: &[f64]) -> Vec<Matrix> {
        let mut acts = vec![self.x.clone()];
        for i in 1..=self.depth() {
            let next = acts[i - 1].matmul(&self.layer(w, i).transpose()).expect("widths chain");
            acts.push(next);
        }
        acts
    }
}

impl Objective for DeepLinear {
    fn dim(&self) -> usize {
        self.offsets[self.depth()]
    }

    fn value(&self, w: &[f64]) -> f64 {
        let out = self.outputs(w);
        0.5 * out
            .as_slice()
            .iter()
            .zip(self.y.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
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
        let acts = self.forward(w);
        let depth = self.depth();
        let resid: Vec<f64> = acts[depth]
            .as_slice()
            .iter()
            .zip(self.y.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        let value = 0.5 * resid.iter().map(|r| r * r).sum::<f64>();
        let mut back = Matrix::new(self.x.rows(), self.widths[depth], resid).expect("residual shape");
        let mut grad = vec![0.0; self.dim()];
        for i in (1..=depth).rev() {
            let gw = back.transpose().matmul(&acts[i - 1]).expect("widths chain");
            grad[self.offsets[i - 1]..self.offsets[i]].copy_from_slice(gw.as_slice());
            if i > 1 {
                back = back.matmul(&self.layer(w, i)).expect("widths chain");
            }
        }
        Evaluation {
            value,
            gradient: grad,
            proxy_g: Some(value),
        }
    }

    fn name(&self) -> &str {
        "deep_linear"
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n".into(), self.x.rows() as f64),
            ("depth".into(), self.depth() as f64),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layers_interpolate() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let net = make_deep_linear_with_targets(&x, &x, 2, &[2, 2, 2]).unwrap();
        let w = net.pack(&[Matrix::identity(2), Matrix::identity(2)]).unwrap();
        assert_eq!(net.value(&w), 0.0);
        assert_eq!(net.gradient(&w), vec![0.0; 8]);
        assert_eq!(net.tau_min(&w), 1.0);
    }

    #[test]
    fn single_layer_is_least_squares() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.0, 1.0]]).unwrap();
        let y = Matrix::new(3, 1, vec![1.0, 0.0, 2.0]).unwrap();
        let net = make_deep_linear_with_targets(&x, &y, 1, &[2, 1]).unwrap();
        let w = [0.5, -1.0];
        // Xᵀ(Xw − y) with Xw = (−1.5, 2.5, −1).
        let r = [-2.5, 2.5, -3.0];
        let expect = x.tmatvec(&r).unwrap();
        assert_eq!(net.gradient(&w), expect);
    }

    #[test]
    fn rejects_incompatible_widths() {
        let x = Matrix::identity(2);
        let y = Matrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            make_deep_linear_with_targets(&x, &y, 2, &[2, 2]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_deep_linear_with_targets(&x, &y, 2, &[3, 2, 1]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_deep_linear_with_targets(&x, &y, 2, &[2, 2, 2]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn orthogonal_init_sets_tau() {
        let x = Matrix::identity(3);
        let y = Matrix::new(3, 1, vec![1.0, 0.0, -1.0]).unwrap();
        let net = make_deep_linear_with_targets(&x, &y, 3, &[3, 4, 2, 1]).unwrap();
        let w = net.orthogonal_init(0.7, 5);
        assert_eq!(w.dim(), 12 + 8 + 2);
        assert!((net.tau_min(&w) - 0.7).abs() < 1e-12);
    }
}

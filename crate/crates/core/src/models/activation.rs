use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    LeakyRelu,
    SmoothLeaky,
}

/// Activation function with its slope bound and smoothing scale.
///
/// - `relu`: `max(0, z)`, with `σ′(0) = 0`.
/// - `leaky_relu`: `max(c_σ z, z)`, with `σ′(0) = c_σ`.
/// - `smooth_leaky`: `c_σ z + (1 − c_σ) β log(1 + e^{z/β})`, whose derivative
///   `c_σ + (1 − c_σ)/(1 + e^{−z/β})` stays in `[c_σ, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub c_sigma: f64,
    pub beta: f64,
}

pub const DEFAULT_SMOOTHING: f64 = 0.1;

impl ActivationSpec {
    pub fn relu() -> Self {
        Self {
            kind: ActivationKind::Relu,
            c_sigma: 0.0,
            beta: 0.0,
        }
    }

    pub fn leaky_relu(c_sigma: f64) -> Result<Self> {
        check_slope(c_sigma)?;
        Ok(Self {
            kind: ActivationKind::LeakyRelu,
            c_sigma,
            beta: 0.0,
        })
    }

    pub fn smooth_leaky(c_sigma: f64, beta: f64) -> Result<Self> {
        check_slope(c_sigma)?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Precondition(format!("smoothing scale must be positive, got {beta}")));
        }
        Ok(Self {
            kind: ActivationKind::SmoothLeaky,
            c_sigma,
            beta,
        })
    }

    pub fn value(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    self.c_sigma * z
                }
            }
            ActivationKind::SmoothLeaky => {
                self.c_sigma * z + (1.0 - self.c_sigma) * self.beta * softplus(z / self.beta)
            }
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    self.c_sigma
                }
            }
            ActivationKind::SmoothLeaky => self.c_sigma + (1.0 - self.c_sigma) * sigmoid(z / self.beta),
        }
    }

    /// `sup |σ″|`, or `None` for the piecewise-linear kinds.
    pub fn curvature_bound(&self) -> Option<f64> {
        match self.kind {
            ActivationKind::SmoothLeaky => Some((1.0 - self.c_sigma) / (4.0 * self.beta)),
            _ => None,
        }
    }

    /// `sup |σ′|`.
    pub fn slope_bound(&self) -> f64 {
        1.0
    }

    /// Inverse of a strictly increasing activation.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        match self.kind {
            ActivationKind::LeakyRelu => Some(if y > 0.0 { y } else { y / self.c_sigma }),
            _ => None,
        }
    }
}

fn check_slope(c_sigma: f64) -> Result<()> {
    if c_sigma > 0.0 && c_sigma <= 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("c_sigma must lie in (0, 1], got {c_sigma}")))
    }
}

/// `1 / (1 + e^{−u})` without overflow.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Logistic loss `ℓ(z) = log(1 + e^{−z})`.
pub fn logistic_loss(z: f64) -> f64 {
    softplus(-z)
}

/// `ℓ′(z) = −1/(1 + e^{z})`, always in `(−1, 0)`.
pub fn logistic_loss_derivative(z: f64) -> f64 {
    -sigmoid(-z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_convention_at_zero() {
        let r = ActivationSpec::relu();
        assert_eq!(r.derivative(0.0), 0.0);
        assert_eq!(r.value(-3.0), 0.0);
        let l = ActivationSpec::leaky_relu(0.1).unwrap();
        assert_eq!(l.derivative(0.0), 0.1);
        assert_eq!(l.value(-2.0), -0.2);
    }

    #[test]
    fn smooth_leaky_derivative_bounds() {
        let s = ActivationSpec::smooth_leaky(0.2, 0.1).unwrap();
        for k in 0..=100_000 {
            let z = -100.0 + 200.0 * f64::from(k) / 100_000.0;
            let d = s.derivative(z);
            assert!((0.2..=1.0).contains(&d), "σ′({z}) = {d}");
        }
        assert!((s.derivative(0.0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn smooth_leaky_is_finite_far_out() {
        let s = ActivationSpec::smooth_leaky(0.2, 0.1).unwrap();
        assert!((s.value(1000.0) - 1000.0).abs() < 1e-9);
        assert!((s.value(-1000.0) + 200.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ActivationSpec::leaky_relu(0.0).is_err());
        assert!(ActivationSpec::leaky_relu(1.5).is_err());
        assert!(ActivationSpec::smooth_leaky(0.5, 0.0).is_err());
    }

    #[test]
    fn logistic_values() {
        assert!((logistic_loss(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(logistic_loss_derivative(0.0), -0.5);
        assert!(logistic_loss(800.0) >= 0.0);
        assert!((logistic_loss(-800.0) - 800.0).abs() < 1e-9);
    }
}

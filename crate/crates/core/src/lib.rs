//! Proxy-convexity and proxy Polyak–Łojasiewicz tooling for gradient descent.
//!
//! A function `f` is `(g, h)`-proxy convex when `⟨∇f(w), w − v⟩ ≥ g(w) − h(v)`
//! for all `w, v`, and satisfies a `(g, ξ, α, μ)` proxy PL inequality when
//! `‖∇f(w)‖^α ≥ ½μ(g(w) − ξ)`. Either condition turns plain gradient descent
//! on `f` into a guarantee on the proxy `g`. This crate provides:
//!
//! - [`linalg`]: small dense matrices, Jacobi singular values, closed-form PL constants;
//! - [`objective`]: the [`Objective`] trait and a finite-difference gradient oracle;
//! - [`optimizer`]: gradient descent with trajectory recording, guarantee schedules
//!   and bound validation;
//! - [`certify`]: sample-based checks of the proxy conditions and constant estimators;
//! - [`models`]: neurons and shallow/deep networks with analytic gradients, their
//!   proxies, and synthetic data generators.
//!
//! Certification is empirical: a passing report means no violation was found
//! on the sampled points, not that a condition is proven.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod linalg;
pub mod models;
pub mod objective;
pub mod optimizer;
pub mod param;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use objective::{Objective, ProxyPlParams};
pub use param::ParamVector;

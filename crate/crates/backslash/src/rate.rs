//! The generalized-Gaussian rate measure (DGGR), its soft-clipped variant,
//! the analytic rate gradient, and the rate-distortion cost combiner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gg::{SHAPE_MAX, SHAPE_MIN};
use crate::numeric::CompensatedSum;

/// How the regularizer picks its shape parameter each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeMode {
    /// Re-estimate the shape from the current parameters every batch.
    Adaptive,
    /// Keep a fixed shape; `Fixed(1.0)` and `Fixed(2.0)` reproduce plain
    /// L1 / L2 regularization.
    Fixed(f64),
}

/// Rate-term configuration: Lagrange multiplier, soft-clipping constant,
/// shape mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub shape_mode: ShapeMode,
}

impl RateConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-3;

    pub fn new(lambda: f64, epsilon: f64, shape_mode: ShapeMode) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Domain(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::Domain(format!(
                "epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        if let ShapeMode::Fixed(nu) = shape_mode {
            if !(SHAPE_MIN..=SHAPE_MAX).contains(&nu) {
                return Err(Error::Domain(format!(
                    "fixed shape must lie in [{SHAPE_MIN}, {SHAPE_MAX}], got {nu}"
                )));
            }
        }
        Ok(Self {
            lambda,
            epsilon,
            shape_mode,
        })
    }
}

fn check_shape(shape: f64) -> Result<()> {
    if !shape.is_finite() || !(SHAPE_MIN..=SHAPE_MAX).contains(&shape) {
        return Err(Error::Domain(format!(
            "shape must lie in [{SHAPE_MIN}, {SHAPE_MAX}], got {shape}"
        )));
    }
    Ok(())
}

fn check_nonempty(params: &[f64]) -> Result<()> {
    if params.is_empty() {
        return Err(Error::Domain("rate of an empty parameter set".into()));
    }
    Ok(())
}

/// Rate measure `mean(|p|^shape)`: proportional to the information content
/// of parameters under a generalized-Gaussian model.
pub fn dggr(params: &[f64], shape: f64) -> Result<f64> {
    check_nonempty(params)?;
    check_shape(shape)?;
    let mut acc = CompensatedSum::new();
    for &p in params {
        acc.add(p.abs().powf(shape));
    }
    Ok(acc.value() / params.len() as f64)
}

/// Soft-clipped rate `mean((|p| + epsilon)^shape)`. The offset keeps the
/// gradient finite at zero for shapes below 1.
pub fn soft_rate(params: &[f64], shape: f64, epsilon: f64) -> Result<f64> {
    check_nonempty(params)?;
    check_shape(shape)?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Domain(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    let mut acc = CompensatedSum::new();
    for &p in params {
        acc.add((p.abs() + epsilon).powf(shape));
    }
    Ok(acc.value() / params.len() as f64)
}

/// Analytic gradient of [`soft_rate`] with respect to each parameter:
/// `(shape / n) * sign(p) * (|p| + epsilon)^(shape - 1)`, with `sign(0) = 0`.
/// The shape is treated as a constant; no gradient flows through its estimate.
pub fn soft_rate_grad(params: &[f64], shape: f64, epsilon: f64) -> Result<Vec<f64>> {
    check_nonempty(params)?;
    check_shape(shape)?;
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Domain(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    let scale = shape / params.len() as f64;
    Ok(params
        .iter()
        .map(|&p| {
            if p == 0.0 {
                0.0
            } else {
                scale * p.signum() * (p.abs() + epsilon).powf(shape - 1.0)
            }
        })
        .collect())
}

/// Combined rate-distortion cost `distortion + lambda * rate`.
pub fn rd_cost(distortion: f64, rate: f64, lambda: f64) -> Result<f64> {
    if !distortion.is_finite() || !rate.is_finite() || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "rd_cost requires finite inputs, got D={distortion}, R={rate}, lambda={lambda}"
        )));
    }
    Ok(distortion + lambda * rate)
}

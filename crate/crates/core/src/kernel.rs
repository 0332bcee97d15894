//! Matérn-5/2 covariance with per-dimension lengthscales.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fixed nugget added to the diagonal of every training covariance.
pub const NUGGET: f64 = 1.0e-6;

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparameters {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub nugget: f64,
}

impl GpHyperparameters {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        let hp = Self { lengthscales, signal_variance, nugget: NUGGET };
        hp.validate()?;
        Ok(hp)
    }

    pub fn isotropic(d: usize, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(vec![lengthscale; d], signal_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if self.lengthscales.is_empty() || !self.lengthscales.iter().all(|&l| ok(l)) {
            return Err(invalid(format!("lengthscales must be positive and finite: {:?}", self.lengthscales)));
        }
        if !ok(self.signal_variance) {
            return Err(invalid(format!("signal variance must be positive and finite: {}", self.signal_variance)));
        }
        if self.nugget != NUGGET {
            return Err(invalid("nugget is fixed at 1e-6"));
        }
        Ok(())
    }
}

/// Matérn-5/2 correlation as a function of the scaled distance `rho`.
#[inline]
pub(crate) fn matern52_profile(rho: f64) -> f64 {
    let s = SQRT5 * rho;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// `-(1/ρ) dk/dρ` divided by the signal variance; finite at zero distance.
#[inline]
pub(crate) fn matern52_radial_derivative(rho: f64) -> f64 {
    let s = SQRT5 * rho;
    (5.0 / 3.0) * (1.0 + s) * (-s).exp()
}

/// Scaled distance between two points that were already divided by the lengthscales.
#[inline]
pub(crate) fn scaled_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Covariance `k(x, x')` between two input points.
pub fn matern52(x: &[f64], xp: &[f64], hp: &GpHyperparameters) -> Result<f64> {
    if x.len() != hp.dim() || xp.len() != hp.dim() {
        return Err(invalid("input dimension does not match lengthscales"));
    }
    if !x.iter().chain(xp).all(|v| v.is_finite()) {
        return Err(invalid("non-finite kernel input"));
    }
    hp.validate()?;
    let rho = x
        .iter()
        .zip(xp)
        .zip(&hp.lengthscales)
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(hp.signal_variance * matern52_profile(rho))
}

//! Special functions and random-variate kernels used by the samplers.
//!
//! GIG parameters follow the `(ν, a, b)` convention with density
//! proportional to `x^(ν-1) exp(-(a/x + b x)/2)` on `x > 0`.

mod bessel;
mod gig;
mod invgamma;

pub use bessel::{bessel_k_ratio, log_bessel_k};
pub use gig::{
    gig_moments, gig_second_moments, sample_gig, sample_inverse_gaussian, sample_truncated_gig,
    truncated_gig_expectations, GigParams,
};
pub use invgamma::{sample_inverse_gamma, sample_truncated_inverse_gamma, truncated_ig_expectations};

use crate::error::{Error, Result};

/// Closed interval `[lower, upper]` that truncates the local scales.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationBounds {
    pub lower: f64,
    pub upper: f64,
}

impl TruncationBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) {
            return Err(Error::invalid(format!(
                "truncation bounds must satisfy 0 < lower < upper < inf, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

impl Default for TruncationBounds {
    fn default() -> Self {
        Self {
            lower: 1e-10,
            upper: 1e10,
        }
    }
}

fn check_level(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("quantile level must lie in (0, 1), got {p}")))
    }
}

#[inline]
fn rho(r: f64, p: f64) -> f64 {
    r * (p - if r < 0.0 { 1.0 } else { 0.0 })
}

/// Check loss `Σ r_i (p - 1[r_i < 0])`.
pub fn check_loss(r: &[f64], p: f64) -> Result<f64> {
    check_level(p)?;
    Ok(r.iter().map(|&x| rho(x, p)).sum())
}

/// Log density of the asymmetric Laplace distribution with location 0,
/// quantile level `p` and scale `σ²`.
pub fn al_log_density(x: f64, p: f64, sigma2: f64) -> Result<f64> {
    check_level(p)?;
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {sigma2}")));
    }
    Ok((p * (1.0 - p) / sigma2).ln() - rho(x / sigma2, p))
}

//! Inverse gamma variates, optionally truncated to an interval.
//!
//! `X ~ IG(α, β)` has density proportional to `x^(-α-1) exp(-β/x)`, so
//! `1/X ~ Gamma(α, rate β)`. Truncating `X` to `[l, h]` truncates `1/X` to
//! `[1/h, 1/l]`; all computations below work with `Y = 1/X`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use super::TruncationBounds;
use crate::error::{Error, Result};

fn check(shape: f64, rate: f64) -> Result<()> {
    if shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "inverse gamma needs positive finite shape and rate, got ({shape}, {rate})"
        )))
    }
}

/// Untruncated inverse gamma draw.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check(shape, rate)?;
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(rate / g.sample(rng))
}

/// `1/x - 1/(e^x - 1)`, which tends to 1/2 as `x → 0`.
fn exp_mean_offset(x: f64) -> f64 {
    if x < 0.1 {
        let x2 = x * x;
        0.5 - x / 12.0 + x * x2 / 720.0 - x * x2 * x2 / 30240.0 + x * x2 * x2 * x2 / 1209600.0
    } else {
        1.0 / x - 1.0 / x.exp_m1()
    }
}

/// Gamma(α, 1) mass on `[lo, hi]`, using whichever tail avoids cancellation.
fn gamma_mass(alpha: f64, lo: f64, hi: f64) -> f64 {
    if lo > alpha {
        gamma_ur(alpha, lo) - gamma_ur(alpha, hi)
    } else {
        gamma_lr(alpha, hi) - gamma_lr(alpha, lo)
    }
}

/// `E[1/X]` for `X ~ IG(shape, rate)` restricted to `[lower, upper]`.
pub fn truncated_ig_expectations(shape: f64, rate: f64, t: &TruncationBounds) -> Result<f64> {
    check(shape, rate)?;
    let (ylo, yhi) = (1.0 / t.upper, 1.0 / t.lower);
    if shape == 1.0 {
        // truncated exponential with rate β on [ylo, yhi]
        let d = yhi - ylo;
        return Ok(ylo + d * exp_mean_offset(rate * d));
    }
    let den = gamma_mass(shape, rate * ylo, rate * yhi);
    let num = gamma_mass(shape + 1.0, rate * ylo, rate * yhi);
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateTruncation(format!(
            "IG({shape}, {rate}) has no representable mass on [{}, {}]",
            t.lower, t.upper
        )));
    }
    Ok((shape / rate * num / den).clamp(ylo, yhi))
}

/// Draw from `IG(shape, rate)` restricted to `[lower, upper]`. Shape 1 uses
/// the closed-form inverse CDF of the truncated exponential; other shapes
/// use rejection with an incomplete-gamma inversion fallback.
pub fn sample_truncated_inverse_gamma<R: Rng + ?Sized>(
    shape: f64,
    rate: f64,
    t: &TruncationBounds,
    rng: &mut R,
) -> Result<f64> {
    check(shape, rate)?;
    let (ylo, yhi) = (1.0 / t.upper, 1.0 / t.lower);
    let y = if shape == 1.0 {
        let u: f64 = rng.random();
        let span = -(-rate * (yhi - ylo)).exp_m1();
        ylo - (-u * span).ln_1p() / rate
    } else {
        let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::invalid(e.to_string()))?;
        match (0..64).map(|_| g.sample(rng)).find(|y| *y >= ylo && *y <= yhi) {
            Some(y) => y,
            None => gamma_inverse_cdf(shape, rate, ylo, yhi, rng.random())?,
        }
    };
    Ok((1.0 / y.clamp(ylo, yhi)).clamp(t.lower, t.upper))
}

fn gamma_inverse_cdf(shape: f64, rate: f64, ylo: f64, yhi: f64, u: f64) -> Result<f64> {
    let total = gamma_mass(shape, rate * ylo, rate * yhi);
    if !(total > 0.0) {
        return Err(Error::DegenerateTruncation(format!(
            "Gamma({shape}, {rate}) has no representable mass on [{ylo}, {yhi}]"
        )));
    }
    let target = u * total;
    // bisection on the log axis: the interval may span many decades
    let (mut a, mut b) = (ylo.ln(), yhi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if gamma_mass(shape, rate * ylo, rate * mid.exp()) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

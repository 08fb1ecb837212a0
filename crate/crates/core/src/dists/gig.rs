//! Generalized inverse Gaussian distribution: moments, exact sampling and
//! the versions truncated to an interval.
//!
//! Sampling follows Hörmann and Leydold's ratio-of-uniforms schemes (with
//! and without mode shift) and their concave-hat method for small `ω`, plus
//! an inverse-Gaussian fast path at `ν = ±1/2`. Truncated quantities are
//! computed on the log axis `u = ln x`, where every kernel
//! `exp(μu - (a e^{-u} + b e^u)/2)` is log-concave.

use rand::Rng;
use rand_distr::StandardNormal;

use super::bessel::{log_bessel_k, ratio};
use super::TruncationBounds;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_panels};

/// GIG parameters: density proportional to `x^(ν-1) exp(-(a/x + b x)/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GigParams {
    pub nu: f64,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    pub fn new(nu: f64, a: f64, b: f64) -> Result<Self> {
        if !nu.is_finite() || !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!(
                "GIG parameters need finite nu and a, b > 0, got ({nu}, {a}, {b})"
            )));
        }
        Ok(Self { nu, a, b })
    }

    /// Scale `√(a/b)`.
    pub fn scale(&self) -> f64 {
        (self.a / self.b).sqrt()
    }

    /// Concentration `√(ab)`.
    pub fn concentration(&self) -> f64 {
        (self.a * self.b).sqrt()
    }

    /// Log normalizing constant `ln ∫ x^(ν-1) exp(-(a/x + bx)/2) dx`.
    pub fn log_normalizer(&self) -> f64 {
        std::f64::consts::LN_2
            + log_bessel_k(self.nu, self.concentration()).expect("valid GIG parameters")
            + self.nu * self.scale().ln()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.nu - 1.0) * x.ln() - 0.5 * (self.a / x + self.b * x) - self.log_normalizer()
    }
}

/// `(E[X], E[1/X])`.
pub fn gig_moments(g: &GigParams) -> (f64, f64) {
    let s = g.scale();
    let w = g.concentration();
    (s * ratio(g.nu, w), 1.0 / (s * ratio(g.nu - 1.0, w)))
}

/// `(E[X²], E[1/X²])`.
pub fn gig_second_moments(g: &GigParams) -> (f64, f64) {
    let s = g.scale();
    let w = g.concentration();
    (
        s * s * ratio(g.nu, w) * ratio(g.nu + 1.0, w),
        1.0 / (s * s * ratio(g.nu - 1.0, w) * ratio(g.nu - 2.0, w)),
    )
}

/// Inverse Gaussian draw with mean `mu` and shape `lambda`.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    let r = mu * n * n / (2.0 * lambda);
    // smaller root of the quadratic, written without cancellation
    let x = mu / (1.0 + r + (r * (r + 2.0)).sqrt());
    let u: f64 = rng.random();
    if u * (mu + x) <= mu {
        x
    } else {
        mu * mu / x
    }
}

/// Exact GIG draw.
pub fn sample_gig<R: Rng + ?Sized>(g: &GigParams, rng: &mut R) -> f64 {
    if g.nu == -0.5 {
        return sample_inverse_gaussian(g.scale(), g.a, rng);
    }
    if g.nu == 0.5 {
        return 1.0 / sample_inverse_gaussian(1.0 / g.scale(), g.b, rng);
    }
    let lambda = g.nu.abs();
    let omega = g.concentration();
    let x = if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    };
    if g.nu < 0.0 {
        g.scale() / x
    } else {
        g.scale() * x
    }
}

/// Mode of `x^(λ-1) exp(-ω(x + 1/x)/2)`.
fn standard_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        ((lambda - 1.0).hypot(omega) + (lambda - 1.0)) / omega
    } else {
        omega / ((1.0 - lambda).hypot(omega) + (1.0 - lambda))
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = standard_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + (lambda + 1.0).hypot(omega)) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = standard_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // the bounding rectangle comes from the two relevant roots of a cubic
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a three-piece hat; requires `0 ≤ λ < 1`, `ω ≤ 1`.
fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = standard_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let lo = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Log-concave kernel `μu - (a e^{-u} + b e^u)/2` on the log axis.
#[derive(Clone, Copy)]
struct LogKernel {
    mu: f64,
    a: f64,
    b: f64,
}

// Drop in log-kernel below which the remaining mass is ignored.
const CLIP: f64 = 60.0;
// Drop at both bounds that makes truncation numerically irrelevant.
const NEGLIGIBLE: f64 = 40.0;

impl LogKernel {
    fn eval(&self, u: f64) -> f64 {
        self.mu * u - 0.5 * (self.a * (-u).exp() + self.b * u.exp())
    }

    fn mode(&self) -> f64 {
        let r = self.mu.hypot((self.a * self.b).sqrt());
        if self.mu >= 0.0 {
            ((self.mu + r) / self.b).ln()
        } else {
            (self.a / (r - self.mu)).ln()
        }
    }

    /// For a concave kernel with its mode inside `[lo, hi]` and a drop of
    /// `Δ` at each bound, the mass beyond either bound is at most `e^{-Δ}`
    /// times the mass inside.
    fn tails_negligible(&self, lo: f64, hi: f64) -> bool {
        let m = self.mode();
        if !(m > lo && m < hi) {
            return false;
        }
        let top = self.eval(m);
        top - self.eval(lo) >= NEGLIGIBLE && top - self.eval(hi) >= NEGLIGIBLE
    }

    /// Sub-interval of `[lo, hi]` where the kernel is within `CLIP` of its
    /// maximum on `[lo, hi]`, together with the maximizer and maximum.
    fn effective_range(&self, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
        let c = self.mode().clamp(lo, hi);
        let top = self.eval(c);
        let target = top - CLIP;
        let edge = |inner: f64, outer: f64| -> f64 {
            if self.eval(outer) >= target {
                return outer;
            }
            let (mut keep, mut cut) = (inner, outer);
            for _ in 0..200 {
                let mid = 0.5 * (keep + cut);
                if mid == keep || mid == cut {
                    break;
                }
                if self.eval(mid) >= target {
                    keep = mid;
                } else {
                    cut = mid;
                }
            }
            cut
        };
        (edge(c, lo), c, edge(c, hi), top)
    }

    /// `ln ∫_lo^hi exp(kernel(u)) du`.
    fn log_integral(&self, lo: f64, hi: f64) -> f64 {
        let (l, c, h, top) = self.effective_range(lo, hi);
        let f = |u: f64| (self.eval(u) - top).exp();
        let mut breaks = vec![l];
        if c > l && c < h {
            breaks.push(c);
        }
        breaks.push(h);
        let r = integrate_panels(&f, &breaks, 1e-300, 1e-13, 4000);
        top + r.value.ln()
    }
}

fn kernels(g: &GigParams) -> [LogKernel; 3] {
    [-1.0, 0.0, 1.0].map(|d| LogKernel {
        mu: g.nu + d,
        a: g.a,
        b: g.b,
    })
}

/// `(E[X], E[1/X])` of the GIG restricted to `[lower, upper]`.
pub fn truncated_gig_expectations(g: &GigParams, t: &TruncationBounds) -> Result<(f64, f64)> {
    let (lo, hi) = (t.lower.ln(), t.upper.ln());
    let [km, k0, kp] = kernels(g);
    if km.tails_negligible(lo, hi) && k0.tails_negligible(lo, hi) && kp.tails_negligible(lo, hi) {
        return Ok(gig_moments(g));
    }
    let i0 = k0.log_integral(lo, hi);
    if !i0.is_finite() {
        return Err(Error::DegenerateTruncation(format!(
            "GIG({}, {}, {}) has no representable mass on [{}, {}]",
            g.nu, g.a, g.b, t.lower, t.upper
        )));
    }
    let mean = (kp.log_integral(lo, hi) - i0).exp();
    let mean_inv = (km.log_integral(lo, hi) - i0).exp();
    if !(mean.is_finite() && mean_inv.is_finite()) {
        return Err(Error::NonFinite("truncated GIG expectations"));
    }
    Ok((
        mean.clamp(t.lower, t.upper),
        mean_inv.clamp(1.0 / t.upper, 1.0 / t.lower),
    ))
}

/// Draw from the GIG restricted to `[lower, upper]`: rejection from the
/// untruncated sampler, falling back to numerical inversion of the CDF when
/// the interval carries little mass.
pub fn sample_truncated_gig<R: Rng + ?Sized>(g: &GigParams, t: &TruncationBounds, rng: &mut R) -> Result<f64> {
    for _ in 0..64 {
        let x = sample_gig(g, rng);
        if t.contains(x) {
            return Ok(x);
        }
    }
    let k = LogKernel {
        mu: g.nu,
        a: g.a,
        b: g.b,
    };
    inverse_cdf_draw(&k, t, rng)
}

fn inverse_cdf_draw<R: Rng + ?Sized>(k: &LogKernel, t: &TruncationBounds, rng: &mut R) -> Result<f64> {
    let (lo, hi) = (t.lower.ln(), t.upper.ln());
    let (l, _, h, top) = k.effective_range(lo, hi);
    let f = |u: f64| (k.eval(u) - top).exp();
    const PANELS: usize = 64;
    let width = (h - l) / PANELS as f64;
    let mut cum = Vec::with_capacity(PANELS + 1);
    cum.push(0.0);
    for i in 0..PANELS {
        let a = l + width * i as f64;
        let r = integrate(f, a, a + width, 1e-300, 1e-12);
        cum.push(cum[i] + r.value);
    }
    let total = cum[PANELS];
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateTruncation(format!(
            "GIG({}, {}, {}) has no representable mass on [{}, {}]",
            k.mu, k.a, k.b, t.lower, t.upper
        )));
    }
    let target = rng.random::<f64>() * total;
    let i = cum.partition_point(|&c| c <= target).clamp(1, PANELS) - 1;
    let rest = target - cum[i];
    let (mut a, mut b) = (l + width * i as f64, l + width * (i + 1) as f64);
    let start = a;
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if integrate(f, start, mid, 1e-300, 1e-12).value < rest {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b)).exp().clamp(t.lower, t.upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_order_moments_closed_form() {
        let g = GigParams::new(0.5, 4.0, 1.0).unwrap();
        let (m, mi) = gig_moments(&g);
        assert!((m - 3.0).abs() < 1e-14);
        assert!((mi - 0.5).abs() < 1e-14);
        // E[1/X] = √(b/a) R_ν - 2ν/a as well
        let alt = (g.b / g.a).sqrt() * ratio(0.5, 2.0) - 2.0 * 0.5 / g.a;
        assert!((mi - alt).abs() < 1e-14);
    }

    #[test]
    fn sampler_is_deterministic() {
        let g = GigParams::new(1.3, 0.7, 2.0).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..50).map(|_| sample_gig(&g, &mut r1)).collect();
        let b: Vec<f64> = (0..50).map(|_| sample_gig(&g, &mut r2)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn every_branch_matches_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // concave hat, ROU without and with shift, negative order
        for &(nu, a, b) in &[
            (0.3, 0.01, 0.01),
            (0.8, 1.0, 0.5),
            (4.0, 2.0, 3.0),
            (-2.5, 1.0, 1.0),
            (0.0, 0.05, 0.02),
        ] {
            let g = GigParams::new(nu, a, b).unwrap();
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| sample_gig(&g, &mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let (m, _) = gig_moments(&g);
            assert!(
                (mean - m).abs() < 4.0 * (var / n as f64).sqrt(),
                "{nu} {a} {b}: {mean} vs {m}"
            );
        }
    }

    #[test]
    fn truncated_mass_one_recovers_untruncated() {
        let g = GigParams::new(0.5, 2.0, 3.0).unwrap();
        let t = TruncationBounds::default();
        let (m, mi) = truncated_gig_expectations(&g, &t).unwrap();
        let (m0, mi0) = gig_moments(&g);
        assert_eq!((m, mi), (m0, mi0));
        // forcing the quadrature path on a wide interval agrees too
        let k = kernels(&g);
        let (lo, hi) = ((1e-10f64).ln(), (1e10f64).ln());
        let mq = (k[2].log_integral(lo, hi) - k[1].log_integral(lo, hi)).exp();
        assert!((mq / m0 - 1.0).abs() < 1e-10);
        let log_z = k[1].log_integral(lo, hi);
        assert!((log_z - g.log_normalizer()).abs() < 1e-10);
    }

    #[test]
    fn inverse_cdf_fallback_stays_in_bounds() {
        // interval far in the right tail: rejection essentially never hits
        let g = GigParams::new(0.5, 4.0, 1.0).unwrap();
        let t = TruncationBounds::new(60.0, 61.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..400)
            .map(|_| sample_truncated_gig(&g, &t, &mut rng).unwrap())
            .collect();
        assert!(xs.iter().all(|&x| t.contains(x)));
        // density ∝ x^{-1/2} e^{-x/2 - 2/x} is nearly exponential(1/2) here
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let (want, _) = truncated_gig_expectations(&g, &t).unwrap();
        assert!((mean - want).abs() < 0.05);
    }
}

//! Ratios and logarithms of modified Bessel functions of the second kind.
//!
//! Only ratios `K_{ν+1}(x)/K_ν(x)` are propagated: they stay O(1 + ν/x)
//! for orders in the thousands where `K_ν` itself overflows. A base pair at
//! fractional order `μ ∈ [-1/2, 1/2)` comes from Temme's series (`x < 2`)
//! or Steed's continued fraction (`x ≥ 2`); integer steps then follow
//! `R_ν = 1/R_{ν-1} + 2ν/x`.

use crate::error::{Error, Result};

const G1_DAT: [f64; 14] = [
    -1.145_164_083_662_683,
    0.006_360_853_113_470_843,
    0.001_862_451_930_072_068_4,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_038,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_210_3e-14,
    -7.988_390_576_932_36e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

const G2_DAT: [f64; 15] = [
    1.882_645_524_949_671_9,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769_6e-18,
    -7.522_524_321_825_39e-20,
];

/// Chebyshev series on `[-1, 1]`.
fn cheb_eval(c: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let (mut d, mut dd) = (0.0, 0.0);
    for &cj in c[1..].iter().rev() {
        let tmp = d;
        d = y2 * d - dd + cj;
        dd = tmp;
    }
    y * d - dd + 0.5 * c[0]
}

/// `(1/Γ(1+μ), 1/Γ(1-μ), g1, g2)` for `|μ| ≤ 1/2`.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let y = 4.0 * mu.abs() - 1.0;
    let g1 = cheb_eval(&G1_DAT, y);
    let g2 = cheb_eval(&G2_DAT, y);
    (1.0 / (g2 - mu * g1), 1.0 / (g2 + mu * g1), g1, g2)
}

/// `e^x K_μ(x)` and `e^x K_{μ+1}(x)` by Temme's series, `x < 2`.
fn k_scaled_temme(mu: f64, x: f64) -> (f64, f64) {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = std::f64::consts::PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinhrat = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let (g_1pmu, g_1mmu, g1, g2) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * g_1pmu;
    let mut qk = 0.5 * half_x_mu * g_1mmu;
    let mut hk = pk;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = hk;
    for k in 1..15000 {
        let k = k as f64;
        fk = (k * fk + pk + qk) / (k * k - mu * mu);
        ck *= half_x * half_x / k;
        pk /= k - mu;
        qk /= k + mu;
        hk = -k * fk + pk;
        let del0 = ck * fk;
        sum0 += del0;
        sum1 += ck * hk;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            break;
        }
    }
    let ex = x.exp();
    (sum0 * ex, sum1 * 2.0 / x * ex)
}

/// `e^x K_μ(x)` and `e^x K_{μ+1}(x)` by Steed's continued fraction, `x ≥ 2`.
fn k_scaled_steed(mu: f64, x: f64) -> (f64, f64) {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;
    for i in 2..10000 {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi *= bi * di - 1.0;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    hi *= -a1;
    let k_mu = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    (k_mu, k_mu * (mu + x + 0.5 - hi) / x)
}

fn k_scaled_pair(mu: f64, x: f64) -> (f64, f64) {
    if x < 2.0 {
        k_scaled_temme(mu, x)
    } else {
        k_scaled_steed(mu, x)
    }
}

/// Splits `ν ≥ -1/2` into `μ ∈ [-1/2, 1/2)` plus a count of unit steps.
fn split_order(nu: f64) -> (f64, usize) {
    let steps = (nu + 0.5).floor();
    (nu - steps, steps as usize)
}

/// `R_μ(x) = K_{μ+1}(x)/K_μ(x)` for `μ ∈ [-1/2, 1/2)`.
fn base_ratio(mu: f64, x: f64) -> f64 {
    if mu == -0.5 {
        return 1.0;
    }
    let (k0, k1) = k_scaled_pair(mu, x);
    k1 / k0
}

/// `K_{ν+1}(x) / K_ν(x)` for real `ν` and `x > 0`.
pub fn bessel_k_ratio(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !nu.is_finite() || x.is_nan() {
        return Err(Error::invalid(format!(
            "Bessel ratio needs x > 0 and finite order, got nu={nu}, x={x}"
        )));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(ratio(nu, x))
}

pub(crate) fn ratio(nu: f64, x: f64) -> f64 {
    if nu < -0.5 {
        // K_{-v} = K_v
        return 1.0 / ratio(-nu - 1.0, x);
    }
    let (mu, steps) = split_order(nu);
    let mut r = base_ratio(mu, x);
    for j in 1..=steps {
        r = 1.0 / r + 2.0 * (mu + j as f64) / x;
    }
    r
}

/// `ln K_ν(x)` for real `ν` and `x > 0`, accumulated through log ratios so
/// that large orders do not overflow.
pub fn log_bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) || !nu.is_finite() {
        return Err(Error::invalid(format!("log K needs finite x > 0, got nu={nu}, x={x}")));
    }
    let nu = nu.abs();
    let (mu, steps) = split_order(nu);
    let (mut log_k, mut r) = if mu == -0.5 {
        (0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x, 1.0)
    } else {
        let (k0, k1) = k_scaled_pair(mu, x);
        (k0.ln() - x, k1 / k0)
    };
    for j in 1..=steps {
        log_k += r.ln();
        r = 1.0 / r + 2.0 * (mu + j as f64) / x;
    }
    Ok(log_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_closed_forms() {
        for &x in &[1e-6, 0.01, 0.5, 1.0, 2.0, 7.5, 100.0, 1e5] {
            assert_eq!(bessel_k_ratio(-0.5, x).unwrap(), 1.0);
            let r = bessel_k_ratio(0.5, x).unwrap();
            assert!((r - (1.0 + 1.0 / x)).abs() <= 1e-12 * (1.0 + 1.0 / x));
            // K_{5/2}/K_{3/2} = (1 + 3/x + 3/x²)/(1 + 1/x)
            let r = bessel_k_ratio(1.5, x).unwrap();
            let want = (1.0 + 3.0 / x + 3.0 / (x * x)) / (1.0 + 1.0 / x);
            assert!((r - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn integer_orders_match_known_values() {
        // K_0(1) = 0.42102443824070833, K_1(1) = 0.60190723019723457
        let r = bessel_k_ratio(0.0, 1.0).unwrap();
        assert!((r - 0.601_907_230_197_234_6 / 0.42102443824070833).abs() < 1e-13);
        // K_0(3) = 0.034739504386279256, K_1(3) = 0.040156431128194184
        let r = bessel_k_ratio(0.0, 3.0).unwrap();
        assert!((r - 0.040156431128194184 / 0.034739504386279256).abs() < 1e-13);
        let lk = log_bessel_k(1.0, 3.0).unwrap();
        assert!((lk - 0.040156431128194184f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn negative_orders_reflect() {
        for &x in &[0.3, 4.0] {
            let a = bessel_k_ratio(-1.3, x).unwrap();
            let b = 1.0 / bessel_k_ratio(0.3, x).unwrap();
            assert!((a - b).abs() < 1e-14 * b);
        }
    }

    #[test]
    fn large_order_stays_finite() {
        let r = bessel_k_ratio(4999.5, 3.0).unwrap();
        assert!(r.is_finite() && r > 2.0 * 4999.5 / 3.0);
        let lk = log_bessel_k(4999.5, 3.0).unwrap();
        assert!(lk.is_finite() && lk > 1000.0);
    }

    #[test]
    fn rejects_bad_argument() {
        assert!(bessel_k_ratio(0.5, 0.0).is_err());
        assert!(bessel_k_ratio(0.5, -1.0).is_err());
    }
}

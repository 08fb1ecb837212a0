//! Samplers and closed-form expectations of the special distributions.

use bqtf::dists::{
    al_log_density, bessel_k_ratio, check_loss, gig_moments, log_bessel_k, sample_gig, sample_inverse_gamma,
    sample_truncated_gig, sample_truncated_inverse_gamma, truncated_gig_expectations, truncated_ig_expectations,
    GigParams, TruncationBounds,
};
use bqtf::stream_rng;
use proptest::prelude::*;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn inverse_gamma_moments() {
    let mut rng = stream_rng(1, 0);
    let (shape, rate) = (4.5, 2.0);
    let xs: Vec<f64> = (0..200_000)
        .map(|_| sample_inverse_gamma(shape, rate, &mut rng).unwrap())
        .collect();
    let (m, se) = mean_and_se(&xs);
    assert!((m - rate / (shape - 1.0)).abs() < 4.0 * se);
    assert!(sample_inverse_gamma(0.0, 1.0, &mut rng).is_err());
}

#[test]
fn truncated_inverse_gamma_matches_expectation() {
    let bounds = TruncationBounds::new(0.05, 3.0).unwrap();
    for (shape, rate) in [(1.0, 0.7), (1.0, 40.0), (2.5, 1.0)] {
        let mut rng = stream_rng(2, 0);
        let inv: Vec<f64> = (0..200_000)
            .map(|_| {
                let x = sample_truncated_inverse_gamma(shape, rate, &bounds, &mut rng).unwrap();
                assert!(bounds.contains(x));
                1.0 / x
            })
            .collect();
        let (m, se) = mean_and_se(&inv);
        let exact = truncated_ig_expectations(shape, rate, &bounds).unwrap();
        assert!(
            (m - exact).abs() < 4.0 * se,
            "shape {shape} rate {rate}: {m} vs {exact}"
        );
    }
}

#[test]
fn gig_sampler_matches_moments() {
    for (nu, a, b) in [(0.5, 1e-6, 2.0), (-1.5, 3.0, 0.2), (2.0, 0.5, 0.5), (-0.5, 50.0, 50.0)] {
        let g = GigParams::new(nu, a, b).unwrap();
        let mut rng = stream_rng(3, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gig(&g, &mut rng)).collect();
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let (m, se) = mean_and_se(&xs);
        let (mi, sei) = mean_and_se(&inv);
        let (e, einv) = gig_moments(&g);
        assert!((m - e).abs() < 4.5 * se, "E[X] at {nu},{a},{b}: {m} vs {e}");
        assert!((mi - einv).abs() < 4.5 * sei, "E[1/X] at {nu},{a},{b}: {mi} vs {einv}");
    }
}

#[test]
fn truncated_gig_matches_expectations() {
    let bounds = TruncationBounds::new(0.5, 2.0).unwrap();
    let g = GigParams::new(0.5, 4.0, 0.3).unwrap();
    let mut rng = stream_rng(4, 0);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| sample_truncated_gig(&g, &bounds, &mut rng).unwrap())
        .collect();
    assert!(xs.iter().all(|&x| bounds.contains(x)));
    let (m, se) = mean_and_se(&xs);
    let (e, _) = truncated_gig_expectations(&g, &bounds).unwrap();
    assert!((m - e).abs() < 4.0 * se, "{m} vs {e}");
}

#[test]
fn bessel_half_integer_closed_forms() {
    // K_{1/2}(x) = sqrt(π/(2x)) e^{-x} and K_{3/2}(x) = K_{1/2}(x) (1 + 1/x).
    for x in [0.01, 0.7, 5.0, 60.0] {
        let k12 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        assert!((log_bessel_k(0.5, x).unwrap() - k12.ln()).abs() < 1e-12);
        assert!((bessel_k_ratio(0.5, x).unwrap() - (1.0 + 1.0 / x)).abs() < 1e-12 * (1.0 + 1.0 / x));
    }
}

#[test]
fn asymmetric_laplace_is_normalized_with_correct_quantile() {
    for p in [0.1, 0.5, 0.85] {
        let sigma2 = 0.6;
        let f = |x: f64| al_log_density(x, p, sigma2).unwrap().exp();
        // Integer grid on [-200, 200] so the cusp at 0 is a node.
        let (h, steps) = (2e-3, 200_000);
        let (mut below, mut total) = (0.0, 0.0);
        for i in 0..steps {
            let x = -200.0 + i as f64 * h;
            let m = 0.5 * (f(x) + f(x + h)) * h;
            total += m;
            if i < steps / 2 {
                below += m;
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "mass {total}");
        assert!((below - p).abs() < 1e-6, "P(X < 0) = {below} at p = {p}");
    }
    assert!(al_log_density(0.0, 1.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn check_loss_is_nonnegative_and_positively_homogeneous(
        r in proptest::collection::vec(-10.0f64..10.0, 1..20),
        p in 0.01f64..0.99,
        c in 0.0f64..5.0,
    ) {
        let l = check_loss(&r, p).unwrap();
        prop_assert!(l >= 0.0);
        let scaled: Vec<f64> = r.iter().map(|x| c * x).collect();
        prop_assert!((check_loss(&scaled, p).unwrap() - c * l).abs() < 1e-9 * (1.0 + l));
    }

    #[test]
    fn truncated_expectations_stay_in_bounds(
        log_a in -20.0f64..10.0,
        log_b in -20.0f64..10.0,
        nu in -3.0f64..3.0,
    ) {
        let bounds = TruncationBounds::new(1e-3, 1e3).unwrap();
        let g = GigParams::new(nu, log_a.exp(), log_b.exp()).unwrap();
        let (m, mi) = truncated_gig_expectations(&g, &bounds).unwrap();
        prop_assert!(bounds.contains(m));
        prop_assert!((1e-3..=1e3).contains(&mi));
        // Jensen: E[X] E[1/X] >= 1.
        prop_assert!(m * mi >= 1.0 - 1e-9);
        let ei = truncated_ig_expectations(1.0, log_a.exp(), &bounds).unwrap();
        prop_assert!((1e-3..=1e3).contains(&ei));
    }

    #[test]
    fn bessel_ratio_exceeds_one(nu in 0.0f64..8.0, x in 1e-3f64..100.0) {
        // K_{ν+1}(x) > K_ν(x) for ν ≥ 0.
        prop_assert!(bessel_k_ratio(nu, x).unwrap() > 1.0);
    }
}

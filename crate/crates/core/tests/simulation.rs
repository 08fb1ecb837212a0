//! Simulation scenarios: noise laws, true quantiles and reproducibility.

use bqtf::simgen::{
    center_block, lattice_scenario, noise_draw, true_quantile, Noise, Scenario, ScenarioKind, MIXED_SD,
};
use bqtf::stream_rng;

const CHAIN_NOISES: [Noise; 3] = [Noise::Gauss, Noise::Beta, Noise::Mixed { sd: MIXED_SD }];

#[test]
fn noise_quantiles_match_monte_carlo() {
    let n = 100_000;
    for noise in CHAIN_NOISES.into_iter().chain([Noise::Contaminated { mu: 10.0 }]) {
        for x in [0.1, 0.5, 0.9] {
            let mut rng = stream_rng(21, 0);
            let draws: Vec<f64> = (0..n).map(|_| noise_draw(noise, x, &mut rng)).collect();
            for p in [0.25, 0.5, 0.75] {
                let q = true_quantile(noise, x, p).unwrap();
                let frac = draws.iter().filter(|&&d| d <= q).count() as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((frac - p).abs() < 4.5 * se, "{noise} x={x} p={p}: {frac}");
            }
        }
    }
}

#[test]
fn contamination_fraction() {
    let mut rng = stream_rng(22, 0);
    let n = 200_000;
    let far = (0..n)
        .filter(|_| noise_draw(Noise::Contaminated { mu: 10.0 }, 0.5, &mut rng) > 5.0)
        .count() as f64
        / n as f64;
    // The contaminating component N(10, 1) sits 5 sd above the threshold
    // and the main component 5 sd below it.
    assert!((far - 0.05).abs() < 4.5 * (0.05f64 * 0.95 / n as f64).sqrt(), "{far}");
}

#[test]
fn mixed_noise_variance() {
    let mut rng = stream_rng(23, 0);
    let n = 200_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| noise_draw(Noise::Mixed { sd: MIXED_SD }, 0.5, &mut rng))
        .collect();
    let m = draws.iter().sum::<f64>() / n as f64;
    let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / n as f64;
    // Component variance 0.5 plus 0.04 from the ±0.2 means.
    assert!((v - 0.54).abs() < 0.01, "{v}");
}

#[test]
fn truth_is_signal_plus_noise_quantile() {
    for noise in CHAIN_NOISES {
        let s = Scenario::new(ScenarioKind::Vs { n: 50 }, noise).unwrap();
        let truth = s.truth(0.75).unwrap();
        let signal = s.signal();
        for i in 0..50 {
            let q = true_quantile(noise, s.x(i), 0.75).unwrap();
            assert!((truth[i] - signal[i] - q).abs() < 1e-12);
        }
        // Quantile curves are ordered in p.
        let lo = s.truth(0.25).unwrap();
        assert!(lo.iter().zip(&truth).all(|(a, b)| a < b));
    }
}

#[test]
fn replications_are_reproducible_and_distinct() {
    let s = Scenario::pc(Noise::Beta).unwrap();
    let a = s.replicate(5, 3).unwrap();
    assert_eq!(a, s.replicate(5, 3).unwrap());
    assert_ne!(a, s.replicate(5, 4).unwrap());
    assert_ne!(a, s.replicate(6, 3).unwrap());
    assert_eq!(a.n_nodes(), 100);
    assert_eq!(a.n_obs(), 100);
}

#[test]
fn lattice_centre_block() {
    assert_eq!(center_block(10, 10), (3..7, 3..7));
    let (signal, y) = lattice_scenario(10, 10, 10.0, &mut stream_rng(24, 0)).unwrap();
    assert_eq!(signal.iter().filter(|&&v| v == 5.0).count(), 16);
    assert_eq!(y.len(), 100);
}

#[test]
fn invalid_scenarios_rejected() {
    assert!(Scenario::new(ScenarioKind::Pc { n: 100 }, Noise::Contaminated { mu: 10.0 }).is_err());
    assert!(Scenario::new(ScenarioKind::Lattice { rows: 10, cols: 10 }, Noise::Gauss).is_err());
    assert!(Scenario::new(ScenarioKind::Vs { n: 1 }, Noise::Gauss).is_err());
    assert!(true_quantile(Noise::Gauss, 0.5, 0.0).is_err());
    assert!("laplacian".parse::<Noise>().is_err());
}

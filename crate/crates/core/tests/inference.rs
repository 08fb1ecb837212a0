//! End-to-end behaviour of both inference engines and the posterior
//! summaries built on them.

use bqtf::gibbs::{run_gibbs, run_gibbs_stream, GibbsConfig};
use bqtf::graph::Graph;
use bqtf::model::{Dataset, Model, ModelSpec, Prior};
use bqtf::posterior::{autocorrelation, metrics, summarize, FitSummary, Method};
use bqtf::simgen::{Noise, Scenario};
use bqtf::stream_rng;
use bqtf::vb::{run_vb, VbConfig, VbLocal};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn short(seed: u64) -> GibbsConfig {
    GibbsConfig {
        n_iter: 600,
        burn_in: 100,
        thin: 5,
        seed,
    }
}

fn pc_model(p: f64, prior: Prior, rep: u64) -> (Model, Vec<f64>) {
    let s = Scenario::pc(Noise::Gauss).unwrap();
    let model = Model::new(
        &ModelSpec::new(p, 0, prior),
        &s.graph().unwrap(),
        &s.replicate(77, rep).unwrap(),
    )
    .unwrap();
    (model, s.truth(p).unwrap())
}

#[test]
fn gibbs_is_reproducible_per_stream() {
    let (model, _) = pc_model(0.5, Prior::Horseshoe, 0);
    let a = run_gibbs(&model, &short(3)).unwrap();
    let b = run_gibbs(&model, &short(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_draws(), short(3).retained());
    assert_eq!(a.n_draws(), 100);
    let c = run_gibbs_stream(&model, &short(3), 1).unwrap();
    assert_ne!(a.draws, c.draws);
}

#[test]
fn gibbs_rejects_bad_config() {
    let (model, _) = pc_model(0.5, Prior::Normal, 0);
    for cfg in [
        GibbsConfig {
            n_iter: 10,
            burn_in: 10,
            thin: 1,
            seed: 0,
        },
        GibbsConfig {
            n_iter: 100,
            burn_in: 10,
            thin: 0,
            seed: 0,
        },
    ] {
        assert!(run_gibbs(&model, &cfg).is_err());
    }
    assert!(run_vb(&model, &VbConfig { max_iter: 0, tol: 1e-6 }).is_err());
}

#[test]
fn both_engines_recover_piecewise_constant_signal() {
    for prior in Prior::ALL {
        let (model, truth) = pc_model(0.5, prior, 1);
        let cfg = GibbsConfig {
            n_iter: 3000,
            burn_in: 500,
            thin: 5,
            seed: 9,
        };
        let mcmc = metrics(&summarize(&run_gibbs(&model, &cfg).unwrap()).unwrap(), &truth).unwrap();
        let fit = run_vb(&model, &VbConfig::default()).unwrap();
        assert!(fit.converged, "{prior} VB did not converge");
        let vb = metrics(&fit.summary(), &truth).unwrap();
        assert!(mcmc.mse < 0.1, "{prior} MCMC {mcmc:?}");
        assert!(vb.mse < 0.1, "{prior} VB {vb:?}");
        assert!(mcmc.cp > 0.7, "{prior} MCMC {mcmc:?}");
    }
}

#[test]
fn quantile_fits_are_ordered_in_level() {
    let s = Scenario::vs(Noise::Gauss).unwrap();
    let g = s.graph().unwrap();
    let data = s.replicate(3, 0).unwrap();
    let means: Vec<Vec<f64>> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&p| {
            run_vb(
                &Model::new(&ModelSpec::new(p, 1, Prior::Horseshoe), &g, &data).unwrap(),
                &VbConfig::default(),
            )
            .unwrap()
            .state
            .mean
        })
        .collect();
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(avg(&means[0]) < avg(&means[1]) && avg(&means[1]) < avg(&means[2]));
}

#[test]
fn multiple_observations_and_empty_nodes() {
    let g = Graph::chain(6).unwrap();
    let pairs = [(0, 1.0), (0, 1.2), (1, 0.9), (3, 3.0), (3, 3.1), (3, 2.9), (5, 3.05)];
    let data = Dataset::from_pairs(6, &pairs).unwrap();
    let model = Model::new(&ModelSpec::new(0.5, 0, Prior::Horseshoe), &g, &data).unwrap();
    let s = summarize(&run_gibbs(&model, &short(4)).unwrap()).unwrap();
    assert_eq!(s.point.len(), 6);
    let fit = run_vb(&model, &VbConfig::default()).unwrap();
    assert!(fit.state.mean.iter().all(|m| m.is_finite()));
    // The empty node 2 borrows from its neighbours.
    assert!(fit.state.mean[2] > 0.5 && fit.state.mean[2] < 3.5);
}

#[test]
fn ar1_autocorrelation() {
    let mut rng = stream_rng(8, 0);
    let phi = 0.7;
    let mut x = 0.0;
    let trace: Vec<f64> = (0..200_000)
        .map(|_| {
            let e: f64 = rng.sample(StandardNormal);
            x = phi * x + e;
            x
        })
        .collect();
    let acf = autocorrelation(&trace, 3).unwrap();
    for (lag, r) in acf.iter().enumerate() {
        assert!((r - phi.powi(lag as i32)).abs() < 0.015, "lag {lag}: {r}");
    }
    assert!(autocorrelation(&trace[..3], 3).is_err());
}

fn chain_data() -> impl Strategy<Value = (Vec<f64>, f64, usize, Prior)> {
    (
        proptest::collection::vec(-5.0f64..5.0, 3..15),
        prop_oneof![Just(0.1), Just(0.5), Just(0.9)],
        0usize..3,
        prop_oneof![Just(Prior::Normal), Just(Prior::Laplace), Just(Prior::Horseshoe)],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn summaries_bracket_point((y, p, k, prior) in chain_data(), seed in 0u64..1000) {
        let g = Graph::chain(y.len()).unwrap();
        let model = Model::new(&ModelSpec::new(p, k, prior), &g, &Dataset::one_per_node(&y).unwrap()).unwrap();
        let s = summarize(&run_gibbs(&model, &short(seed)).unwrap()).unwrap();
        for i in 0..y.len() {
            prop_assert!(s.lower[i] <= s.point[i] && s.point[i] <= s.upper[i]);
        }
        let v = run_vb(&model, &VbConfig::default()).unwrap().summary();
        for i in 0..y.len() {
            prop_assert!(v.lower[i] <= v.point[i] && v.point[i] <= v.upper[i]);
        }
    }

    #[test]
    fn vb_expectations_are_finite_and_positive((y, p, k, prior) in chain_data()) {
        let g = Graph::chain(y.len()).unwrap();
        let model = Model::new(&ModelSpec::new(p, k, prior), &g, &Dataset::one_per_node(&y).unwrap()).unwrap();
        let fit = run_vb(&model, &VbConfig::default()).unwrap();
        let s = &fit.state;
        let positive = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x > 0.0);
        prop_assert!(s.mean.iter().all(|m| m.is_finite()));
        prop_assert!(positive(&s.b_inv_diag) && positive(&s.e_theta2) && positive(&s.e_z) && positive(&s.e_inv_z));
        prop_assert!(positive(&s.e_inv_w2));
        prop_assert!(s.e_sigma2 > 0.0 && s.e_inv_sigma2 > 0.0 && s.e_inv_tau2 > 0.0);
        // E[θ²] ≥ E[θ]² and E[z] E[1/z] ≥ 1 by Jensen.
        for i in 0..y.len() {
            prop_assert!(s.e_theta2[i] >= s.mean[i] * s.mean[i] * (1.0 - 1e-12));
        }
        for (a, b) in s.e_z.iter().zip(&s.e_inv_z) {
            prop_assert!(a * b >= 1.0 - 1e-9);
        }
        if let VbLocal::Laplace { e_w2, .. } = &s.local {
            prop_assert!(positive(e_w2));
        }
    }

    #[test]
    fn metrics_are_translation_invariant(
        vals in proptest::collection::vec((-3.0f64..3.0, 0.0f64..1.0, 0.0f64..1.0, -3.0f64..3.0), 1..30),
        shift in -100.0f64..100.0,
    ) {
        let build = |c: f64| {
            let s = FitSummary {
                point: vals.iter().map(|v| v.0 + c).collect(),
                lower: vals.iter().map(|v| v.0 - v.1 + c).collect(),
                upper: vals.iter().map(|v| v.0 + v.2 + c).collect(),
                method: Method::Vb,
            };
            let truth: Vec<f64> = vals.iter().map(|v| v.3 + c).collect();
            metrics(&s, &truth).unwrap()
        };
        let (a, b) = (build(0.0), build(shift));
        prop_assert!((a.mse - b.mse).abs() < 1e-9 * (1.0 + shift.abs()).powi(2));
        prop_assert!((a.mad - b.mad).abs() < 1e-9 * (1.0 + shift.abs()));
        prop_assert!((a.mciw - b.mciw).abs() < 1e-9 * (1.0 + shift.abs()));
        prop_assert!(a.cp >= 0.0 && a.cp <= 1.0);
    }
}

//! Posterior summaries, evaluation metrics and chain diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inference engine that produced a summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mcmc,
    Vb,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Mcmc => "MCMC",
            Method::Vb => "VB",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Mcmc => "mcmc",
            Method::Vb => "vb",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcmc" | "gibbs" => Ok(Method::Mcmc),
            "vb" | "mfvb" => Ok(Method::Vb),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected mcmc or vb)"
            ))),
        }
    }
}

/// Retained draws of a Gibbs run, row-major (one row per retained sweep).
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSamples {
    pub n: usize,
    pub draws: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub tau2: Vec<f64>,
    pub seed: u64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl PosteriorSamples {
    pub fn n_draws(&self) -> usize {
        self.sigma2.len()
    }

    pub fn draw(&self, r: usize) -> &[f64] {
        &self.draws[r * self.n..(r + 1) * self.n]
    }

    /// Trace of `θ_i` across retained draws.
    pub fn trace(&self, i: usize) -> Vec<f64> {
        (0..self.n_draws()).map(|r| self.draws[r * self.n + i]).collect()
    }
}

/// Point estimate with pointwise 95% interval.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSummary {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: Method,
}

/// MSE, MAD, MCIW and CP of a summary against the true signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mad: f64,
    pub mciw: f64,
    pub cp: f64,
}

/// Linear-interpolation (type 7) quantile of sorted data.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Columnwise mean and 2.5% / 97.5% type-7 quantiles.
pub fn summarize(samples: &PosteriorSamples) -> Result<FitSummary> {
    let r = samples.n_draws();
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 retained draws, got {r}")));
    }
    let n = samples.n;
    let mut point = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for i in 0..n {
        let mut col = samples.trace(i);
        let mean = col.iter().sum::<f64>() / r as f64;
        col.sort_by(f64::total_cmp);
        let lo = quantile_type7(&col, 0.025);
        let hi = quantile_type7(&col, 0.975);
        // the mean of a sample lies within its range; rounding can push it
        // a hair outside a near-degenerate interval
        point.push(mean.clamp(col[0], col[r - 1]));
        lower.push(lo.min(mean));
        upper.push(hi.max(mean));
    }
    let s = FitSummary {
        point,
        lower,
        upper,
        method: Method::Mcmc,
    };
    debug_assert!(s
        .lower
        .iter()
        .zip(&s.point)
        .zip(&s.upper)
        .all(|((l, p), u)| l <= p && p <= u));
    Ok(s)
}

/// The four evaluation metrics.
pub fn metrics(summary: &FitSummary, truth: &[f64]) -> Result<Metrics> {
    let n = truth.len();
    if summary.point.len() != n || summary.lower.len() != n || summary.upper.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "summary has {} nodes, truth has {n}",
            summary.point.len()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("metrics of an empty signal"));
    }
    let nf = n as f64;
    let mut m = Metrics::default();
    for i in 0..n {
        let d = summary.point[i] - truth[i];
        m.mse += d * d;
        m.mad += d.abs();
        m.mciw += summary.upper[i] - summary.lower[i];
        if summary.lower[i] <= truth[i] && truth[i] <= summary.upper[i] {
            m.cp += 1.0;
        }
    }
    m.mse /= nf;
    m.mad /= nf;
    m.mciw /= nf;
    m.cp /= nf;
    Ok(m)
}

/// Biased sample autocorrelations at lags `0..=max_lag`.
pub fn autocorrelation(trace: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = trace.len();
    if n <= max_lag {
        return Err(Error::invalid(format!(
            "trace of length {n} is too short for lag {max_lag}"
        )));
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum();
    let mut acf = vec![0.0; max_lag + 1];
    acf[0] = 1.0;
    if c0 > 0.0 {
        for (lag, slot) in acf.iter_mut().enumerate().skip(1) {
            let c: f64 = centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum();
            *slot = c / c0;
        }
    }
    Ok(acf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples_from_columns(cols: &[Vec<f64>]) -> PosteriorSamples {
        let r = cols[0].len();
        let n = cols.len();
        let mut draws = vec![0.0; r * n];
        for (i, c) in cols.iter().enumerate() {
            for (j, v) in c.iter().enumerate() {
                draws[j * n + i] = *v;
            }
        }
        PosteriorSamples {
            n,
            draws,
            sigma2: vec![1.0; r],
            tau2: vec![1.0; r],
            seed: 0,
            n_iter: r,
            burn_in: 0,
            thin: 1,
        }
    }

    #[test]
    fn constant_and_uniform_columns() {
        let s = summarize(&samples_from_columns(&[
            vec![2.0; 100],
            (1..=100).map(f64::from).collect(),
        ]))
        .unwrap();
        assert_eq!((s.point[0], s.lower[0], s.upper[0]), (2.0, 2.0, 2.0));
        assert!((s.lower[1] - 3.475).abs() < 1e-12);
        assert!((s.upper[1] - 97.525).abs() < 1e-12);
        assert!(summarize(&samples_from_columns(&[vec![1.0]])).is_err());
    }

    #[test]
    fn metric_values() {
        let truth = vec![1.0, 2.0, 3.0];
        let s = FitSummary {
            point: truth.iter().map(|t| t + 0.1).collect(),
            lower: truth.iter().map(|t| t - 1.0).collect(),
            upper: truth.iter().map(|t| t + 1.0).collect(),
            method: Method::Vb,
        };
        let m = metrics(&s, &truth).unwrap();
        assert!((m.mse - 0.01).abs() < 1e-12);
        assert!((m.mad - 0.1).abs() < 1e-12);
        assert!((m.mciw - 2.0).abs() < 1e-12);
        assert_eq!(m.cp, 1.0);
        assert!(metrics(&s, &[1.0]).is_err());
    }

    #[test]
    fn acf_basics() {
        let acf = autocorrelation(&[1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(acf, vec![1.0, 0.0, 0.0]);
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
        let acf = autocorrelation(&[1.0, -1.0, 1.0, -1.0], 1).unwrap();
        assert!((acf[1] + 0.75).abs() < 1e-15);
    }
}

//! Seeded generators for the benchmark scenarios and their true quantile
//! curves.
//!
//! Design points sit at `x_i = i/n`, `i = 1..n`. The truth at level `p` is
//! the signal plus the `p`-quantile of the pointwise noise distribution.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::Dataset;
use crate::stream_rng;

/// Signal shape and design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Piecewise constant signal on a chain.
    Pc { n: usize },
    /// Smooth signal with a sharp bump on a chain.
    Vs { n: usize },
    /// Centre block on a rectangular lattice.
    Lattice { rows: usize, cols: usize },
}

/// Pointwise noise distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "noise", rename_all = "lowercase")]
pub enum Noise {
    /// `N(0, ((1 + x²)/4)²)`.
    Gauss,
    /// `Beta(1, 11 - 10x)`.
    Beta,
    /// `x N(-0.2, sd²) + (1 - x) N(0.2, sd²)`.
    Mixed { sd: f64 },
    /// `0.95 N(0, 1) + 0.05 N(mu, 1)`.
    Contaminated { mu: f64 },
}

/// Component standard deviation of the mixed-normal noise (variance 0.5).
pub const MIXED_SD: f64 = std::f64::consts::FRAC_1_SQRT_2;
const CONTAMINATION: f64 = 0.05;

impl Noise {
    pub fn label(&self) -> &'static str {
        match self {
            Noise::Gauss => "gauss",
            Noise::Beta => "beta",
            Noise::Mixed { .. } => "mixed",
            Noise::Contaminated { .. } => "contaminated",
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Noise {
    type Err = Error;

    /// Accepts `gauss`, `beta`, `mixed` and `contaminated`; the latter two
    /// take their default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" | "i" => Ok(Noise::Gauss),
            "beta" | "ii" => Ok(Noise::Beta),
            "mixed" | "mixednormal" | "iii" => Ok(Noise::Mixed { sd: MIXED_SD }),
            "contaminated" => Ok(Noise::Contaminated { mu: 10.0 }),
            other => Err(Error::invalid(format!(
                "unknown noise '{other}' (expected gauss, beta, mixed or contaminated)"
            ))),
        }
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Piecewise constant signal: levels 2.5, 1.0, 3.5, 1.5 over the first,
/// second, third fifth and the remaining two fifths of the design.
pub fn pc_signal(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            if 5 * i <= n {
                2.5
            } else if 5 * i <= 2 * n {
                1.0
            } else if 5 * i <= 3 * n {
                3.5
            } else {
                1.5
            }
        })
        .collect()
}

/// `f(x) = 2 + sin(4x - 2) + 2 exp(-30 (4x - 2)²)`.
pub fn vs_function(x: f64) -> f64 {
    let u = 4.0 * x - 2.0;
    2.0 + u.sin() + 2.0 * (-30.0 * u * u).exp()
}

pub fn vs_signal(n: usize) -> Vec<f64> {
    (1..=n).map(|i| vs_function(i as f64 / n as f64)).collect()
}

/// One noise draw at design point `x`.
pub fn noise_draw<R: Rng + ?Sized>(noise: Noise, x: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    match noise {
        Noise::Gauss => z * (1.0 + x * x) / 4.0,
        Noise::Beta => {
            // Beta(1, β) by inversion: 1 - U^{1/β}
            let u: f64 = rng.random();
            1.0 - u.powf(1.0 / (11.0 - 10.0 * x))
        }
        Noise::Mixed { sd } => {
            let first = rng.random::<f64>() < x;
            (if first { -0.2 } else { 0.2 }) + sd * z
        }
        Noise::Contaminated { mu } => {
            let hit = rng.random::<f64>() < CONTAMINATION;
            (if hit { mu } else { 0.0 }) + z
        }
    }
}

/// CDF of the mixed-normal noise at `q`.
fn mixed_cdf(x: f64, sd: f64, q: f64) -> f64 {
    x * std_normal_cdf((q + 0.2) / sd) + (1.0 - x) * std_normal_cdf((q - 0.2) / sd)
}

fn contaminated_cdf(mu: f64, q: f64) -> f64 {
    (1.0 - CONTAMINATION) * std_normal_cdf(q) + CONTAMINATION * std_normal_cdf(q - mu)
}

fn bisect_quantile(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    while cdf(lo) > p {
        lo -= hi - lo;
    }
    while cdf(hi) < p {
        hi += hi - lo;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `p`-quantile of the noise distribution at design point `x`.
pub fn true_quantile(noise: Noise, x: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {p}")));
    }
    Ok(match noise {
        Noise::Gauss => (1.0 + x * x) / 4.0 * std_normal_quantile(p),
        Noise::Beta => 1.0 - (1.0 - p).powf(1.0 / (11.0 - 10.0 * x)),
        Noise::Mixed { sd } => bisect_quantile(|q| mixed_cdf(x, sd, q), p, -1.0, 1.0),
        Noise::Contaminated { mu } => bisect_quantile(|q| contaminated_cdf(mu, q), p, -1.0, 1.0),
    })
}

/// A benchmark scenario: signal, design graph and noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(flatten)]
    pub noise: Noise,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, noise: Noise) -> Result<Self> {
        let ok = match kind {
            ScenarioKind::Pc { n } | ScenarioKind::Vs { n } => n >= 2 && !matches!(noise, Noise::Contaminated { .. }),
            ScenarioKind::Lattice { rows, cols } => {
                rows >= 1 && cols >= 1 && matches!(noise, Noise::Contaminated { .. })
            }
        };
        if !ok {
            return Err(Error::invalid(format!(
                "scenario {kind:?} cannot be combined with {noise} noise"
            )));
        }
        if let Noise::Mixed { sd } = noise {
            if !(sd > 0.0) {
                return Err(Error::invalid("mixed-normal component sd must be positive"));
            }
        }
        Ok(Self { kind, noise })
    }

    /// Piecewise constant signal with 100 design points.
    pub fn pc(noise: Noise) -> Result<Self> {
        Self::new(ScenarioKind::Pc { n: 100 }, noise)
    }

    /// Varying smoothness signal with 100 design points.
    pub fn vs(noise: Noise) -> Result<Self> {
        Self::new(ScenarioKind::Vs { n: 100 }, noise)
    }

    /// 10×10 lattice with contamination mean `mu`.
    pub fn lattice(mu: f64) -> Result<Self> {
        Self::new(ScenarioKind::Lattice { rows: 10, cols: 10 }, Noise::Contaminated { mu })
    }

    pub fn n(&self) -> usize {
        match self.kind {
            ScenarioKind::Pc { n } | ScenarioKind::Vs { n } => n,
            ScenarioKind::Lattice { rows, cols } => rows * cols,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            ScenarioKind::Pc { .. } => format!("pc-{}", self.noise),
            ScenarioKind::Vs { .. } => format!("vs-{}", self.noise),
            ScenarioKind::Lattice { .. } => format!("lattice-{}", self.noise),
        }
    }

    pub fn graph(&self) -> Result<Graph> {
        match self.kind {
            ScenarioKind::Pc { n } | ScenarioKind::Vs { n } => Graph::chain(n),
            ScenarioKind::Lattice { rows, cols } => Graph::lattice(rows, cols),
        }
    }

    /// Design point of vertex `i` (0-based).
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.n() as f64
    }

    pub fn signal(&self) -> Vec<f64> {
        match self.kind {
            ScenarioKind::Pc { n } => pc_signal(n),
            ScenarioKind::Vs { n } => vs_signal(n),
            ScenarioKind::Lattice { rows, cols } => lattice_signal(rows, cols),
        }
    }

    /// True `p`-th quantile at every vertex.
    pub fn truth(&self, p: f64) -> Result<Vec<f64>> {
        self.signal()
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(s + true_quantile(self.noise, self.x(i), p)?))
            .collect()
    }

    /// One observation per vertex.
    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.signal()
            .iter()
            .enumerate()
            .map(|(i, s)| s + noise_draw(self.noise, self.x(i), rng))
            .collect()
    }

    /// Observations of replication `rep` under `master`.
    pub fn replicate(&self, master: u64, rep: u64) -> Result<Dataset> {
        Dataset::one_per_node(&self.observe(&mut stream_rng(master, rep)))
    }
}

/// Rows and columns of the centre block: the middle 40% in each direction
/// (4×4 on a 10×10 lattice).
pub fn center_block(rows: usize, cols: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let span = |len: usize| {
        let w = (2 * len).div_ceil(5);
        let start = (len - w) / 2;
        start..start + w
    };
    (span(rows), span(cols))
}

/// Level 5 on the centre block and 0 elsewhere, row-major.
pub fn lattice_signal(rows: usize, cols: usize) -> Vec<f64> {
    let (rr, cc) = center_block(rows, cols);
    (0..rows * cols)
        .map(|v| {
            if rr.contains(&(v / cols)) && cc.contains(&(v % cols)) {
                5.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Truth and one observation vector of the lattice scenario.
pub fn lattice_scenario<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    mu: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = Scenario::new(ScenarioKind::Lattice { rows, cols }, Noise::Contaminated { mu })?;
    Ok((s.signal(), s.observe(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pc_levels() {
        let s = pc_signal(100);
        assert_eq!((s[0], s[40], s[99]), (2.5, 3.5, 1.5));
        let switches = s.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(switches, 3);
        assert_eq!(s.iter().filter(|&&v| v == 1.5).count(), 40);
        assert_eq!(s.iter().filter(|&&v| v == 2.5).count(), 20);
    }

    #[test]
    fn vs_values() {
        assert_eq!(vs_function(0.5), 4.0);
        assert!((vs_function(1.0) - (2.0 + 2f64.sin())).abs() < 1e-15);
        for &d in &[0.01, 0.1, 0.2] {
            let bump = |x: f64| vs_function(x) - 2.0 - (4.0 * x - 2.0).sin();
            assert!((bump(0.5 + d) - bump(0.5 - d)).abs() < 1e-12);
        }
    }

    #[test]
    fn truths() {
        assert_eq!(true_quantile(Noise::Gauss, 1.0, 0.5).unwrap(), 0.0);
        assert!((true_quantile(Noise::Beta, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(true_quantile(Noise::Mixed { sd: MIXED_SD }, 0.5, 0.5).unwrap().abs() < 1e-10);
        let q = true_quantile(Noise::Mixed { sd: MIXED_SD }, 0.3, 0.25).unwrap();
        assert!((mixed_cdf(0.3, MIXED_SD, q) - 0.25).abs() < 1e-10);
    }

    #[test]
    fn quantiles_monotone_in_level() {
        let kinds = [
            Noise::Gauss,
            Noise::Beta,
            Noise::Mixed { sd: MIXED_SD },
            Noise::Contaminated { mu: 10.0 },
        ];
        for noise in kinds {
            for xi in 1..=10 {
                let x = xi as f64 / 10.0;
                let qs: Vec<f64> = (1..20)
                    .map(|j| true_quantile(noise, x, j as f64 / 20.0).unwrap())
                    .collect();
                assert!(qs.windows(2).all(|w| w[0] <= w[1]), "{noise} at {x}");
            }
        }
    }

    #[test]
    fn lattice_layout() {
        let s = Scenario::lattice(10.0).unwrap();
        let g = s.graph().unwrap();
        assert_eq!((g.n_vertices(), g.n_edges()), (100, 180));
        let sig = s.signal();
        assert_eq!(sig.iter().filter(|&&v| v == 5.0).count(), 16);
        assert_eq!(sig[3 * 10 + 3], 5.0);
        assert_eq!(sig[2 * 10 + 3], 0.0);
        assert!(Scenario::new(ScenarioKind::Pc { n: 100 }, Noise::Contaminated { mu: 5.0 }).is_err());
        assert!(Scenario::new(ScenarioKind::Lattice { rows: 10, cols: 10 }, Noise::Gauss).is_err());
    }

    #[test]
    fn replications_are_reproducible() {
        let s = Scenario::pc(Noise::Gauss).unwrap();
        assert_eq!(s.replicate(7, 3).unwrap(), s.replicate(7, 3).unwrap());
        assert_ne!(s.replicate(7, 3).unwrap(), s.replicate(7, 4).unwrap());
    }
}

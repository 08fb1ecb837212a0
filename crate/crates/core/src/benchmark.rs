//! Replicated simulation studies over methods, priors and quantile levels.
//!
//! Replication `r` of a noise setting draws its data from stream `r` of the
//! master seed, and every Gibbs chain of that replication runs on stream `r`
//! of `master + 1`, so results do not depend on the worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{run_gibbs_stream, GibbsConfig};
use crate::io::fmt_real;
use crate::model::{Model, ModelSpec, Prior};
use crate::posterior::{metrics, summarize, Method, Metrics};
use crate::simgen::{Noise, Scenario, ScenarioKind};
use crate::vb::{run_vb, VbConfig};

/// Full description of a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub kind: ScenarioKind,
    pub noises: Vec<Noise>,
    pub k: usize,
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
    pub priors: Vec<Prior>,
    pub reps: usize,
    pub master_seed: u64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub gibbs: GibbsConfig,
    pub vb: VbConfig,
}

impl BenchmarkSpec {
    /// Both engines, all three priors and `p ∈ {0.25, 0.5, 0.75}` with the
    /// simulation protocol.
    pub fn standard(kind: ScenarioKind, noises: Vec<Noise>, k: usize, reps: usize, master_seed: u64) -> Self {
        Self {
            kind,
            noises,
            k,
            levels: vec![0.25, 0.5, 0.75],
            methods: vec![Method::Mcmc, Method::Vb],
            priors: Prior::ALL.to_vec(),
            reps,
            master_seed,
            a_sigma: 0.1,
            b_sigma: 0.1,
            gibbs: GibbsConfig::simulation(master_seed.wrapping_add(1)),
            vb: VbConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("benchmark needs at least one replication"));
        }
        if self.noises.is_empty() || self.levels.is_empty() || self.methods.is_empty() || self.priors.is_empty() {
            return Err(Error::invalid("benchmark grid has an empty axis"));
        }
        for &noise in &self.noises {
            Scenario::new(self.kind, noise)?;
        }
        for &p in &self.levels {
            ModelSpec::new(p, self.k, Prior::Normal).validate()?;
        }
        self.gibbs.validate()
    }
}

/// Metrics of one replication in one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub noise: Noise,
    pub p: f64,
    pub method: Method,
    pub prior: Prior,
    pub rep: usize,
    pub metrics: Metrics,
}

/// Replication average of one (noise, p, method, prior) cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub noise: Noise,
    pub p: f64,
    pub method: Method,
    pub prior: Prior,
    pub mean: Metrics,
    /// Standard errors of the replication means.
    pub se: Metrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub spec: BenchmarkSpec,
    pub reps: Vec<RepResult>,
    pub cells: Vec<CellSummary>,
}

impl BenchmarkResult {
    pub fn cell(&self, noise: Noise, p: f64, method: Method, prior: Prior) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.noise == noise && c.p == p && c.method == method && c.prior == prior)
    }
}

fn fit_one(spec: &BenchmarkSpec, model: &Model, method: Method, rep: usize, truth: &[f64]) -> Result<Metrics> {
    let summary = match method {
        Method::Mcmc => summarize(&run_gibbs_stream(model, &spec.gibbs, rep as u64)?)?,
        Method::Vb => run_vb(model, &spec.vb)?.summary(),
    };
    metrics(&summary, truth)
}

fn run_replication(spec: &BenchmarkSpec, noise: Noise, rep: usize) -> Result<Vec<RepResult>> {
    let scenario = Scenario::new(spec.kind, noise)?;
    let graph = scenario.graph()?;
    let data = scenario.replicate(spec.master_seed, rep as u64)?;
    let mut out = Vec::new();
    for &p in &spec.levels {
        let truth = scenario.truth(p)?;
        for &prior in &spec.priors {
            let mut ms = ModelSpec::new(p, spec.k, prior);
            ms.a_sigma = spec.a_sigma;
            ms.b_sigma = spec.b_sigma;
            let model = Model::new(&ms, &graph, &data)?;
            for &method in &spec.methods {
                out.push(RepResult {
                    noise,
                    p,
                    method,
                    prior,
                    rep,
                    metrics: fit_one(spec, &model, method, rep, &truth)?,
                });
            }
        }
    }
    Ok(out)
}

fn aggregate(items: &[Metrics]) -> (Metrics, Metrics) {
    let n = items.len() as f64;
    let field = |f: fn(&Metrics) -> f64| {
        let mean = items.iter().map(f).sum::<f64>() / n;
        let se = if items.len() > 1 {
            (items.iter().map(|m| (f(m) - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        (mean, se)
    };
    let (mse, mse_se) = field(|m| m.mse);
    let (mad, mad_se) = field(|m| m.mad);
    let (mciw, mciw_se) = field(|m| m.mciw);
    let (cp, cp_se) = field(|m| m.cp);
    (
        Metrics { mse, mad, mciw, cp },
        Metrics {
            mse: mse_se,
            mad: mad_se,
            mciw: mciw_se,
            cp: cp_se,
        },
    )
}

/// Runs every replication on the current rayon pool and averages per cell.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkResult> {
    spec.validate()?;
    let jobs: Vec<(Noise, usize)> = spec
        .noises
        .iter()
        .flat_map(|&noise| (0..spec.reps).map(move |r| (noise, r)))
        .collect();
    let per_job: Vec<Vec<RepResult>> = jobs
        .par_iter()
        .map(|&(noise, rep)| run_replication(spec, noise, rep))
        .collect::<Result<_>>()?;
    let reps: Vec<RepResult> = per_job.into_iter().flatten().collect();
    let mut cells = Vec::new();
    for &noise in &spec.noises {
        for &p in &spec.levels {
            for &method in &spec.methods {
                for &prior in &spec.priors {
                    let items: Vec<Metrics> = reps
                        .iter()
                        .filter(|r| r.noise == noise && r.p == p && r.method == method && r.prior == prior)
                        .map(|r| r.metrics)
                        .collect();
                    let (mean, se) = aggregate(&items);
                    cells.push(CellSummary {
                        noise,
                        p,
                        method,
                        prior,
                        mean,
                        se,
                    });
                }
            }
        }
    }
    Ok(BenchmarkResult {
        spec: spec.clone(),
        reps,
        cells,
    })
}

const METRIC_NAMES: [&str; 4] = ["MSE", "MAD", "MCIW", "CP"];

fn metric_values(m: &Metrics) -> [f64; 4] {
    [m.mse, m.mad, m.mciw, m.cp]
}

/// One block per noise: rows `method-prior`, columns `metric_p`.
pub fn wide_table(res: &BenchmarkResult) -> String {
    let spec = &res.spec;
    let mut out = String::from("noise,fit");
    for name in METRIC_NAMES {
        for p in &spec.levels {
            let _ = write!(out, ",{name}_p{p}");
        }
    }
    out.push('\n');
    for &noise in &spec.noises {
        for &method in &spec.methods {
            for &prior in &spec.priors {
                let _ = write!(out, "{noise},{}-{}", method.label(), prior.short());
                for k in 0..METRIC_NAMES.len() {
                    for &p in &spec.levels {
                        let c = res.cell(noise, p, method, prior).expect("cell present");
                        let _ = write!(out, ",{}", fmt_real(metric_values(&c.mean)[k]));
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

/// One row per (noise, p, method, prior, metric) with mean and standard error.
pub fn long_table(res: &BenchmarkResult) -> String {
    let mut out = String::from("noise,p,method,prior,metric,mean,se\n");
    for c in &res.cells {
        let (mean, se) = (metric_values(&c.mean), metric_values(&c.se));
        for k in 0..METRIC_NAMES.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.noise,
                c.p,
                c.method,
                c.prior,
                METRIC_NAMES[k].to_ascii_lowercase(),
                fmt_real(mean[k]),
                fmt_real(se[k])
            );
        }
    }
    out
}

/// Per-replication metrics.
pub fn replication_table(res: &BenchmarkResult) -> String {
    let mut out = String::from("noise,p,method,prior,rep,mse,mad,mciw,cp\n");
    for r in &res.reps {
        let _ = write!(out, "{},{},{},{},{}", r.noise, r.p, r.method, r.prior, r.rep + 1);
        for v in metric_values(&r.metrics) {
            let _ = write!(out, ",{}", fmt_real(v));
        }
        out.push('\n');
    }
    out
}

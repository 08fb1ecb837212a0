//! Command-line front end: `fit`, `simulate`, `benchmark` and `diffop`.
//!
//! Every flag can also be set in a TOML file passed with `--config`, using
//! the long flag name as key (`max-iter = 200`). Flags given on
//! the command line override the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::benchmark::{long_table, replication_table, run_benchmark, wide_table, BenchmarkSpec};
use crate::dists::TruncationBounds;
use crate::error::{Error, Result};
use crate::gibbs::{run_gibbs, GibbsConfig};
use crate::graph::{operator_for, regularize_operator, Graph};
use crate::io;
use crate::model::{Dataset, Model, ModelSpec, Prior};
use crate::posterior::{metrics, summarize, Method};
use crate::simgen::{Noise, Scenario, ScenarioKind, MIXED_SD};
use crate::vb::{run_vb, VbConfig};

#[derive(Debug, Parser)]
#[command(name = "bqtf", version, about = "Bayesian quantile trend filtering on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a quantile trend to data on a graph.
    Fit(FitArgs),
    /// Write replicated datasets of a simulation scenario.
    Simulate(SimulateArgs),
    /// Run a replicated simulation study and tabulate the metrics.
    Benchmark(BenchmarkArgs),
    /// Dump the difference operator of a graph.
    Diffop(DiffopArgs),
}

macro_rules! fill_from {
    ($dst:expr, $src:expr; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct GraphArgs {
    /// Edge list CSV (`u,v` or `u,v,weight`, 1-based vertex ids).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Chain graph on N vertices.
    #[arg(long, value_name = "N")]
    pub chain: Option<usize>,
    /// Rectangular lattice, e.g. `10x10`.
    #[arg(long, value_name = "RxC")]
    pub lattice: Option<String>,
}

impl GraphArgs {
    fn fill(&mut self, file: GraphArgs) {
        fill_from!(self, file; edges, chain, lattice);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FitArgs {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Observations CSV (`node,value`, or one value per line).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// Quantile level in (0, 1) [default: 0.5].
    #[arg(long)]
    pub p: Option<f64>,
    /// Trend order; the penalty acts on differences of order k + 1 [default: 0].
    #[arg(long)]
    pub k: Option<usize>,
    /// Shrinkage prior: normal, laplace or horseshoe [default: horseshoe].
    #[arg(long)]
    pub prior: Option<String>,
    /// Inference engine: mcmc or vb [default: mcmc].
    #[arg(long)]
    pub method: Option<String>,
    /// Retained-phase Gibbs sweeps after burn-in [default: 5000].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Gibbs burn-in sweeps [default: 500].
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Gibbs thinning interval [default: 10].
    #[arg(long)]
    pub thin: Option<usize>,
    /// Maximum VB iterations [default: 500].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// VB tolerance on the relative change of the mean [default: 1e-6].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shape of the σ² prior [default: 0.1].
    #[arg(long)]
    pub a_sigma: Option<f64>,
    /// Rate of the σ² prior [default: 0.1].
    #[arg(long)]
    pub b_sigma: Option<f64>,
    /// Lower truncation bound of the local scales [default: 1e-10].
    #[arg(long)]
    pub lower_bound: Option<f64>,
    /// Upper truncation bound of the local scales [default: 1e10].
    #[arg(long)]
    pub upper_bound: Option<f64>,
    /// True signal CSV; when given, `metrics.csv` is written.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl FitArgs {
    fn fill(&mut self, file: FitArgs) {
        self.graph.fill(file.graph);
        fill_from!(self, file; data, p, k, prior, method, iters, burnin, thin, max_iter, tol, seed, out,
            a_sigma, b_sigma, lower_bound, upper_bound, truth);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Scenario: pc, vs or lattice [default: pc].
    #[arg(long)]
    pub scenario: Option<String>,
    /// Noise: gauss, beta or mixed (pc, vs); lattice is always contaminated [default: gauss].
    #[arg(long)]
    pub noise: Option<String>,
    /// Contamination mean of the lattice scenario [default: 10].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Component standard deviation of the mixed noise [default: 0.7071...].
    #[arg(long)]
    pub mixed_sd: Option<f64>,
    /// Chain length for pc and vs [default: 100].
    #[arg(long)]
    pub n: Option<usize>,
    /// Lattice size for the lattice scenario [default: 10x10].
    #[arg(long, value_name = "RxC")]
    pub lattice: Option<String>,
    /// Replications [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Quantile levels written to the truth file [default: 0.25,0.5,0.75].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Option<Vec<f64>>,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    fn fill(&mut self, file: SimulateArgs) {
        fill_from!(self, file; scenario, noise, mu, mixed_sd, n, lattice, reps, p, seed, out);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BenchmarkArgs {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Scenario: pc, vs or lattice [default: pc].
    #[arg(long)]
    pub scenario: Option<String>,
    /// Noise settings [default: gauss,beta,mixed; contaminated for lattice].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub noise: Option<Vec<String>>,
    /// Contamination mean of the lattice scenario [default: 10].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Component standard deviation of the mixed noise [default: 0.7071...].
    #[arg(long)]
    pub mixed_sd: Option<f64>,
    /// Chain length for pc and vs [default: 100].
    #[arg(long)]
    pub n: Option<usize>,
    /// Lattice size for the lattice scenario [default: 10x10].
    #[arg(long, value_name = "RxC")]
    pub lattice: Option<String>,
    /// Trend order [default: 0].
    #[arg(long)]
    pub k: Option<usize>,
    /// Quantile levels [default: 0.25,0.5,0.75].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Option<Vec<f64>>,
    /// Priors [default: horseshoe,laplace,normal].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub prior: Option<Vec<String>>,
    /// Engines [default: mcmc,vb].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub method: Option<Vec<String>>,
    /// Replications [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Retained-phase Gibbs sweeps after burn-in [default: 5000].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Gibbs burn-in sweeps [default: 500].
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Gibbs thinning interval [default: 10].
    #[arg(long)]
    pub thin: Option<usize>,
    /// Maximum VB iterations [default: 500].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// VB tolerance [default: 1e-6].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shape of the σ² prior [default: 0.1].
    #[arg(long)]
    pub a_sigma: Option<f64>,
    /// Rate of the σ² prior [default: 0.1].
    #[arg(long)]
    pub b_sigma: Option<f64>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BenchmarkArgs {
    fn fill(&mut self, file: BenchmarkArgs) {
        fill_from!(self, file; scenario, noise, mu, mixed_sd, n, lattice, k, p, prior, method, reps, iters,
            burnin, thin, max_iter, tol, seed, a_sigma, b_sigma, threads, out);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DiffopArgs {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// Trend order; the operator has difference order k + 1 [default: 0].
    #[arg(long)]
    pub k: Option<usize>,
    /// Output directory; triplets go to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl DiffopArgs {
    fn fill(&mut self, file: DiffopArgs) {
        self.graph.fill(file.graph);
        fill_from!(self, file; k, out);
    }
}

/// Reads a TOML config and rejects keys that are not flags of `A`.
fn load_config<A: Args + for<'de> Deserialize<'de>>(path: &Path) -> Result<A> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| Error::input(path, e))?;
    let cmd = A::augment_args(clap::Command::new("config"));
    let known: Vec<&str> = cmd.get_arguments().filter_map(|a| a.get_long()).collect();
    if let Some(key) = table.keys().find(|k| *k == "config" || !known.contains(&k.as_str())) {
        return Err(Error::input(path, format!("unknown key '{key}'")));
    }
    toml::from_str(&text).map_err(|e| Error::input(path, e))
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("lattice size '{s}' is not of the form RxC"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        r.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.parse()).collect()
}

/// Builds the graph from exactly one source. `min_vertices` extends an edge
/// list to cover observed vertices without edges.
fn resolve_graph(g: &GraphArgs, min_vertices: usize) -> Result<Graph> {
    match (&g.edges, g.chain, &g.lattice) {
        (Some(path), None, None) => io::read_edges(path)?.into_graph(min_vertices),
        (None, Some(n), None) => Graph::chain(n),
        (None, None, Some(dims)) => {
            let (r, c) = parse_dims(dims)?;
            Graph::lattice(r, c)
        }
        (None, None, None) => Err(Error::invalid("no graph given: use --edges, --chain or --lattice")),
        _ => Err(Error::invalid("--edges, --chain and --lattice are mutually exclusive")),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Output {
        path: path.to_owned(),
        source,
    })
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("--{flag} is required")))
}

fn gibbs_config(iters: Option<usize>, burnin: Option<usize>, thin: Option<usize>, seed: u64) -> Result<GibbsConfig> {
    let burn_in = burnin.unwrap_or(500);
    let iters = iters.unwrap_or(5000);
    if iters == 0 {
        return Err(Error::invalid("--iters must be at least 1"));
    }
    let cfg = GibbsConfig {
        n_iter: burn_in + iters,
        burn_in,
        thin: thin.unwrap_or(10),
        seed,
    };
    cfg.validate()?;
    if cfg.retained() < 2 {
        return Err(Error::invalid("the protocol retains fewer than 2 draws"));
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct FitMeta<'a> {
    command: &'static str,
    version: &'static str,
    method: Method,
    interval: &'static str,
    model: &'a ModelSpec,
    n_vertices: usize,
    n_edges: usize,
    n_obs: usize,
    operator_rows: usize,
    fixed_rows: Vec<usize>,
    seed: u64,
    engine: serde_json::Value,
}

/// `fit`: writes `summary.csv`, `samples.csv` or `vb_state.csv`, `meta.json`
/// and, with `--truth`, `metrics.csv`.
pub fn cmd_fit(mut args: FitArgs) -> Result<()> {
    if let Some(path) = args.config.clone() {
        args.fill(load_config(&path)?);
    }
    let out = require(args.out, "out")?;
    let data_path = require(args.data, "data")?;
    let obs = io::read_observations(&data_path)?;
    let max_node = obs.iter().map(|&(i, _)| i + 1).max().unwrap_or(0);
    let graph = resolve_graph(&args.graph, max_node)?;
    let data = Dataset::from_pairs(graph.n_vertices(), &obs)?;
    let prior: Prior = args.prior.as_deref().unwrap_or("horseshoe").parse()?;
    let method: Method = args.method.as_deref().unwrap_or("mcmc").parse()?;
    let mut spec = ModelSpec::new(args.p.unwrap_or(0.5), args.k.unwrap_or(0), prior);
    spec.a_sigma = args.a_sigma.unwrap_or(spec.a_sigma);
    spec.b_sigma = args.b_sigma.unwrap_or(spec.b_sigma);
    spec.bounds = TruncationBounds::new(
        args.lower_bound.unwrap_or(spec.bounds.lower),
        args.upper_bound.unwrap_or(spec.bounds.upper),
    )?;
    let model = Model::new(&spec, &graph, &data)?;
    let truth = args
        .truth
        .as_deref()
        .map(|p| io::read_vector(p, graph.n_vertices()))
        .transpose()?;
    let seed = args.seed.unwrap_or(1);
    let gibbs_cfg = gibbs_config(args.iters, args.burnin, args.thin, seed)?;
    let vb_cfg = VbConfig {
        max_iter: args.max_iter.unwrap_or(500),
        tol: args.tol.unwrap_or(1e-6),
    };
    create_dir(&out)?;
    let (summary, engine) = match method {
        Method::Mcmc => {
            let samples = run_gibbs(&model, &gibbs_cfg)?;
            io::write_text(&out.join("samples.csv"), &io::samples_csv(&samples))?;
            (
                summarize(&samples)?,
                serde_json::to_value(gibbs_cfg).expect("serializable"),
            )
        }
        Method::Vb => {
            let fit = run_vb(&model, &vb_cfg)?;
            io::write_text(&out.join("vb_state.csv"), &io::vb_state_csv(&fit.state))?;
            let s = &fit.state;
            let engine = json!({
                "max_iter": vb_cfg.max_iter,
                "tol": vb_cfg.tol,
                "iterations": fit.iterations,
                "converged": fit.converged,
                "final_change": fit.final_change,
                "e_sigma2": s.e_sigma2,
                "e_inv_sigma2": s.e_inv_sigma2,
                "e_inv_tau2": s.e_inv_tau2,
            });
            if !fit.converged {
                eprintln!(
                    "warning: VB stopped after {} iterations with relative change {:e}",
                    fit.iterations, fit.final_change
                );
            }
            (fit.summary(), engine)
        }
    };
    io::write_text(&out.join("summary.csv"), &io::summary_csv(&summary))?;
    if let Some(truth) = &truth {
        io::write_text(&out.join("metrics.csv"), &io::metrics_csv(&metrics(&summary, truth)?))?;
    }
    let meta = FitMeta {
        command: "fit",
        version: env!("CARGO_PKG_VERSION"),
        method,
        interval: match method {
            Method::Mcmc => "quantile",
            Method::Vb => "variational",
        },
        model: &spec,
        n_vertices: graph.n_vertices(),
        n_edges: graph.n_edges(),
        n_obs: data.n_obs(),
        operator_rows: model.m(),
        fixed_rows: model.operator().fixed_rows().iter().map(|r| r + 1).collect(),
        seed,
        engine,
    };
    io::write_json(&out.join("meta.json"), &meta)
}

fn scenario_kind(name: Option<&str>, n: Option<usize>, lattice: Option<&str>) -> Result<ScenarioKind> {
    let n = n.unwrap_or(100);
    match name.unwrap_or("pc").to_ascii_lowercase().as_str() {
        "pc" => Ok(ScenarioKind::Pc { n }),
        "vs" => Ok(ScenarioKind::Vs { n }),
        "lattice" => {
            let (rows, cols) = parse_dims(lattice.unwrap_or("10x10"))?;
            Ok(ScenarioKind::Lattice { rows, cols })
        }
        other => Err(Error::invalid(format!(
            "unknown scenario '{other}' (expected pc, vs or lattice)"
        ))),
    }
}

/// Applies `--mu` / `--mixed-sd` to a parsed noise.
fn noise_with(noise: Noise, mu: Option<f64>, mixed_sd: Option<f64>) -> Result<Noise> {
    Ok(match noise {
        Noise::Mixed { .. } => {
            let sd = mixed_sd.unwrap_or(MIXED_SD);
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(Error::invalid(format!("--mixed-sd must be positive, got {sd}")));
            }
            Noise::Mixed { sd }
        }
        Noise::Contaminated { mu: default } => {
            let mu = mu.unwrap_or(default);
            if !mu.is_finite() {
                return Err(Error::invalid("--mu must be finite"));
            }
            Noise::Contaminated { mu }
        }
        other => other,
    })
}

fn default_noise(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Lattice { .. } => "contaminated",
        _ => "gauss",
    }
}

/// `simulate`: writes `edges.csv`, `truth.csv`, `data/rep_XXXX.csv` and
/// `manifest.json`.
pub fn cmd_simulate(mut args: SimulateArgs) -> Result<()> {
    if let Some(path) = args.config.clone() {
        args.fill(load_config(&path)?);
    }
    let out = require(args.out, "out")?;
    let kind = scenario_kind(args.scenario.as_deref(), args.n, args.lattice.as_deref())?;
    let noise: Noise = args.noise.as_deref().unwrap_or(default_noise(kind)).parse()?;
    let scenario = Scenario::new(kind, noise_with(noise, args.mu, args.mixed_sd)?)?;
    let reps = args.reps.unwrap_or(100);
    if reps == 0 {
        return Err(Error::invalid("--reps must be at least 1"));
    }
    let levels = args.p.unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    let seed = args.seed.unwrap_or(1);
    let graph = scenario.graph()?;
    let signal = scenario.signal();
    let truths = levels.iter().map(|&p| scenario.truth(p)).collect::<Result<Vec<_>>>()?;

    create_dir(&out.join("data"))?;
    io::write_text(&out.join("edges.csv"), &io::edges_csv(&graph))?;
    let mut truth_csv = String::from("node,x,signal");
    for p in &levels {
        truth_csv.push_str(&format!(",q{p}"));
    }
    truth_csv.push('\n');
    for i in 0..scenario.n() {
        truth_csv.push_str(&format!(
            "{},{},{}",
            i + 1,
            io::fmt_real(scenario.x(i)),
            io::fmt_real(signal[i])
        ));
        for t in &truths {
            truth_csv.push(',');
            truth_csv.push_str(&io::fmt_real(t[i]));
        }
        truth_csv.push('\n');
    }
    io::write_text(&out.join("truth.csv"), &truth_csv)?;
    let width = reps.to_string().len().max(3);
    let mut files = Vec::with_capacity(reps);
    for r in 0..reps {
        let name = format!("data/rep_{:0width$}.csv", r + 1);
        io::write_text(&out.join(&name), &io::dataset_csv(&scenario.replicate(seed, r as u64)?))?;
        files.push(name);
    }
    let manifest = json!({
        "command": "simulate",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario.label(),
        "kind": kind,
        "noise": scenario.noise,
        "master_seed": seed,
        "reps": reps,
        "levels": levels,
        "n_vertices": graph.n_vertices(),
        "n_edges": graph.n_edges(),
        "edges": "edges.csv",
        "truth": "truth.csv",
        "data": files,
    });
    io::write_json(&out.join("manifest.json"), &manifest)
}

/// `benchmark`: writes `table.csv`, `long.csv`, `replications.csv` and
/// `meta.json`, and prints the wide table.
pub fn cmd_benchmark(mut args: BenchmarkArgs) -> Result<()> {
    if let Some(path) = args.config.clone() {
        args.fill(load_config(&path)?);
    }
    let kind = scenario_kind(args.scenario.as_deref(), args.n, args.lattice.as_deref())?;
    let noise_names = args.noise.unwrap_or_else(|| match kind {
        ScenarioKind::Lattice { .. } => vec!["contaminated".into()],
        _ => vec!["gauss".into(), "beta".into(), "mixed".into()],
    });
    let noises = parse_list::<Noise>(&noise_names)?
        .into_iter()
        .map(|n| noise_with(n, args.mu, args.mixed_sd))
        .collect::<Result<Vec<_>>>()?;
    let seed = args.seed.unwrap_or(1);
    let mut spec = BenchmarkSpec::standard(kind, noises, args.k.unwrap_or(0), args.reps.unwrap_or(100), seed);
    if let Some(levels) = args.p {
        spec.levels = levels;
    }
    if let Some(p) = &args.prior {
        spec.priors = parse_list(p)?;
    }
    if let Some(m) = &args.method {
        spec.methods = parse_list(m)?;
    }
    spec.a_sigma = args.a_sigma.unwrap_or(spec.a_sigma);
    spec.b_sigma = args.b_sigma.unwrap_or(spec.b_sigma);
    spec.gibbs = gibbs_config(args.iters, args.burnin, args.thin, spec.gibbs.seed)?;
    spec.vb = VbConfig {
        max_iter: args.max_iter.unwrap_or(500),
        tol: args.tol.unwrap_or(1e-6),
    };
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let res = pool.install(|| run_benchmark(&spec))?;
    let wide = wide_table(&res);
    if let Some(out) = &args.out {
        create_dir(out)?;
        io::write_text(&out.join("table.csv"), &wide)?;
        io::write_text(&out.join("long.csv"), &long_table(&res))?;
        io::write_text(&out.join("replications.csv"), &replication_table(&res))?;
        io::write_json(
            &out.join("meta.json"),
            &json!({ "command": "benchmark", "version": env!("CARGO_PKG_VERSION"), "spec": spec }),
        )?;
    }
    print!("{wide}");
    Ok(())
}

/// `diffop`: `row,col,value` triplets of the order-`k+1` operator; the unit
/// rows that complete its rank are listed in `meta.json`.
pub fn cmd_diffop(mut args: DiffopArgs) -> Result<()> {
    if let Some(path) = args.config.clone() {
        args.fill(load_config(&path)?);
    }
    let graph = resolve_graph(&args.graph, 0)?;
    let k = args.k.unwrap_or(0);
    let op = operator_for(&graph, k)?;
    let full = regularize_operator(&op);
    let triplets = io::operator_csv(&op, false);
    let augmentation: Vec<serde_json::Value> = full
        .fixed_rows()
        .iter()
        .map(|&r| {
            let (cols, _) = full.matrix().row(r);
            json!({ "row": r + 1, "col": cols[0] + 1 })
        })
        .collect();
    match &args.out {
        Some(out) => {
            create_dir(out)?;
            io::write_text(&out.join("operator.csv"), &triplets)?;
            io::write_json(
                &out.join("meta.json"),
                &json!({
                    "command": "diffop",
                    "version": env!("CARGO_PKG_VERSION"),
                    "order": op.order(),
                    "nrows": op.nrows(),
                    "ncols": op.ncols(),
                    "nnz": op.matrix().nnz(),
                    "weighted": graph.weights().is_some(),
                    "fixed_rows": full.fixed_rows().iter().map(|r| r + 1).collect::<Vec<_>>(),
                    "augmentation": augmentation,
                }),
            )
        }
        None => {
            print!("{triplets}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Diffop(a) => cmd_diffop(a),
    }
}

/// Parses `std::env::args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

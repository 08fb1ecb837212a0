//! Python bindings: graphs, difference operators, model fitting with either
//! engine, simulation scenarios and evaluation metrics.
//!
//! Vertex ids are 0-based on the Python side. Vectors cross the boundary as
//! plain lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bqtf::error::Error;
use bqtf::gibbs::{run_gibbs, GibbsConfig};
use bqtf::graph::{operator_for, regularize_operator};
use bqtf::model::{Dataset, ModelSpec, Prior};
use bqtf::posterior::{metrics as core_metrics, summarize, FitSummary, Method, PosteriorSamples};
use bqtf::simgen::{Noise, Scenario as CoreScenario, ScenarioKind};
use bqtf::vb::{run_vb, VbConfig, VbFit};

fn to_py(err: Error) -> PyErr {
    match err.exit_code() {
        2 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Sparse matrix as `(rows, cols, values)` plus the pinned row indices.
type Triplets = (Vec<usize>, Vec<usize>, Vec<f64>, Vec<usize>);

/// Undirected graph with optional edge weights.
#[pyclass(module = "pybqtf", frozen)]
struct Graph {
    inner: bqtf::graph::Graph,
}

#[pymethods]
impl Graph {
    #[new]
    #[pyo3(signature = (n_vertices, edges, weights=None))]
    fn new(n_vertices: usize, edges: Vec<(usize, usize)>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = bqtf::graph::Graph::new(n_vertices, edges, weights).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn chain(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: bqtf::graph::Graph::chain(n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn lattice(rows: usize, cols: usize) -> PyResult<Self> {
        Ok(Self {
            inner: bqtf::graph::Graph::lattice(rows, cols).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    #[getter]
    fn n_components(&self) -> usize {
        self.inner.n_components()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n_vertices={}, n_edges={})",
            self.inner.n_vertices(),
            self.inner.n_edges()
        )
    }
}

/// Order-`k` difference operator as `(rows, cols, values, fixed_rows)`
/// triplets. With `regularize`, rows pinning the null space are appended and
/// listed in `fixed_rows`.
#[pyfunction]
#[pyo3(signature = (graph, k, regularize=true))]
fn difference_operator(graph: &Graph, k: usize, regularize: bool) -> PyResult<Triplets> {
    let mut op = operator_for(&graph.inner, k).map_err(to_py)?;
    if regularize {
        op = regularize_operator(&op);
    }
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for (r, c, v) in op.matrix().triplets() {
        rows.push(r);
        cols.push(c);
        vals.push(v);
    }
    Ok((rows, cols, vals, op.fixed_rows().to_vec()))
}

fn summary_dict<'py>(py: Python<'py>, s: &FitSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("point", s.point.clone())?;
    d.set_item("lower", s.lower.clone())?;
    d.set_item("upper", s.upper.clone())?;
    d.set_item("method", s.method.to_string())?;
    Ok(d)
}

/// Retained Gibbs draws.
#[pyclass(module = "pybqtf", frozen)]
struct Samples {
    inner: PosteriorSamples,
}

#[pymethods]
impl Samples {
    #[getter]
    fn n_draws(&self) -> usize {
        self.inner.n_draws()
    }

    /// Draws of `θ`, one list per retained sweep.
    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n_draws()).map(|r| self.inner.draw(r).to_vec()).collect()
    }

    #[getter]
    fn sigma2(&self) -> Vec<f64> {
        self.inner.sigma2.clone()
    }

    #[getter]
    fn tau2(&self) -> Vec<f64> {
        self.inner.tau2.clone()
    }

    fn trace(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.n {
            return Err(PyValueError::new_err(format!("vertex {i} out of range")));
        }
        Ok(self.inner.trace(i))
    }

    /// Posterior medians with equal-tailed 95% intervals.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        summary_dict(py, &summarize(&self.inner).map_err(to_py)?)
    }
}

/// Mean-field variational fit.
#[pyclass(module = "pybqtf", frozen)]
struct VbResult {
    inner: VbFit,
}

#[pymethods]
impl VbResult {
    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.state.mean.clone()
    }

    /// Marginal variances of the `θ` factor.
    #[getter]
    fn variance(&self) -> Vec<f64> {
        let s = &self.inner.state;
        s.b_inv_diag.iter().map(|b| s.e_sigma2 * b).collect()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn history(&self) -> Vec<f64> {
        self.inner.history.clone()
    }

    #[getter]
    fn e_sigma2(&self) -> f64 {
        self.inner.state.e_sigma2
    }

    /// Means with 95% intervals from the Gaussian factor.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        summary_dict(py, &self.inner.summary())
    }
}

/// Quantile trend filtering model on a graph.
#[pyclass(module = "pybqtf", frozen)]
struct Model {
    inner: bqtf::model::Model,
}

#[pymethods]
impl Model {
    /// `y` holds one value per vertex; alternatively pass `nodes` to give
    /// the vertex of each value (repeats allowed, vertices may be empty).
    #[new]
    #[pyo3(signature = (graph, y, p=0.5, k=0, prior="horseshoe", nodes=None, a_sigma=0.1, b_sigma=0.1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        graph: &Graph,
        y: Vec<f64>,
        p: f64,
        k: usize,
        prior: &str,
        nodes: Option<Vec<usize>>,
        a_sigma: f64,
        b_sigma: f64,
    ) -> PyResult<Self> {
        let data = match nodes {
            None => Dataset::one_per_node(&y),
            Some(nodes) => {
                if nodes.len() != y.len() {
                    return Err(PyValueError::new_err(format!(
                        "{} nodes given for {} values",
                        nodes.len(),
                        y.len()
                    )));
                }
                let pairs: Vec<(usize, f64)> = nodes.into_iter().zip(y).collect();
                Dataset::from_pairs(graph.inner.n_vertices(), &pairs)
            }
        }
        .map_err(to_py)?;
        let mut spec = ModelSpec::new(p, k, parse::<Prior>(prior)?);
        spec.a_sigma = a_sigma;
        spec.b_sigma = b_sigma;
        let inner = bqtf::model::Model::new(&spec, &graph.inner, &data).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Runs one Gibbs chain; `n_iter` counts every sweep including burn-in.
    #[pyo3(signature = (n_iter=5000, burn_in=500, thin=10, seed=1))]
    fn gibbs(&self, py: Python<'_>, n_iter: usize, burn_in: usize, thin: usize, seed: u64) -> PyResult<Samples> {
        let cfg = GibbsConfig {
            n_iter,
            burn_in,
            thin,
            seed,
        };
        let model = &self.inner;
        let inner = py.detach(|| run_gibbs(model, &cfg)).map_err(to_py)?;
        Ok(Samples { inner })
    }

    #[pyo3(signature = (max_iter=500, tol=1e-6))]
    fn vb(&self, py: Python<'_>, max_iter: usize, tol: f64) -> PyResult<VbResult> {
        let cfg = VbConfig { max_iter, tol };
        let model = &self.inner;
        let inner = py.detach(|| run_vb(model, &cfg)).map_err(to_py)?;
        Ok(VbResult { inner })
    }
}

/// Simulation design: `kind` is `pc`, `vs` or `lattice`, `noise` one of
/// `gauss`, `beta`, `mixed` or `contaminated`.
#[pyclass(module = "pybqtf", frozen)]
struct Scenario {
    inner: CoreScenario,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (kind, noise, n=100, rows=10, cols=10, mu=10.0))]
    fn new(kind: &str, noise: &str, n: usize, rows: usize, cols: usize, mu: f64) -> PyResult<Self> {
        let kind = match kind.to_ascii_lowercase().as_str() {
            "pc" => ScenarioKind::Pc { n },
            "vs" => ScenarioKind::Vs { n },
            "lattice" => ScenarioKind::Lattice { rows, cols },
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown scenario '{other}' (expected pc, vs or lattice)"
                )))
            }
        };
        let noise = match parse::<Noise>(noise)? {
            Noise::Contaminated { .. } => Noise::Contaminated { mu },
            other => other,
        };
        Ok(Self {
            inner: CoreScenario::new(kind, noise).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn graph(&self) -> PyResult<Graph> {
        Ok(Graph {
            inner: self.inner.graph().map_err(to_py)?,
        })
    }

    /// True `p`-th conditional quantile at every vertex.
    fn truth(&self, p: f64) -> PyResult<Vec<f64>> {
        self.inner.truth(p).map_err(to_py)
    }

    /// Observations of replication `rep` under `master_seed`, one per vertex.
    fn replicate(&self, master_seed: u64, rep: u64) -> PyResult<Vec<f64>> {
        Ok(self.inner.replicate(master_seed, rep).map_err(to_py)?.values().to_vec())
    }
}

/// MSE, MAD, mean interval width and coverage of a summary against `truth`.
#[pyfunction]
fn metrics<'py>(
    py: Python<'py>,
    point: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    truth: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let summary = FitSummary {
        point,
        lower,
        upper,
        method: Method::Mcmc,
    };
    let m = core_metrics(&summary, &truth).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mse", m.mse)?;
    d.set_item("mad", m.mad)?;
    d.set_item("mciw", m.mciw)?;
    d.set_item("cp", m.cp)?;
    Ok(d)
}

#[pymodule]
fn pybqtf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Model>()?;
    m.add_class::<Samples>()?;
    m.add_class::<VbResult>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(difference_operator, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    Ok(())
}

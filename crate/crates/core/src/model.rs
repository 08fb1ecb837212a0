//! Model specification, observation containers and validated model
//! instances shared by both inference engines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dists::TruncationBounds;
use crate::error::{Error, Result};
use crate::graph::{operator_for, regularize_operator, DifferenceOperator, Graph};
use crate::posterior::quantile_type7;

/// Shrinkage prior placed on the graph differences `η = Dθ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    Normal,
    Laplace,
    Horseshoe,
}

impl Prior {
    pub const ALL: [Prior; 3] = [Prior::Horseshoe, Prior::Laplace, Prior::Normal];

    /// Short label used in benchmark tables.
    pub fn short(&self) -> &'static str {
        match self {
            Prior::Normal => "Norm",
            Prior::Laplace => "Lap",
            Prior::Horseshoe => "HS",
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prior::Normal => "normal",
            Prior::Laplace => "laplace",
            Prior::Horseshoe => "horseshoe",
        })
    }
}

impl FromStr for Prior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "norm" => Ok(Prior::Normal),
            "laplace" | "lap" => Ok(Prior::Laplace),
            "horseshoe" | "hs" => Ok(Prior::Horseshoe),
            other => Err(Error::invalid(format!(
                "unknown prior '{other}' (expected normal, laplace or horseshoe)"
            ))),
        }
    }
}

/// `(ψ, t²)` of the normal variance-mean representation of the asymmetric
/// Laplace likelihood at quantile level `p`.
pub fn derive_augmentation_constants(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let q = p * (1.0 - p);
    Ok(((1.0 - 2.0 * p) / q, 2.0 / q))
}

/// Quantile level, operator order, prior family and hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: f64,
    pub k: usize,
    pub prior: Prior,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub bounds: TruncationBounds,
}

impl ModelSpec {
    /// Spec with default hyperparameters `a_σ = b_σ = 0.1` and default bounds.
    pub fn new(p: f64, k: usize, prior: Prior) -> Self {
        Self {
            p,
            k,
            prior,
            a_sigma: 0.1,
            b_sigma: 0.1,
            bounds: TruncationBounds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        derive_augmentation_constants(self.p)?;
        if !(self.a_sigma > 0.0 && self.a_sigma.is_finite() && self.b_sigma > 0.0 && self.b_sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma2 hyperparameters must be positive, got a={}, b={}",
                self.a_sigma, self.b_sigma
            )));
        }
        TruncationBounds::new(self.bounds.lower, self.bounds.upper)?;
        Ok(())
    }

    /// `ψ = (1 - 2p) / (p(1 - p))`.
    pub fn psi(&self) -> f64 {
        (1.0 - 2.0 * self.p) / (self.p * (1.0 - self.p))
    }

    /// `t² = 2 / (p(1 - p))`.
    pub fn t2(&self) -> f64 {
        2.0 / (self.p * (1.0 - self.p))
    }
}

/// Observations grouped by node; a node may carry zero, one or many values.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    node_ptr: Vec<usize>,
    values: Vec<f64>,
}

impl Dataset {
    /// Groups `(node, value)` pairs (0-based nodes), keeping the input
    /// order within each node.
    pub fn from_pairs(n_nodes: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n_nodes + 1];
        for &(node, value) in pairs {
            if node >= n_nodes {
                return Err(Error::DimensionMismatch(format!(
                    "observation at node {} but the graph has {n_nodes} vertices",
                    node + 1
                )));
            }
            if !value.is_finite() {
                return Err(Error::invalid(format!("non-finite observation at node {}", node + 1)));
            }
            counts[node + 1] += 1;
        }
        for i in 0..n_nodes {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut values = vec![0.0; pairs.len()];
        for &(node, value) in pairs {
            values[fill[node]] = value;
            fill[node] += 1;
        }
        Ok(Self {
            node_ptr: counts,
            values,
        })
    }

    /// One observation per node.
    pub fn one_per_node(values: &[f64]) -> Result<Self> {
        let pairs: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
        Self::from_pairs(values.len(), &pairs)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ptr.len() - 1
    }

    /// Total number of observations `N`.
    pub fn n_obs(&self) -> usize {
        self.values.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[self.node_ptr[i]..self.node_ptr[i + 1]]
    }

    /// Offsets of each node's observations in [`Dataset::values`].
    pub fn node_ptr(&self) -> &[usize] {
        &self.node_ptr
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(node, value)` pairs in storage order.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        (0..self.n_nodes())
            .flat_map(|i| self.node(i).iter().map(move |&v| (i, v)))
            .collect()
    }
}

/// Prior-specific auxiliary variables.
#[derive(Clone, Debug, PartialEq)]
pub enum PriorAux {
    Normal,
    Laplace { gamma2: f64, nu: f64 },
    Horseshoe { nu: Vec<f64> },
}

/// Local scales `w²` (one per operator row) and their auxiliaries.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorState {
    pub w2: Vec<f64>,
    pub aux: PriorAux,
}

/// A specification checked against its graph and data, with the
/// regularized difference operator built.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    graph: Graph,
    operator: DifferenceOperator,
    data: Dataset,
}

/// Checks dimensions and hyperparameters and builds the operator.
pub fn validate_spec(spec: &ModelSpec, graph: &Graph, data: &Dataset) -> Result<Model> {
    spec.validate()?;
    if data.n_nodes() != graph.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} nodes but the graph has {} vertices",
            data.n_nodes(),
            graph.n_vertices()
        )));
    }
    if data.n_obs() == 0 {
        return Err(Error::invalid("dataset contains no observations"));
    }
    let operator = regularize_operator(&operator_for(graph, spec.k)?);
    Ok(Model {
        spec: spec.clone(),
        graph: graph.clone(),
        operator,
        data: data.clone(),
    })
}

impl Model {
    pub fn new(spec: &ModelSpec, graph: &Graph, data: &Dataset) -> Result<Self> {
        validate_spec(spec, graph, data)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn operator(&self) -> &DifferenceOperator {
        &self.operator
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Number of signal values `n`.
    pub fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    /// Number of operator rows `m`, including appended rows.
    pub fn m(&self) -> usize {
        self.operator.nrows()
    }

    /// Per-node empirical `p`-quantile; nodes without data get the median of
    /// the whole dataset.
    pub fn initial_theta(&self) -> Vec<f64> {
        let mut all = self.data.values().to_vec();
        all.sort_by(f64::total_cmp);
        let fallback = quantile_type7(&all, 0.5);
        (0..self.n())
            .map(|i| {
                let mut v = self.data.node(i).to_vec();
                if v.is_empty() {
                    fallback
                } else {
                    v.sort_by(f64::total_cmp);
                    quantile_type7(&v, self.spec.p)
                }
            })
            .collect()
    }

    /// Unit local scales with appended rows pinned at the upper bound.
    pub fn initial_prior_state(&self) -> PriorState {
        let m = self.m();
        let upper = self.spec.bounds.upper;
        let w2 = (0..m)
            .map(|r| {
                if self.operator.is_fixed(r) {
                    upper
                } else {
                    1.0f64.clamp(self.spec.bounds.lower, upper)
                }
            })
            .collect();
        let aux = match self.spec.prior {
            Prior::Normal => PriorAux::Normal,
            Prior::Laplace => PriorAux::Laplace { gamma2: 1.0, nu: 1.0 },
            Prior::Horseshoe => PriorAux::Horseshoe { nu: vec![1.0; m] },
        };
        PriorState { w2, aux }
    }
}

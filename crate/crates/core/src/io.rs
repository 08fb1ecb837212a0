//! CSV ingestion and result persistence.
//!
//! Files use 1-based vertex ids. A first line whose leading field is not
//! numeric is treated as a header, and lines starting with `#` are skipped.
//! Every real number is written with 17 significant digits so files round-trip
//! exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{DifferenceOperator, Graph};
use crate::model::Dataset;
use crate::posterior::{FitSummary, Metrics, PosteriorSamples};
use crate::vb::VariationalState;

/// Edge list read from disk, 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList {
    pub edges: Vec<(usize, usize)>,
    pub weights: Option<Vec<f64>>,
    /// Largest vertex id seen plus one.
    pub n_vertices: usize,
}

impl EdgeList {
    /// Graph on `max(n_vertices, self.n_vertices)` vertices.
    pub fn into_graph(self, n_vertices: usize) -> Result<Graph> {
        Graph::new(n_vertices.max(self.n_vertices), self.edges, self.weights)
    }
}

/// Round-trip formatting of one real.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn records(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::input(path, e))?;
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::input(path, e))?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        let fields: Vec<String> = rec.iter().map(str::to_owned).collect();
        if fields.iter().all(String::is_empty) {
            continue;
        }
        if out.is_empty() && k == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        out.push((line, fields));
    }
    Ok(out)
}

fn parse_id(path: &Path, line: u64, s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(Error::input(
            path,
            format!("line {line}: '{s}' is not a vertex id (1-based)"),
        )),
    }
}

fn parse_real(path: &Path, line: u64, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::input(path, format!("line {line}: '{s}' is not a finite number"))),
    }
}

/// Reads `u,v` or `u,v,weight` rows. Either every row carries a weight or
/// none does.
pub fn read_edges(path: &Path) -> Result<EdgeList> {
    let rows = records(path)?;
    let mut edges = Vec::with_capacity(rows.len());
    let mut weights = Vec::new();
    let weighted = rows.first().is_some_and(|(_, f)| f.len() >= 3);
    for (line, f) in &rows {
        if f.len() != if weighted { 3 } else { 2 } {
            return Err(Error::input(
                path,
                format!(
                    "line {line}: expected {} fields, found {}",
                    if weighted { 3 } else { 2 },
                    f.len()
                ),
            ));
        }
        edges.push((parse_id(path, *line, &f[0])?, parse_id(path, *line, &f[1])?));
        if weighted {
            weights.push(parse_real(path, *line, &f[2])?);
        }
    }
    if edges.is_empty() {
        return Err(Error::input(path, "no edges"));
    }
    let n_vertices = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    Ok(EdgeList {
        edges,
        weights: weighted.then_some(weights),
        n_vertices,
    })
}

/// Reads `node,value` rows (repeated nodes allowed) or a single value column
/// with one observation per vertex in order. Returns 0-based pairs.
pub fn read_observations(path: &Path) -> Result<Vec<(usize, f64)>> {
    let rows = records(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (k, (line, f)) in rows.iter().enumerate() {
        match f.len() {
            1 => out.push((k, parse_real(path, *line, &f[0])?)),
            2 => out.push((parse_id(path, *line, &f[0])?, parse_real(path, *line, &f[1])?)),
            n => {
                return Err(Error::input(
                    path,
                    format!("line {line}: expected 1 or 2 fields, found {n}"),
                ));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::input(path, "no observations"));
    }
    Ok(out)
}

/// Reads a per-vertex vector (`node,value` with every vertex exactly once,
/// or a single column).
pub fn read_vector(path: &Path, n: usize) -> Result<Vec<f64>> {
    let pairs = read_observations(path)?;
    let mut out = vec![f64::NAN; n];
    for &(i, v) in &pairs {
        if i >= n {
            return Err(Error::input(path, format!("vertex {} outside 1..={n}", i + 1)));
        }
        if !out[i].is_nan() {
            return Err(Error::input(path, format!("vertex {} listed twice", i + 1)));
        }
        out[i] = v;
    }
    if let Some(i) = out.iter().position(|v| v.is_nan()) {
        return Err(Error::input(path, format!("vertex {} missing", i + 1)));
    }
    Ok(out)
}

/// Writes `contents` to `path`.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Output {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    write_text(path, &s)
}

pub fn summary_csv(s: &FitSummary) -> String {
    let mut out = String::from("node,point,lower,upper\n");
    for i in 0..s.point.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            fmt_real(s.point[i]),
            fmt_real(s.lower[i]),
            fmt_real(s.upper[i])
        );
    }
    out
}

/// One row per retained draw: `draw,sigma2,tau2,theta_1..theta_n`.
pub fn samples_csv(s: &PosteriorSamples) -> String {
    let mut out = String::from("draw,sigma2,tau2");
    for i in 1..=s.n {
        let _ = write!(out, ",theta_{i}");
    }
    out.push('\n');
    for r in 0..s.n_draws() {
        let _ = write!(out, "{},{},{}", r + 1, fmt_real(s.sigma2[r]), fmt_real(s.tau2[r]));
        for v in s.draw(r) {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push('\n');
    }
    out
}

/// Per-vertex variational factors: mean, marginal variance and `E[θ²]`.
pub fn vb_state_csv(s: &VariationalState) -> String {
    let mut out = String::from("node,mean,variance,e_theta2\n");
    for i in 0..s.mean.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            fmt_real(s.mean[i]),
            fmt_real(s.e_sigma2 * s.b_inv_diag[i]),
            fmt_real(s.e_theta2[i])
        );
    }
    out
}

pub fn metrics_csv(m: &Metrics) -> String {
    format!(
        "mse,mad,mciw,cp\n{},{},{},{}\n",
        fmt_real(m.mse),
        fmt_real(m.mad),
        fmt_real(m.mciw),
        fmt_real(m.cp)
    )
}

pub fn edges_csv(g: &Graph) -> String {
    let mut out = String::from(if g.weights().is_some() { "u,v,weight\n" } else { "u,v\n" });
    for (l, &(i, j)) in g.edges().iter().enumerate() {
        match g.weights() {
            Some(w) => {
                let _ = writeln!(out, "{},{},{}", i + 1, j + 1, fmt_real(w[l]));
            }
            None => {
                let _ = writeln!(out, "{},{}", i + 1, j + 1);
            }
        }
    }
    out
}

pub fn dataset_csv(d: &Dataset) -> String {
    let mut out = String::from("node,value\n");
    for (i, v) in d.pairs() {
        let _ = writeln!(out, "{},{}", i + 1, fmt_real(v));
    }
    out
}

/// `row,col,value` triplets (1-based) of the rows of `op` not listed in
/// `skip_fixed`.
pub fn operator_csv(op: &DifferenceOperator, skip_fixed: bool) -> String {
    let mut out = String::from("row,col,value\n");
    for (r, c, v) in op.matrix().triplets() {
        if skip_fixed && op.is_fixed(r) {
            continue;
        }
        let _ = writeln!(out, "{},{},{}", r + 1, c + 1, fmt_real(v));
    }
    out
}

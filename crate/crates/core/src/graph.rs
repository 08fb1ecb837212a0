//! Undirected graphs and their difference operators.
//!
//! Vertices are 0-based inside the library. Edges are stored with `i < j`
//! and sorted lexicographically, and the rows of every first-order operator
//! follow that edge order.

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, Skyline};

/// Undirected graph with optional positive edge weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
}

impl Graph {
    /// Validates and normalizes an edge list. Endpoints are reordered so the
    /// smaller index comes first, then edges are sorted; weights follow their
    /// edges.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>, weights: Option<Vec<f64>>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        if let Some(w) = &weights {
            if w.len() != edges.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {} edges",
                    w.len(),
                    edges.len()
                )));
            }
            if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid(format!("edge weight {bad} is not positive")));
            }
        }
        let mut keyed: Vec<((usize, usize), f64)> = edges
            .iter()
            .enumerate()
            .map(|(l, &(a, b))| {
                let w = weights.as_ref().map_or(1.0, |w| w[l]);
                ((a.min(b), a.max(b)), w)
            })
            .collect();
        for &((i, j), _) in &keyed {
            if j >= n_vertices {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) references a vertex outside 1..={n_vertices}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop at vertex {}", i + 1)));
            }
        }
        keyed.sort_by_key(|a| a.0);
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
            let (i, j) = w[0].0;
            return Err(Error::invalid(format!("duplicate edge ({}, {})", i + 1, j + 1)));
        }
        let has_weights = weights.is_some();
        Ok(Self {
            n_vertices,
            edges: keyed.iter().map(|e| e.0).collect(),
            weights: has_weights.then(|| keyed.iter().map(|e| e.1).collect()),
        })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("chain graph needs n >= 2, got {n}")));
        }
        Self::new(n, (0..n - 1).map(|i| (i, i + 1)).collect(), None)
    }

    /// Four-neighbour lattice with vertices numbered row-major.
    pub fn lattice(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "lattice dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, edges, None)
    }

    /// Same graph carrying the given edge weights.
    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.n_vertices, self.edges, Some(weights))
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Number of connected components.
    pub fn n_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n_vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut count = self.n_vertices;
        for &(i, j) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }
}

/// Sparse difference operator of a given order, possibly augmented by unit
/// rows whose local scales are pinned.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceOperator {
    matrix: CsrMatrix,
    order: usize,
    fixed_rows: Vec<usize>,
}

impl DifferenceOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Difference order `k + 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Indices of rows appended by [`regularize_operator`].
    pub fn fixed_rows(&self) -> &[usize] {
        &self.fixed_rows
    }

    pub fn is_fixed(&self, row: usize) -> bool {
        self.fixed_rows.binary_search(&row).is_ok()
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Rows that are penalized through free local scales.
    pub fn n_free_rows(&self) -> usize {
        self.nrows() - self.fixed_rows.len()
    }

    /// `D θ`.
    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(theta)
    }
}

/// Edge incidence operator: row `l` for edge `(i, j)` has `+1` at `i` and
/// `-1` at `j`.
pub fn first_difference_operator(g: &Graph) -> DifferenceOperator {
    let trips = g
        .edges()
        .iter()
        .enumerate()
        .flat_map(|(l, &(i, j))| [(l, i, 1.0), (l, j, -1.0)]);
    DifferenceOperator {
        matrix: CsrMatrix::from_triplets(g.n_edges(), g.n_vertices(), trips),
        order: 1,
        fixed_rows: Vec::new(),
    }
}

/// Operator of order `k + 1`, built by alternately left-multiplying by
/// `D1ᵀ` (odd steps) and `D1` (even steps).
pub fn higher_difference_operator(g: &Graph, k: usize) -> DifferenceOperator {
    let d1 = first_difference_operator(g).matrix;
    let d1t = d1.transpose();
    let mut d = d1.clone();
    for step in 1..=k {
        d = if step % 2 == 1 { d1t.matmul(&d) } else { d1.matmul(&d) };
    }
    DifferenceOperator {
        matrix: d,
        order: k + 1,
        fixed_rows: Vec::new(),
    }
}

/// Weighted second-order operator `D1ᵀ diag(1/ω) D1`.
pub fn adjusted_second_difference(g: &Graph) -> Result<DifferenceOperator> {
    let w = g
        .weights()
        .ok_or_else(|| Error::invalid("adjusted operator requires edge weights"))?;
    let d1 = first_difference_operator(g).matrix;
    let inv: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    Ok(DifferenceOperator {
        matrix: d1.transpose().matmul(&d1.scale_rows(&inv)),
        order: 2,
        fixed_rows: Vec::new(),
    })
}

/// The operator used for a model of order `k`: the adjusted operator for a
/// weighted graph with `k = 1`, the plain recursion for unweighted graphs.
pub fn operator_for(g: &Graph, k: usize) -> Result<DifferenceOperator> {
    match (g.weights().is_some(), k) {
        (false, _) => Ok(higher_difference_operator(g, k)),
        (true, 1) => adjusted_second_difference(g),
        (true, _) => Err(Error::invalid(format!(
            "edge weights are only supported for k = 1, got k = {k}"
        ))),
    }
}

/// Appends unit rows so the stacked operator has full column rank.
///
/// Dependent columns are found by a pivoted elimination of `DᵀD` that visits
/// columns from the last to the first, so the rows that get appended select
/// the lowest-index coordinates of each null direction.
pub fn regularize_operator(d: &DifferenceOperator) -> DifferenceOperator {
    let n = d.ncols();
    let gram = d.matrix.transpose().matmul(&d.matrix);
    let pairs: Vec<(usize, usize)> = gram.triplets().map(|(r, c, _)| (r, c)).collect();
    let mut sky = Skyline::new(n, pairs, (0..n).rev().collect());
    for (r, c, v) in gram.triplets() {
        if r >= c {
            let s = sky.slot(r, c).expect("entry inside envelope");
            sky.add_at(s, v);
        }
    }
    let dependent = sky.factor_semidefinite(1e-9);
    if dependent.is_empty() {
        return d.clone();
    }
    let m = d.nrows();
    let extra = CsrMatrix::from_triplets(
        dependent.len(),
        n,
        dependent.iter().enumerate().map(|(r, &c)| (r, c, 1.0)),
    );
    let mut fixed_rows = d.fixed_rows.clone();
    fixed_rows.extend(m..m + dependent.len());
    DifferenceOperator {
        matrix: d.matrix.vstack(&extra),
        order: d.order,
        fixed_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_lattice_sizes() {
        let g = Graph::chain(4).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(Graph::chain(2).unwrap().n_edges(), 1);
        assert_eq!(Graph::chain(100).unwrap().n_edges(), 99);
        assert!(Graph::chain(1).is_err());
        let l = Graph::lattice(10, 10).unwrap();
        assert_eq!((l.n_vertices(), l.n_edges()), (100, 180));
        assert_eq!(Graph::lattice(3, 3).unwrap().n_edges(), 12);
        assert_eq!(Graph::lattice(1, 5).unwrap(), Graph::chain(5).unwrap());
        assert!(Graph::lattice(0, 3).is_err());
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert!(Graph::new(3, vec![(0, 0)], None).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)], None).is_err());
        assert!(Graph::new(3, vec![(0, 3)], None).is_err());
        assert!(Graph::new(3, vec![(0, 1)], Some(vec![0.0])).is_err());
        assert!(Graph::new(3, vec![(0, 1)], Some(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn edges_normalized_with_weights() {
        let g = Graph::new(3, vec![(2, 1), (0, 1)], Some(vec![5.0, 7.0])).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.weights().unwrap(), &[7.0, 5.0]);
    }

    #[test]
    fn chain_first_difference() {
        let d = first_difference_operator(&Graph::chain(4).unwrap());
        assert_eq!(
            d.matrix().to_dense(),
            vec![
                vec![1.0, -1.0, 0.0, 0.0],
                vec![0.0, 1.0, -1.0, 0.0],
                vec![0.0, 0.0, 1.0, -1.0]
            ]
        );
    }

    #[test]
    fn laplacian_and_adjusted() {
        let g = Graph::chain(3).unwrap();
        let l = higher_difference_operator(&g, 1);
        assert_eq!(
            l.matrix().to_dense(),
            vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]
        );
        let adj = adjusted_second_difference(&g.clone().with_weights(vec![2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(
            adj.matrix().to_dense(),
            vec![vec![0.5, -0.5, 0.0], vec![-0.5, 1.5, -1.0], vec![0.0, -1.0, 1.0]]
        );
        assert!(adjusted_second_difference(&g).is_err());
        let two = Graph::chain(2).unwrap().with_weights(vec![4.0]).unwrap();
        assert_eq!(
            adjusted_second_difference(&two).unwrap().matrix().to_dense(),
            vec![vec![0.25, -0.25], vec![-0.25, 0.25]]
        );
    }

    #[test]
    fn regularize_chain() {
        let g = Graph::chain(4).unwrap();
        let r = regularize_operator(&first_difference_operator(&g));
        assert_eq!(r.nrows(), 4);
        assert_eq!(r.fixed_rows(), &[3]);
        assert_eq!(r.matrix().row(3), (&[0usize][..], &[1.0][..]));

        let g5 = Graph::chain(5).unwrap();
        let r1 = regularize_operator(&higher_difference_operator(&g5, 1));
        assert_eq!(r1.fixed_rows().len(), 1);
        // D1·L keeps only the constants in its null space
        let r2 = regularize_operator(&higher_difference_operator(&g5, 2));
        assert_eq!(r2.fixed_rows(), &[4]);
        assert_eq!(r2.matrix().row(4).0, &[0]);
        // a graph with two null directions gets two unit rows on the lowest columns
        let d = DifferenceOperator {
            matrix: CsrMatrix::from_triplets(1, 3, [(0, 1, 1.0), (0, 2, -1.0)]),
            order: 1,
            fixed_rows: Vec::new(),
        };
        let r = regularize_operator(&d);
        let cols: Vec<usize> = r.fixed_rows().iter().map(|&i| r.matrix().row(i).0[0]).collect();
        assert_eq!(cols, vec![0, 1]);
    }

    #[test]
    fn components_counted() {
        let g = Graph::new(5, vec![(0, 1), (2, 3)], None).unwrap();
        assert_eq!(g.n_components(), 3);
        let r = regularize_operator(&first_difference_operator(&g));
        assert_eq!(r.fixed_rows().len(), 3);
    }
}

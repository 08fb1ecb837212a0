//! Sparse matrices in compressed-row layout and a skyline (envelope)
//! Cholesky factorization.
//!
//! The precision matrices handled by the samplers come from graph
//! difference operators, so after a reverse Cuthill–McKee ordering their
//! envelope is narrow and all fill-in stays inside it. The sparsity pattern
//! is fixed per model; only values change between iterations, so the
//! envelope layout is computed once and refilled in place.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Real sparse matrix in compressed sparse row layout.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut trips: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        trips.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut values = Vec::with_capacity(trips.len());
        let mut i = 0;
        while i < trips.len() {
            let (r, c, mut v) = trips[i];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            let mut j = i + 1;
            while j < trips.len() && trips[j].0 == r && trips[j].1 == c {
                v += trips[j].2;
                j += 1;
            }
            if v != 0.0 {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
            i = j;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, std::iter::empty())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut acc = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        let mut trips = Vec::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                trips.push((r, c, acc[c]));
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, trips)
    }

    /// `diag(s) * self`.
    pub fn scale_rows(&self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.nrows);
        let mut out = self.clone();
        for r in 0..self.nrows {
            for v in &mut out.values[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v *= s[r];
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// Stacks the rows of `other` below the rows of `self`.
    pub fn vstack(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.ncols);
        let off = self.nrows;
        Self::from_triplets(
            self.nrows + other.nrows,
            self.ncols,
            self.triplets().chain(other.triplets().map(|(r, c, v)| (r + off, c, v))),
        )
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}

/// Reverse Cuthill–McKee ordering of a symmetric sparsity pattern given as an
/// adjacency list. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from a pseudo-peripheral vertex
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex");
        let start = pseudo_peripheral(adjacency, seed, &visited);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adjacency[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                if !visited[u] {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adjacency: &[Vec<usize>], seed: usize, blocked: &[bool]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, e) = bfs_farthest(adjacency, current, blocked);
        if e <= ecc {
            break;
        }
        ecc = e;
        current = far;
    }
    current
}

fn bfs_farthest(adjacency: &[Vec<usize>], start: usize, blocked: &[bool]) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > best.1 || (d == best.1 && adjacency[v].len() < adjacency[best.0].len()) {
            best = (v, d);
        }
        for &u in &adjacency[v] {
            if !blocked[u] && dist[u] == usize::MAX {
                dist[u] = d + 1;
                queue.push_back(u);
            }
        }
    }
    best
}

/// Symmetric positive (semi-)definite matrix stored by its lower envelope in
/// a permuted ordering, factorized in place as `P A Pᵀ = L Lᵀ`.
///
/// Entries are addressed through slots obtained from [`Skyline::slot`], so
/// callers can precompute where each contribution lands and refill the
/// values cheaply every iteration.
#[derive(Clone, Debug)]
pub struct Skyline {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    first: Vec<usize>,
    /// `last[j]`: largest row whose envelope reaches column `j`.
    last: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl Skyline {
    /// Lays out the envelope of the symmetric pattern `pairs` (original
    /// indices, either triangle) under the ordering `perm[new] = old`.
    /// Diagonal entries are always present.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>, perm: Vec<usize>) -> Self {
        assert_eq!(perm.len(), n);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (a, b) in pairs {
            let (i, j) = (iperm[a], iperm[b]);
            let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
            first[hi] = first[hi].min(lo);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut last: Vec<usize> = (0..n).collect();
        for (i, &f) in first.iter().enumerate() {
            for l in &mut last[f..i] {
                *l = (*l).max(i);
            }
        }
        Self {
            n,
            perm,
            iperm,
            first,
            last,
            start,
            values: vec![0.0; total],
        }
    }

    /// Convenience constructor choosing a reverse Cuthill–McKee ordering.
    pub fn with_rcm(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in pairs {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adjacency);
        Self::new(n, pairs.iter().copied(), perm)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored envelope entries.
    pub fn envelope_len(&self) -> usize {
        self.values.len()
    }

    /// Storage slot of entry `(a, b)` in original indices, if inside the envelope.
    pub fn slot(&self, a: usize, b: usize) -> Option<usize> {
        let (i, j) = (self.iperm[a], self.iperm[b]);
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        (lo >= self.first[hi]).then(|| self.start[hi] + lo - self.first[hi])
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn add_at(&mut self, slot: usize, v: f64) {
        self.values[slot] += v;
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.start[i]..self.start[i + 1]]
    }

    /// Cholesky factorization in place. Fails on the first pivot that is not
    /// strictly positive, reporting its original row index.
    pub fn factor(&mut self) -> Result<()> {
        self.factor_impl(None, 0.0).map(|_| ())
    }

    /// Cholesky factorization that also fails when a squared pivot drops to
    /// `margin` times its original diagonal entry or below, i.e. when
    /// cancellation may have destroyed most of its significant digits.
    pub fn factor_with_margin(&mut self, margin: f64) -> Result<()> {
        self.factor_impl(None, margin).map(|_| ())
    }

    /// Factorization of a positive semidefinite matrix: pivots at or below
    /// `tol * max(diag)` are treated as exact zeros and their rows dropped.
    /// Returns the original indices of the dropped (dependent) rows.
    pub fn factor_semidefinite(&mut self, tol: f64) -> Vec<usize> {
        self.factor_impl(Some(tol), 0.0)
            .expect("semidefinite factorization does not fail")
    }

    fn factor_impl(&mut self, semidefinite: Option<f64>, margin: f64) -> Result<Vec<usize>> {
        let n = self.n;
        let max_diag = (0..n)
            .map(|i| self.values[self.start[i + 1] - 1])
            .fold(0.0f64, f64::max);
        let mut dropped = Vec::new();
        let mut is_dropped = vec![false; n];
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let sj = self.start[j];
                let k0 = fi.max(fj);
                let mut s = self.values[si + j - fi];
                for k in k0..j {
                    s -= self.values[si + k - fi] * self.values[sj + k - fj];
                }
                let djj = self.values[sj + j - fj];
                self.values[si + j - fi] = if is_dropped[j] { 0.0 } else { s / djj };
            }
            let original = self.values[si + i - fi];
            let mut d = original;
            for k in fi..i {
                let l = self.values[si + k - fi];
                d -= l * l;
            }
            match semidefinite {
                Some(tol) if d <= tol * max_diag => {
                    is_dropped[i] = true;
                    dropped.push(self.perm[i]);
                    self.values[si + i - fi] = 1.0;
                    for k in fi..i {
                        self.values[si + k - fi] = 0.0;
                    }
                }
                None if !(d > margin * original) || !d.is_finite() => {
                    return Err(Error::Factorization {
                        index: self.perm[i],
                        pivot: d,
                    });
                }
                _ => self.values[si + i - fi] = d.sqrt(),
            }
        }
        dropped.sort_unstable();
        Ok(dropped)
    }

    /// Position of original index `a` in the factor ordering.
    pub fn position(&self, a: usize) -> usize {
        self.iperm[a]
    }

    /// Starts a factorization by row insertion: the factor `L` of `BᵀB` is
    /// accumulated from the rows of `B` by Givens rotations in
    /// [`Skyline::insert_row`] and never forms `BᵀB`, so it keeps full
    /// relative accuracy when rows differ in scale by many orders of
    /// magnitude. Inserting rows by increasing leading position keeps the
    /// rotations local.
    pub fn begin_rows(&mut self) {
        self.clear();
    }

    /// Rotates one row of `B` (original indices) into the factor. `work` is a
    /// zeroed buffer of length `dim()` and is left zeroed.
    pub fn insert_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>, work: &mut [f64]) {
        let mut lo = self.n;
        let mut hi = 0;
        for (a, v) in entries {
            let c = self.iperm[a];
            work[c] += v;
            lo = lo.min(c);
            hi = hi.max(c);
        }
        let mut j = lo;
        while j <= hi && j < self.n {
            let xj = work[j];
            if xj != 0.0 {
                work[j] = 0.0;
                let dj = self.start[j + 1] - 1;
                let rjj = self.values[dj];
                let r = rjj.hypot(xj);
                let (c, s) = (rjj / r, xj / r);
                self.values[dj] = r;
                if rjj == 0.0 {
                    // empty row: it takes over the remainder of the work row
                    for col in j + 1..=self.last[j] {
                        if self.first[col] <= j {
                            let idx = self.start[col] + j - self.first[col];
                            self.values[idx] = s * work[col];
                            work[col] = 0.0;
                        }
                    }
                    break;
                }
                for col in j + 1..=self.last[j] {
                    if self.first[col] <= j {
                        let idx = self.start[col] + j - self.first[col];
                        let (rv, xv) = (self.values[idx], work[col]);
                        self.values[idx] = c * rv + s * xv;
                        work[col] = c * xv - s * rv;
                    }
                }
                hi = hi.max(self.last[j]);
            }
            j += 1;
        }
        debug_assert!(work.iter().all(|&w| w == 0.0), "fill outside the envelope");
    }

    /// Completes a row-insertion factorization; every pivot must be positive.
    pub fn finish_rows(&self) -> Result<()> {
        for i in 0..self.n {
            let d = self.values[self.start[i + 1] - 1];
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Factorization {
                    index: self.perm[i],
                    pivot: d,
                });
            }
        }
        Ok(())
    }

    /// Solves `L y = P b` in place on a permuted vector.
    fn forward_permuted(&self, y: &mut [f64], from: usize) {
        for i in from..self.n {
            let fi = self.first[i].max(from);
            let row = self.row(i);
            let base = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - base] * y[k];
            }
            y[i] = s / row[i - base];
        }
    }

    /// Solves `Lᵀ x = y` in place on a permuted vector.
    fn backward_permuted(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let base = self.first[i];
            x[i] /= row[i - base];
            let xi = x[i];
            for k in base..i {
                x[k] -= row[k - base] * xi;
            }
        }
    }

    /// `A⁻¹ b` for a factored matrix, in original ordering.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        self.forward_permuted(&mut y, 0);
        self.backward_permuted(&mut y);
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
        out
    }

    /// Returns `x` with `A⁻¹ b + L⁻ᵀ e` (original ordering), the standard
    /// way to draw from `N(A⁻¹ b, A⁻¹)` given standard normals `e`.
    /// `scale` multiplies the fluctuation term.
    pub fn solve_with_fluctuation(&self, b: &[f64], e: &[f64], scale: f64) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        self.forward_permuted(&mut y, 0);
        for (yi, ei) in y.iter_mut().zip(e) {
            *yi += scale * ei;
        }
        self.backward_permuted(&mut y);
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
        out
    }

    /// `vᵀ A⁻¹ v = ‖L⁻¹ P v‖²` for a sparse vector `v` given as
    /// `(original index, value)` pairs. `scratch` must have length `dim()`
    /// and is left zeroed.
    pub fn inverse_quadratic(&self, v: &[(usize, f64)], scratch: &mut [f64]) -> f64 {
        let mut from = self.n;
        for &(o, x) in v {
            let i = self.iperm[o];
            scratch[i] += x;
            from = from.min(i);
        }
        if from == self.n {
            return 0.0;
        }
        self.forward_permuted(scratch, from);
        let mut s = 0.0;
        for y in &mut scratch[from..] {
            s += *y * *y;
            *y = 0.0;
        }
        s
    }

    /// `log det A` of a factored matrix.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.values[self.start[i + 1] - 1].ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            x.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                x[r] -= f * x[c];
            }
        }
        for c in (0..n).rev() {
            for k in c + 1..n {
                x[c] -= m[c][k] * x[k];
            }
            x[c] /= m[c][c];
        }
        x
    }

    fn laplacian_plus_identity(n: usize) -> (Vec<Vec<f64>>, Vec<(usize, usize)>) {
        let mut a = vec![vec![0.0; n]; n];
        let mut pairs = Vec::new();
        for i in 0..n {
            a[i][i] = 1.5;
            pairs.push((i, i));
        }
        for i in 0..n - 1 {
            a[i][i] += 1.0;
            a[i + 1][i + 1] += 1.0;
            a[i][i + 1] -= 1.0;
            a[i + 1][i] -= 1.0;
            pairs.push((i, i + 1));
        }
        // one long-range coupling to exercise the envelope
        a[0][n - 1] -= 0.3;
        a[n - 1][0] -= 0.3;
        a[0][0] += 0.3;
        a[n - 1][n - 1] += 0.3;
        pairs.push((0, n - 1));
        (a, pairs)
    }

    #[test]
    fn csr_product_and_transpose() {
        let d = CsrMatrix::from_triplets(2, 3, [(0, 0, 1.0), (0, 1, -1.0), (1, 1, 1.0), (1, 2, -1.0)]);
        let l = d.transpose().matmul(&d);
        assert_eq!(
            l.to_dense(),
            vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]
        );
        assert_eq!(d.mul_vec(&[3.0, 1.0, 2.0]), vec![2.0, -1.0]);
    }

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(1, 2, [(0, 0, 1.0), (0, 0, -1.0), (0, 1, 2.0), (0, 1, 0.5)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.to_dense(), vec![vec![0.0, 2.5]]);
    }

    #[test]
    fn skyline_solve_matches_dense() {
        let n = 9;
        let (a, pairs) = laplacian_plus_identity(n);
        let mut sky = Skyline::with_rcm(n, &pairs);
        for i in 0..n {
            for j in 0..=i {
                if a[i][j] != 0.0 {
                    let s = sky.slot(i, j).unwrap();
                    sky.add_at(s, a[i][j]);
                }
            }
        }
        sky.factor().unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let x = sky.solve(&b);
        let want = dense_solve(&a, &b);
        for (u, v) in x.iter().zip(&want) {
            assert!((u - v).abs() < 1e-12);
        }
        // vᵀA⁻¹v through the sparse forward solve
        let mut scratch = vec![0.0; n];
        let q = sky.inverse_quadratic(&[(2, 1.0), (3, -1.0)], &mut scratch);
        let mut e = vec![0.0; n];
        e[2] = 1.0;
        e[3] = -1.0;
        let ainv_e = dense_solve(&a, &e);
        assert!((q - (ainv_e[2] - ainv_e[3])).abs() < 1e-12);
        assert!(scratch.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn non_spd_reports_pivot() {
        let mut sky = Skyline::new(2, [(0, 1)], vec![0, 1]);
        for (i, j, v) in [(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)] {
            let s = sky.slot(i, j).unwrap();
            sky.add_at(s, v);
        }
        match sky.factor() {
            Err(Error::Factorization { index, pivot }) => {
                assert_eq!(index, 1);
                assert!(pivot < 0.0);
            }
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn rcm_keeps_chain_banded() {
        let n = 12;
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        let perm = reverse_cuthill_mckee(&adjacency);
        let mut pos = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            pos[old] = new;
        }
        for i in 0..n - 1 {
            assert_eq!(pos[i].abs_diff(pos[i + 1]), 1);
        }
    }
}

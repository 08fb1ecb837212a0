//! Assembly of the sparse posterior precision `Dᵀ diag(c) D + diag(d)`.
//!
//! The sparsity pattern depends only on the operator, so the envelope
//! layout and the slot of every `D_{ra} D_{rb}` contribution are computed
//! once and the values are refilled on each call.

use crate::error::Result;
use crate::graph::DifferenceOperator;
use crate::sparse::Skyline;

#[derive(Clone, Debug)]
pub(crate) struct PrecisionAssembler {
    sky: Skyline,
    row_ptr: Vec<usize>,
    contrib: Vec<(usize, f64)>,
    diag_slots: Vec<usize>,
    /// Operator rows as `(column, value)`, for the row-insertion path.
    rows: Vec<Vec<(usize, f64)>>,
    /// Insertion order: operator rows `0..m`, then unit rows `m + i`, sorted
    /// by leading position in the factor ordering.
    order: Vec<usize>,
    work: Vec<f64>,
}

/// Squared pivots below this fraction of their diagonal entry send the
/// factorization to the row-insertion path.
const CANCELLATION_MARGIN: f64 = 1e-9;

impl PrecisionAssembler {
    pub fn new(op: &DifferenceOperator) -> Self {
        let n = op.ncols();
        let d = op.matrix();
        let mut pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        for r in 0..d.nrows() {
            let (cols, _) = d.row(r);
            for &a in cols {
                for &b in cols {
                    if a > b {
                        pairs.push((a, b));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let sky = Skyline::with_rcm(n, &pairs);
        let mut row_ptr = vec![0];
        let mut contrib = Vec::new();
        for r in 0..d.nrows() {
            let (cols, vals) = d.row(r);
            for (x, (&a, &va)) in cols.iter().zip(vals).enumerate() {
                for (&b, &vb) in cols[..=x].iter().zip(&vals[..=x]) {
                    let slot = sky.slot(a, b).expect("pattern entry inside envelope");
                    contrib.push((slot, va * vb));
                }
            }
            row_ptr.push(contrib.len());
        }
        let diag_slots = (0..n).map(|i| sky.slot(i, i).expect("diagonal")).collect();
        let rows: Vec<Vec<(usize, f64)>> = (0..d.nrows())
            .map(|r| {
                let (c, v) = d.row(r);
                c.iter().copied().zip(v.iter().copied()).collect()
            })
            .collect();
        let m = rows.len();
        let lead = |k: usize| {
            if k < m {
                rows[k].iter().map(|&(c, _)| sky.position(c)).min().unwrap_or(n)
            } else {
                sky.position(k - m)
            }
        };
        let mut order: Vec<usize> = (0..m + n).collect();
        order.sort_by_key(|&k| (lead(k), k));
        Self {
            sky,
            row_ptr,
            contrib,
            diag_slots,
            rows,
            order,
            work: vec![0.0; n],
        }
    }

    /// Fills and factors `Σ_r row_weight[r] d_r d_rᵀ + diag(diag)`.
    pub fn factor(&mut self, row_weight: &[f64], diag: &[f64]) -> Result<&Skyline> {
        self.sky.clear();
        for (r, &c) in row_weight.iter().enumerate() {
            for &(slot, v) in &self.contrib[self.row_ptr[r]..self.row_ptr[r + 1]] {
                self.sky.add_at(slot, c * v);
            }
        }
        for (&slot, &v) in self.diag_slots.iter().zip(diag) {
            self.sky.add_at(slot, v);
        }
        if self.sky.factor_with_margin(CANCELLATION_MARGIN).is_err() {
            self.factor_by_rows(row_weight, diag)?;
        }
        Ok(&self.sky)
    }

    /// Accurate factorization from the square-root rows
    /// `[diag(√row_weight) D; diag(√diag)]`.
    fn factor_by_rows(&mut self, row_weight: &[f64], diag: &[f64]) -> Result<()> {
        let m = self.rows.len();
        self.sky.begin_rows();
        for &k in &self.order {
            if k < m {
                let s = row_weight[k].sqrt();
                if s > 0.0 {
                    self.sky
                        .insert_row(self.rows[k].iter().map(|&(c, v)| (c, s * v)), &mut self.work);
                }
            } else if diag[k - m] > 0.0 {
                self.sky.insert_row([(k - m, diag[k - m].sqrt())], &mut self.work);
            }
        }
        self.sky.finish_rows()
    }

    pub fn factored(&self) -> &Skyline {
        &self.sky
    }
}

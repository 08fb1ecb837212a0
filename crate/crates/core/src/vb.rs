//! Mean-field variational Bayes by coordinate ascent.
//!
//! The factorization mirrors the Gibbs blocks: Gaussian `q(θ)`, GIG `q(z)`,
//! inverse-gamma `q(σ²)`, `q(τ²)`, `q(ξ)`, and prior-specific families for
//! the local scales. Updates run in the order θ, z, σ², (τ², ξ), local
//! scales until the θ-mean stabilizes.

use crate::dists::{gig_moments, truncated_gig_expectations, truncated_ig_expectations, GigParams};
use crate::error::{Error, Result};
use crate::gibbs::GIG_A_FLOOR;
use crate::model::{Model, Prior};
use crate::posterior::{FitSummary, Method};
use crate::precision::PrecisionAssembler;

const LOCAL_A_FLOOR: f64 = 1e-30;

/// Two-sided 95% standard normal quantile.
pub const Z_975: f64 = 1.959963984540054;

/// Stopping rule for coordinate ascent.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VbConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for VbConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Prior-specific variational moments.
#[derive(Clone, Debug, PartialEq)]
pub enum VbLocal {
    Normal,
    Laplace {
        a_w2: Vec<f64>,
        e_w2: Vec<f64>,
        e_gamma2: f64,
        e_inv_gamma2: f64,
        e_inv_nu: f64,
    },
    Horseshoe {
        a_w2: Vec<f64>,
        e_inv_nu: Vec<f64>,
    },
}

/// Parameters and cached expectations of every variational factor.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalState {
    /// Mean `B⁻¹C` of `q(θ)`.
    pub mean: Vec<f64>,
    /// Diagonal of `B⁻¹`; the marginal variances are `E_{σ²}` times this.
    pub b_inv_diag: Vec<f64>,
    pub e_theta2: Vec<f64>,
    pub e_eta2: Vec<f64>,
    pub a_z: Vec<f64>,
    pub b_z: Vec<f64>,
    pub e_z: Vec<f64>,
    pub e_inv_z: Vec<f64>,
    /// Rate `A_{σ²}` of `q(σ²)`.
    pub a_sigma2: f64,
    pub e_sigma2: f64,
    pub e_inv_sigma2: f64,
    /// Rate `a_{τ²}` of `q(τ²)`.
    pub a_tau2: f64,
    pub e_inv_tau2: f64,
    pub e_inv_xi: f64,
    pub e_inv_w2: Vec<f64>,
    pub local: VbLocal,
}

/// Outcome of [`run_vb`].
#[derive(Clone, Debug, PartialEq)]
pub struct VbFit {
    pub state: VariationalState,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the θ-mean at the last iteration.
    pub final_change: f64,
    /// Relative change after every iteration.
    pub history: Vec<f64>,
}

impl VbFit {
    /// Variational means with `±1.96` marginal standard deviations.
    pub fn summary(&self) -> FitSummary {
        let s = &self.state;
        let half: Vec<f64> = s.b_inv_diag.iter().map(|v| Z_975 * (s.e_sigma2 * v).sqrt()).collect();
        FitSummary {
            point: s.mean.clone(),
            lower: s.mean.iter().zip(&half).map(|(m, h)| m - h).collect(),
            upper: s.mean.iter().zip(&half).map(|(m, h)| m + h).collect(),
            method: Method::Vb,
        }
    }
}

/// Coordinate-ascent engine bound to one model.
pub struct VbEngine<'a> {
    model: &'a Model,
    state: VariationalState,
    obs_node: Vec<usize>,
    precision: PrecisionAssembler,
    /// Column pattern of each operator row, for the sparse solves.
    op_rows: Vec<Vec<(usize, f64)>>,
    scratch: Vec<f64>,
}

impl<'a> VbEngine<'a> {
    pub fn new(model: &'a Model) -> Self {
        let n = model.n();
        let m = model.m();
        let nobs = model.data().n_obs();
        let spec = model.spec();
        let op = model.operator();
        let upper = spec.bounds.upper;
        let e_inv_w2 = (0..m).map(|r| if op.is_fixed(r) { 1.0 / upper } else { 1.0 }).collect();
        let local = match spec.prior {
            Prior::Normal => VbLocal::Normal,
            Prior::Laplace => VbLocal::Laplace {
                a_w2: vec![0.0; m],
                e_w2: (0..m).map(|r| if op.is_fixed(r) { upper } else { 1.0 }).collect(),
                e_gamma2: 1.0,
                e_inv_gamma2: 1.0,
                e_inv_nu: 0.5,
            },
            Prior::Horseshoe => VbLocal::Horseshoe {
                a_w2: vec![0.0; m],
                e_inv_nu: vec![0.5; m],
            },
        };
        let laplace = spec.prior == Prior::Laplace;
        let shape2 = (n + 3 * nobs) as f64 + 2.0 * spec.a_sigma;
        let data = model.data();
        let ptr = data.node_ptr();
        let obs_node = (0..n)
            .flat_map(|i| std::iter::repeat_n(i, ptr[i + 1] - ptr[i]))
            .collect();
        let d = op.matrix();
        let op_rows = (0..m)
            .map(|r| {
                let (c, v) = d.row(r);
                c.iter().copied().zip(v.iter().copied()).collect()
            })
            .collect();
        let mean = model.initial_theta();
        let state = VariationalState {
            e_theta2: mean.iter().map(|x| x * x).collect(),
            mean,
            b_inv_diag: vec![0.0; n],
            e_eta2: vec![0.0; m],
            a_z: vec![0.0; nobs],
            b_z: vec![0.0; nobs],
            e_z: vec![1.0; nobs],
            e_inv_z: vec![1.0; nobs],
            a_sigma2: 0.5 * shape2,
            e_sigma2: shape2 / (shape2 - 2.0),
            e_inv_sigma2: 1.0,
            a_tau2: if laplace { 0.0 } else { 0.5 * (n as f64 + 1.0) },
            e_inv_tau2: 1.0,
            e_inv_xi: if laplace { 0.0 } else { 0.5 },
            e_inv_w2,
            local,
        };
        Self {
            model,
            state,
            obs_node,
            precision: PrecisionAssembler::new(op),
            op_rows,
            scratch: vec![0.0; n],
        }
    }

    pub fn state(&self) -> &VariationalState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut VariationalState {
        &mut self.state
    }

    /// Twice the shape of `q(σ²)`: `n + 3N + 2a_σ`.
    fn sigma_shape2(&self) -> f64 {
        (self.model.n() + 3 * self.model.data().n_obs()) as f64 + 2.0 * self.model.spec().a_sigma
    }

    /// `q(θ)`: assembles `B` and `C`, then refreshes the mean, `diag(B⁻¹)`,
    /// `E_{θ²}` and `E_{η²}`.
    pub fn update_theta(&mut self) -> Result<()> {
        let spec = self.model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let n = self.model.n();
        let s = &mut self.state;
        let row_weight: Vec<f64> = s.e_inv_w2.iter().map(|w| s.e_inv_tau2 * w).collect();
        let mut diag = vec![0.0; n];
        let mut c = vec![0.0; n];
        for ((&y, &ez), &i) in self.model.data().values().iter().zip(&s.e_inv_z).zip(&self.obs_node) {
            diag[i] += ez / t2;
            c[i] += (y * ez - psi) / t2;
        }
        let sky = self.precision.factor(&row_weight, &diag)?;
        s.mean = sky.solve(&c);
        for i in 0..n {
            s.b_inv_diag[i] = sky.inverse_quadratic(&[(i, 1.0)], &mut self.scratch);
            s.e_theta2[i] = s.e_sigma2 * s.b_inv_diag[i] + s.mean[i] * s.mean[i];
        }
        let eta = self.model.operator().apply(&s.mean);
        for (r, row) in self.op_rows.iter().enumerate() {
            let v = sky.inverse_quadratic(row, &mut self.scratch);
            s.e_eta2[r] = s.e_sigma2 * v + eta[r] * eta[r];
        }
        Ok(())
    }

    /// `q(z_ij) = GIG(1/2, a_z, b_z)` and its moments.
    pub fn update_z(&mut self) -> Result<()> {
        let spec = self.model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let s = &mut self.state;
        let b = (psi * psi / t2 + 2.0) * s.e_inv_sigma2;
        for (k, (&y, &i)) in self.model.data().values().iter().zip(&self.obs_node).enumerate() {
            let a = ((y * y - 2.0 * y * s.mean[i] + s.e_theta2[i]) * s.e_inv_sigma2 / t2).max(GIG_A_FLOOR);
            let (ez, einv) = gig_moments(&GigParams::new(0.5, a, b)?);
            s.a_z[k] = a;
            s.b_z[k] = b;
            s.e_z[k] = ez;
            s.e_inv_z[k] = einv;
        }
        Ok(())
    }

    /// `q(σ²) = IG((n + 3N)/2 + a_σ, A_{σ²})`.
    pub fn update_sigma2(&mut self) -> Result<()> {
        let spec = self.model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let shape2 = self.sigma_shape2();
        let s = &mut self.state;
        let mut obs = 0.0;
        let mut zsum = 0.0;
        for (k, (&y, &i)) in self.model.data().values().iter().zip(&self.obs_node).enumerate() {
            let (ez, einv) = (s.e_z[k], s.e_inv_z[k]);
            obs += y * y * einv - 2.0 * psi * y + psi * psi * ez - 2.0 * (einv * y - psi) * s.mean[i]
                + s.e_theta2[i] * einv;
            zsum += ez;
        }
        let penalty = 0.5 * s.e_inv_tau2 * expected_penalty(&s.e_eta2, &s.e_inv_w2);
        let a = obs / (2.0 * t2) + penalty + zsum + spec.b_sigma;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::NonFinite("variational sigma2 rate"));
        }
        s.a_sigma2 = a;
        s.e_sigma2 = 2.0 * a / (shape2 - 2.0);
        s.e_inv_sigma2 = shape2 / (2.0 * a);
        Ok(())
    }

    /// `q(τ²)` and `q(ξ)`; the Laplace-type prior pins `E_{1/τ²} = 1`,
    /// `E_{1/ξ} = 0`.
    pub fn update_tau2_xi(&mut self) {
        let s = &mut self.state;
        if self.model.spec().prior == Prior::Laplace {
            s.e_inv_tau2 = 1.0;
            s.e_inv_xi = 0.0;
            return;
        }
        let n = self.model.n() as f64;
        s.a_tau2 = 0.5 * s.e_inv_sigma2 * expected_penalty(&s.e_eta2, &s.e_inv_w2) + s.e_inv_xi;
        s.e_inv_tau2 = 0.5 * (n + 1.0) / s.a_tau2;
        s.e_inv_xi = 1.0 / (s.e_inv_tau2 + 1.0);
    }

    /// Prior-specific local-scale factors; appended rows keep `E_{1/w²} = 1/w̄`.
    pub fn update_local(&mut self) -> Result<()> {
        let op = self.model.operator();
        let bounds = self.model.spec().bounds;
        let s = &mut self.state;
        match &mut s.local {
            VbLocal::Normal => {}
            VbLocal::Laplace {
                a_w2,
                e_w2,
                e_gamma2,
                e_inv_gamma2,
                e_inv_nu,
            } => {
                let mut w_sum = 0.0;
                for r in 0..op.nrows() {
                    if op.is_fixed(r) {
                        continue;
                    }
                    let a = (s.e_inv_sigma2 * s.e_eta2[r]).max(LOCAL_A_FLOOR);
                    let (ew, einv) = truncated_gig_expectations(&GigParams::new(0.5, a, *e_gamma2)?, &bounds)?;
                    a_w2[r] = a;
                    e_w2[r] = ew;
                    s.e_inv_w2[r] = einv;
                    w_sum += ew;
                }
                let m_free = op.n_free_rows() as f64;
                let (eg, einv_g) = gig_moments(&GigParams::new(m_free - 0.5, 2.0 * *e_inv_nu, w_sum)?);
                *e_gamma2 = eg;
                *e_inv_gamma2 = einv_g;
                *e_inv_nu = 1.0 / (einv_g + 1.0);
            }
            VbLocal::Horseshoe { a_w2, e_inv_nu } => {
                for r in 0..op.nrows() {
                    if op.is_fixed(r) {
                        continue;
                    }
                    let a = e_inv_nu[r] + 0.5 * s.e_inv_sigma2 * s.e_inv_tau2 * s.e_eta2[r];
                    let einv = truncated_ig_expectations(1.0, a, &bounds)?;
                    a_w2[r] = a;
                    s.e_inv_w2[r] = einv;
                    e_inv_nu[r] = 1.0 / (einv + 1.0);
                }
            }
        }
        Ok(())
    }

    /// One pass over all factors; returns the relative change of the θ-mean.
    pub fn iterate(&mut self) -> Result<f64> {
        let old = self.state.mean.clone();
        self.update_theta()?;
        self.update_z()?;
        self.update_sigma2()?;
        self.update_tau2_xi();
        self.update_local()?;
        let scale = old.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-12);
        let change = old
            .iter()
            .zip(&self.state.mean)
            .fold(0.0f64, |a, (o, n)| a.max((o - n).abs()));
        Ok(change / scale)
    }
}

/// `Σ_r E[η_r²] E[1/w_r²]`.
fn expected_penalty(e_eta2: &[f64], e_inv_w2: &[f64]) -> f64 {
    e_eta2.iter().zip(e_inv_w2).map(|(e, w)| e * w).sum()
}

/// Coordinate ascent until the relative change of the θ-mean drops below
/// `tol` or `max_iter` passes have run.
pub fn run_vb(model: &Model, cfg: &VbConfig) -> Result<VbFit> {
    if cfg.max_iter == 0 || !(cfg.tol > 0.0) {
        return Err(Error::invalid("VB needs max_iter >= 1 and tol > 0"));
    }
    let mut engine = VbEngine::new(model);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let change = engine.iterate()?;
        history.push(change);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(VbFit {
        state: engine.state,
        iterations: history.len(),
        converged,
        final_change: *history.last().expect("at least one iteration"),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::model::{Dataset, ModelSpec};

    fn dense_inverse(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut inv: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, p);
            inv.swap(c, p);
            let d = a[c][c];
            for j in 0..n {
                a[c][j] /= d;
                inv[c][j] /= d;
            }
            for r in 0..n {
                if r != c {
                    let f = a[r][c];
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
        inv
    }

    fn small_model(prior: Prior) -> Model {
        let y = [0.3, -0.2, 1.1, 0.9, 2.0, 1.7, 1.5];
        let mut pairs: Vec<(usize, f64)> = y.iter().enumerate().map(|(i, &v)| (i, v)).collect();
        pairs.push((2, 0.4));
        let data = Dataset::from_pairs(7, &pairs).unwrap();
        Model::new(&ModelSpec::new(0.3, 1, prior), &Graph::chain(7).unwrap(), &data).unwrap()
    }

    #[test]
    fn theta_factor_matches_dense() {
        let model = small_model(Prior::Horseshoe);
        let mut eng = VbEngine::new(&model);
        eng.update_theta().unwrap();
        eng.update_z().unwrap();
        eng.update_sigma2().unwrap();
        eng.update_tau2_xi();
        eng.update_local().unwrap();
        eng.update_theta().unwrap();
        let s = eng.state().clone();
        let spec = model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let n = model.n();
        let d = model.operator().matrix().to_dense();
        let mut b = vec![vec![0.0; n]; n];
        for (r, row) in d.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    b[i][j] += s.e_inv_tau2 * s.e_inv_w2[r] * row[i] * row[j];
                }
            }
        }
        let mut c = vec![0.0; n];
        for (k, (i, y)) in model.data().pairs().into_iter().enumerate() {
            b[i][i] += s.e_inv_z[k] / t2;
            c[i] += (y * s.e_inv_z[k] - psi) / t2;
        }
        let inv = dense_inverse(b);
        for i in 0..n {
            let mu: f64 = (0..n).map(|j| inv[i][j] * c[j]).sum();
            assert!((mu - s.mean[i]).abs() < 1e-10);
            assert!((inv[i][i] - s.b_inv_diag[i]).abs() < 1e-10);
        }
        for (r, row) in d.iter().enumerate() {
            let quad: f64 = (0..n)
                .map(|i| (0..n).map(|j| row[i] * inv[i][j] * row[j]).sum::<f64>())
                .sum();
            let eta: f64 = (0..n).map(|i| row[i] * s.mean[i]).sum();
            assert!((s.e_sigma2 * quad + eta * eta - s.e_eta2[r]).abs() < 1e-9);
        }
    }

    #[test]
    fn converges_for_every_prior() {
        for prior in Prior::ALL {
            let model = small_model(prior);
            let fit = run_vb(&model, &VbConfig::default()).unwrap();
            assert!(fit.converged, "{prior}: change {}", fit.final_change);
            let s = &fit.state;
            assert!(s.e_sigma2 > 0.0 && s.e_inv_sigma2 > 0.0);
            assert!(s.e_inv_w2.iter().all(|w| w.is_finite() && *w > 0.0));
            // Jensen: E[σ²] E[1/σ²] > 1 for a non-degenerate factor
            assert!(s.e_sigma2 * s.e_inv_sigma2 > 1.0);
            let sum = fit.summary();
            for i in 0..model.n() {
                assert!(sum.lower[i] < sum.point[i] && sum.point[i] < sum.upper[i]);
            }
            if prior == Prior::Laplace {
                assert_eq!((s.e_inv_tau2, s.e_inv_xi), (1.0, 0.0));
            } else {
                assert!((s.e_inv_xi - 1.0 / (s.e_inv_tau2 + 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let model = small_model(Prior::Normal);
        assert!(run_vb(&model, &VbConfig { max_iter: 0, tol: 1e-6 }).is_err());
        assert!(run_vb(&model, &VbConfig { max_iter: 5, tol: 0.0 }).is_err());
    }
}

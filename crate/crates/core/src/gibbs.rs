//! Gibbs sampler over the exact full conditionals.
//!
//! One sweep updates, in order: the signal `θ`, the latent mixing variables
//! `z`, the scale `σ²`, the global scale `τ²` with its auxiliary `ξ`, and the
//! prior-specific local scales.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dists::{sample_gig, sample_inverse_gamma, sample_truncated_gig, sample_truncated_inverse_gamma, GigParams};
use crate::error::{Error, Result};
use crate::model::{Model, Prior, PriorAux, PriorState};
use crate::posterior::PosteriorSamples;
use crate::precision::PrecisionAssembler;
use crate::stream_rng;

/// Floor for GIG `a`-parameters that vanish when a residual is exactly zero.
pub const GIG_A_FLOOR: f64 = 1e-12;
const LOCAL_A_FLOOR: f64 = 1e-30;

/// Iteration protocol of one chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GibbsConfig {
    /// Total sweeps, burn-in included.
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl GibbsConfig {
    /// 500 burn-in sweeps followed by 5000 sweeps thinned by 10.
    pub fn simulation(seed: u64) -> Self {
        Self {
            n_iter: 5500,
            burn_in: 500,
            thin: 10,
            seed,
        }
    }

    /// 25000 sweeps of which 5000 are burn-in, thinned by 10.
    pub fn analysis(seed: u64) -> Self {
        Self {
            n_iter: 25000,
            burn_in: 5000,
            thin: 10,
            seed,
        }
    }

    pub fn retained(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::invalid("thinning interval must be at least 1"));
        }
        if self.burn_in >= self.n_iter {
            return Err(Error::invalid(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.n_iter
            )));
        }
        Ok(())
    }
}

/// All latent quantities of one Gibbs iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Mixing variables, aligned with the dataset's value storage.
    pub z: Vec<f64>,
    pub sigma2: f64,
    pub tau2: f64,
    pub xi: f64,
    pub prior: PriorState,
}

impl ChainState {
    /// Starting point: per-node quantiles for `θ`, unit scales elsewhere.
    pub fn initial(model: &Model) -> Self {
        Self {
            theta: model.initial_theta(),
            z: vec![1.0; model.data().n_obs()],
            sigma2: 1.0,
            tau2: 1.0,
            xi: 1.0,
            prior: model.initial_prior_state(),
        }
    }

    fn all_positive(&self) -> bool {
        self.z.iter().all(|&z| z > 0.0)
            && self.sigma2 > 0.0
            && self.tau2 > 0.0
            && self.xi > 0.0
            && self.prior.w2.iter().all(|&w| w > 0.0)
            && self.theta.iter().all(|t| t.is_finite())
    }
}

/// `τ² | θ, σ², W, ξ` followed by `ξ | τ²`, where `quad = θᵀDᵀW⁻¹Dθ` and
/// `n` is the signal dimension.
pub fn draw_tau2_xi<R: Rng + ?Sized>(n: usize, quad: f64, sigma2: f64, xi: f64, rng: &mut R) -> Result<(f64, f64)> {
    let tau2 = sample_inverse_gamma(0.5 * (n as f64 + 1.0), 0.5 * quad / sigma2 + 1.0 / xi, rng)?;
    let xi = sample_inverse_gamma(1.0, 1.0 / tau2 + 1.0, rng)?;
    Ok((tau2, xi))
}

/// A single chain bound to a model.
pub struct GibbsSampler<'a> {
    model: &'a Model,
    state: ChainState,
    y: Vec<f64>,
    obs_node: Vec<usize>,
    precision: PrecisionAssembler,
    eta: Vec<f64>,
    row_weight: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
    noise: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(model: &'a Model, rng: ChaCha8Rng) -> Self {
        Self::with_state(model, ChainState::initial(model), rng)
    }

    pub fn with_state(model: &'a Model, state: ChainState, rng: ChaCha8Rng) -> Self {
        let data = model.data();
        let ptr = data.node_ptr();
        let obs_node = (0..data.n_nodes())
            .flat_map(|i| std::iter::repeat_n(i, ptr[i + 1] - ptr[i]))
            .collect();
        let n = model.n();
        let m = model.m();
        Self {
            model,
            state,
            y: data.values().to_vec(),
            obs_node,
            precision: PrecisionAssembler::new(model.operator()),
            eta: vec![0.0; m],
            row_weight: vec![0.0; m],
            diag: vec![0.0; n],
            rhs: vec![0.0; n],
            noise: vec![0.0; n],
            rng,
        }
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ChainState {
        &mut self.state
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Current observations, in the dataset's storage order.
    pub fn observations(&self) -> &[f64] {
        &self.y
    }

    /// Replaces the observations while keeping the dataset layout.
    pub fn set_observations(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} observations supplied, layout holds {}",
                y.len(),
                self.y.len()
            )));
        }
        self.y.copy_from_slice(y);
        Ok(())
    }

    fn refresh_eta(&mut self) {
        self.eta = self.model.operator().apply(&self.state.theta);
    }

    /// `θᵀ Dᵀ W⁻¹ D θ` at the current state.
    pub fn penalty_quadratic(&mut self) -> f64 {
        self.refresh_eta();
        self.eta.iter().zip(&self.state.prior.w2).map(|(e, w)| e * e / w).sum()
    }

    /// Fills `A` and `B` of the `θ` conditional and factors `A`.
    fn assemble_theta(&mut self) -> Result<()> {
        let spec = self.model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let s = &self.state;
        for (c, w) in self.row_weight.iter_mut().zip(&s.prior.w2) {
            *c = 1.0 / (s.tau2 * w);
        }
        self.diag.iter_mut().for_each(|d| *d = 0.0);
        self.rhs.iter_mut().for_each(|b| *b = 0.0);
        for ((&y, &z), &i) in self.y.iter().zip(&s.z).zip(&self.obs_node) {
            self.diag[i] += 1.0 / (t2 * z);
            self.rhs[i] += (y - psi * z) / (t2 * z);
        }
        self.precision.factor(&self.row_weight, &self.diag)?;
        Ok(())
    }

    /// Mean `A⁻¹B` of the current `θ` conditional.
    pub fn theta_conditional_mean(&mut self) -> Result<Vec<f64>> {
        self.assemble_theta()?;
        Ok(self.precision.factored().solve(&self.rhs))
    }

    /// `θ ~ N(A⁻¹B, σ²A⁻¹)`.
    pub fn update_theta(&mut self) -> Result<()> {
        self.assemble_theta()?;
        for e in &mut self.noise {
            *e = self.rng.sample(StandardNormal);
        }
        let sd = self.state.sigma2.sqrt();
        self.state.theta = self
            .precision
            .factored()
            .solve_with_fluctuation(&self.rhs, &self.noise, sd);
        Ok(())
    }

    /// `z_ij ~ GIG(1/2, (y_ij - θ_i)²/(t²σ²), ψ²/(t²σ²) + 2/σ²)`.
    pub fn update_z(&mut self) -> Result<()> {
        let spec = self.model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let s2 = self.state.sigma2;
        let b = psi * psi / (t2 * s2) + 2.0 / s2;
        for ((z, &y), &i) in self.state.z.iter_mut().zip(&self.y).zip(&self.obs_node) {
            let r = y - self.state.theta[i];
            let a = (r * r / (t2 * s2)).max(GIG_A_FLOOR);
            *z = sample_gig(&GigParams::new(0.5, a, b)?, &mut self.rng);
        }
        Ok(())
    }

    /// Shape and rate of the `σ²` conditional.
    pub fn sigma2_conditional(&mut self) -> Result<(f64, f64)> {
        let spec = self.model.spec();
        let (psi, t2) = (spec.psi(), spec.t2());
        let quad = self.penalty_quadratic();
        let s = &self.state;
        let mut resid = 0.0;
        let mut zsum = 0.0;
        for ((&y, &z), &i) in self.y.iter().zip(&s.z).zip(&self.obs_node) {
            let r = y - s.theta[i] - psi * z;
            resid += r * r / (2.0 * t2 * z);
            zsum += z;
        }
        let rate = resid + quad / (2.0 * s.tau2) + zsum + spec.b_sigma;
        if !rate.is_finite() {
            return Err(Error::NonFinite("sigma2 rate"));
        }
        let shape = 0.5 * (self.model.n() + 3 * self.y.len()) as f64 + spec.a_sigma;
        Ok((shape, rate))
    }

    pub fn update_sigma2(&mut self) -> Result<()> {
        let (shape, rate) = self.sigma2_conditional()?;
        self.state.sigma2 = sample_inverse_gamma(shape, rate, &mut self.rng)?;
        Ok(())
    }

    /// Global scale and its auxiliary; the Laplace-type prior keeps `τ² = 1`.
    pub fn update_tau2_xi(&mut self) -> Result<()> {
        if self.model.spec().prior == Prior::Laplace {
            return Ok(());
        }
        let quad = self.penalty_quadratic();
        let (tau2, xi) = draw_tau2_xi(self.model.n(), quad, self.state.sigma2, self.state.xi, &mut self.rng)?;
        self.state.tau2 = tau2;
        self.state.xi = xi;
        Ok(())
    }

    /// Prior-specific local scales; appended operator rows stay pinned.
    pub fn update_local_scales(&mut self) -> Result<()> {
        self.refresh_eta();
        let op = self.model.operator();
        let bounds = self.model.spec().bounds;
        let ChainState {
            sigma2, tau2, prior, ..
        } = &mut self.state;
        let (sigma2, tau2) = (*sigma2, *tau2);
        let rng = &mut self.rng;
        match &mut prior.aux {
            PriorAux::Normal => {}
            PriorAux::Laplace { gamma2, nu } => {
                let mut w2_sum = 0.0;
                for (r, (w2, &e)) in prior.w2.iter_mut().zip(&self.eta).enumerate() {
                    if op.is_fixed(r) {
                        continue;
                    }
                    let a = (e * e / sigma2).max(LOCAL_A_FLOOR);
                    *w2 = sample_truncated_gig(&GigParams::new(0.5, a, *gamma2)?, &bounds, rng)?;
                    w2_sum += *w2;
                }
                let m_free = op.n_free_rows() as f64;
                *gamma2 = sample_gig(&GigParams::new(m_free - 0.5, 2.0 / *nu, w2_sum)?, rng);
                *nu = sample_inverse_gamma(1.0, 1.0 / *gamma2 + 1.0, rng)?;
            }
            PriorAux::Horseshoe { nu } => {
                for (r, ((w2, nu_r), &e)) in prior.w2.iter_mut().zip(nu.iter_mut()).zip(&self.eta).enumerate() {
                    if op.is_fixed(r) {
                        continue;
                    }
                    let rate = 1.0 / *nu_r + e * e / (2.0 * sigma2 * tau2);
                    *w2 = sample_truncated_inverse_gamma(1.0, rate, &bounds, rng)?;
                    *nu_r = sample_inverse_gamma(1.0, 1.0 / *w2 + 1.0, rng)?;
                }
            }
        }
        Ok(())
    }

    /// One full sweep in the fixed order.
    pub fn sweep(&mut self) -> Result<()> {
        self.update_theta()?;
        self.update_z()?;
        self.update_sigma2()?;
        self.update_tau2_xi()?;
        self.update_local_scales()?;
        debug_assert!(self.state.all_positive(), "non-positive scale after sweep");
        Ok(())
    }
}

/// Runs one chain seeded by `(cfg.seed, 0)`.
pub fn run_gibbs(model: &Model, cfg: &GibbsConfig) -> Result<PosteriorSamples> {
    run_gibbs_stream(model, cfg, 0)
}

/// Runs one chain seeded by `(cfg.seed, stream)`.
pub fn run_gibbs_stream(model: &Model, cfg: &GibbsConfig, stream: u64) -> Result<PosteriorSamples> {
    cfg.validate()?;
    let n = model.n();
    let keep = cfg.retained();
    let mut sampler = GibbsSampler::new(model, stream_rng(cfg.seed, stream));
    let mut out = PosteriorSamples {
        n,
        draws: Vec::with_capacity(keep * n),
        sigma2: Vec::with_capacity(keep),
        tau2: Vec::with_capacity(keep),
        seed: cfg.seed,
        n_iter: cfg.n_iter,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
    };
    for it in 0..cfg.n_iter {
        sampler.sweep()?;
        if it >= cfg.burn_in && (it - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            let s = sampler.state();
            out.draws.extend_from_slice(&s.theta);
            out.sigma2.push(s.sigma2);
            out.tau2.push(s.tau2);
        }
    }
    debug_assert_eq!(out.n_draws(), keep);
    Ok(out)
}

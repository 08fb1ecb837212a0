//! Bayesian quantile trend filtering on graphs.
//!
//! The crate fits the `p`-th quantile of a signal observed on the vertices
//! of a graph under an asymmetric Laplace working likelihood, with normal,
//! Laplace-type or horseshoe-type shrinkage on graph differences of the
//! signal. Two engines are provided: an exact Gibbs sampler ([`gibbs`]) and
//! a mean-field variational approximation ([`vb`]).

// Dense kernels index several arrays per loop; `!(x > 0.0)` rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod cli;
pub mod dists;
pub mod error;
pub mod gibbs;
pub mod graph;
pub mod io;
pub mod model;
pub mod posterior;
mod precision;
pub mod quad;
pub mod simgen;
pub mod sparse;
pub mod vb;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use error::{Error, Result};

/// Generator for stream `index` under `master`: chains and replications
/// seeded this way are independent and reproducible.
pub fn stream_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

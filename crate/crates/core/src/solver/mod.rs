//! Sine-spectral exponential integrator for the stochastic heat equation on `[0, π]`
//! with Dirichlet boundary conditions.

mod config;
mod identities;
mod integrator;

pub use config::{InitialProfile, MultiplicativeFunction, MultiplicativeKind, NoiseKind, SimConfig};
pub use identities::{factorization_check, mode_decomposition_check};
pub use integrator::{FieldPath, NoiseLog, Solver};
pub(crate) use integrator::series_value;
pub use crate::spectral::green_kernel;


use crate::error::Result;
use crate::rng::StreamId;

/// One path of the mild solution for `config`.
pub fn simulate_path(config: SimConfig, stream: StreamId) -> Result<FieldPath> {
    Solver::new(config)?.simulate(stream)
}

/// `Σ_k a_k(t) φ_k(x)` on a recorded instant.
pub fn evaluate(path: &FieldPath, t: f64, x: f64) -> Result<f64> {
    path.evaluate(t, x)
}

//! Stochastic heat equation on `[0, π]` driven by normalized small-jump Lévy noise
//! or by Gaussian space–time white noise.

pub mod error;
pub mod interp;
pub mod levy_measures;
pub mod noise;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod sobolev;
pub mod solver;
pub mod spectral;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use levy_measures::{LevyBase, LevyModel, Route, TruncationScheme};
pub use scalar::Real;

pub type SineBasis64 = spectral::SineBasis<f64>;
pub type SobolevVector64 = sobolev::SobolevVector<f64>;

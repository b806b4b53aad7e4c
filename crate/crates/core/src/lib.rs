//! Numerical laboratory for the bifractional Brownian motion family:
//! exact covariance kernels and their algebraic identities, exact Gaussian
//! simulation on finite grids, asymptotic-rate verification, and
//! limit-theorem experiments for correlated Gaussian partial sums.
//!
//! ```
//! use bifbm::{CovKernel, ModelParams, TimeGrid};
//! use bifbm::sampler::{empirical_cov, sample_process};
//!
//! let p = ModelParams::new(0.6, 0.8)?;
//! let kernel = CovKernel::bifbm(p);
//! // self-similar of order HK: variance at t = 1 is exactly 1
//! assert!((kernel.eval(1.0, 1.0) - 1.0).abs() < 1e-14);
//!
//! // 10k paths on {1, 2, 4}, reproducible bit for bit under the seed
//! let grid = TimeGrid::new(vec![1.0, 2.0, 4.0])?;
//! let ensemble = sample_process(&kernel, &grid, 10_000, 42)?;
//! let est = &empirical_cov(&ensemble, &[(0, 2)])?[0];
//! let target = kernel.eval(1.0, 4.0);
//! assert!((est.estimate - target).abs() < 4.0 * est.std_error);
//! # Ok::<(), bifbm::Error>(())
//! ```

pub mod asymptotics;
pub mod error;
pub mod grid;
pub mod hermite;
pub mod integrate;
pub mod io;
pub mod kernels;
pub mod limit;
pub mod params;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kernels::{CovKernel, OddEven};
pub use params::{DecompositionConstants, ModelParams};
pub use sampler::PathEnsemble;

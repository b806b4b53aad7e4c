//! Shared fixtures for the benchmark targets.

use bifbm::{CovKernel, ModelParams, TimeGrid};

pub fn default_params() -> ModelParams {
    ModelParams::new(0.6, 0.8).expect("valid")
}

pub fn lrd_params() -> ModelParams {
    ModelParams::new(0.8, 0.75).expect("valid")
}

pub fn bifbm_kernel() -> CovKernel {
    CovKernel::bifbm(default_params())
}

/// Unit-spaced grid 1..=n.
pub fn integer_grid(n: usize) -> TimeGrid {
    TimeGrid::new((1..=n).map(|v| v as f64).collect()).expect("valid")
}

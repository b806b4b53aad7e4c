//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model parameter is outside its admissible range. The message names
    /// the violated bound so CLI errors stay actionable.
    #[error("invalid parameter {name}={value}: {bound}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    /// An operation that requires K < 1 was invoked at K = 1.
    #[error("operation requires K < 1 strictly")]
    KMustBeLessThanOne,

    /// An operation that requires long-range dependence was invoked with
    /// 2HK <= 1.
    #[error("operation requires 2HK > 1, got 2HK = {two_hk}")]
    RequiresLrd { two_hk: f64 },

    /// Function evaluated outside its domain.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// A time grid was rejected.
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    /// Gram matrix cannot be factored within the jitter budget.
    #[error("matrix is not positive semidefinite within tolerance (min eigenvalue estimate {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    /// Quadrature configuration violates its tail-variance bound.
    #[error("quadrature tail bound violated: theta_max={theta_max:.3e} but {required:.3e} is required for K={k}, T={t_max}")]
    QuadratureTail {
        k: f64,
        t_max: f64,
        theta_max: f64,
        required: f64,
    },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not reach relative tolerance {requested:.3e} (achieved {achieved:.3e})")]
    QuadratureTolerance { requested: f64, achieved: f64 },

    /// Slope fit rejected its input.
    #[error("slope fit: {0}")]
    SlopeFit(String),

    /// Hermite expansion preconditions.
    #[error("hermite expansion: {0}")]
    Hermite(String),

    /// PSD repair changed the correlation matrix beyond the budget.
    #[error("PSD repair would change the matrix by {frobenius_change:.3e} (Frobenius, relative), budget is {budget:.3e}")]
    RepairBudgetExceeded {
        frobenius_change: f64,
        budget: f64,
    },

    /// Not enough Monte Carlo replicates for the requested estimator.
    #[error("estimator requires at least {required} replicates, got {got}")]
    TooFewReplicates { required: usize, got: usize },
}

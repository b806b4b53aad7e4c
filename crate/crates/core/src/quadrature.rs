//! Discretization of the Wiener-integral representation of X^K: an
//! independent route to its law, used to cross-check the closed-form
//! covariance.
//!
//! X_t ≈ Σ_k (1 - e^{-θ_k t}) θ_k^{-(1+K)/2} √Δ_k · Z_k with shared
//! standard normals Z_k across grid times, nodes θ_k on a geometric grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::xk_cov;
use crate::rng::replicate_rng;
use crate::sampler::PathEnsemble;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Relative tail-variance budget: the truncated tail ∫_Θ^∞ θ^{-(1+K)} dθ =
/// Θ^{-K}/K must not exceed this fraction of the process variance at the
/// largest grid time.
pub const TAIL_REL_TOL: f64 = 1e-6;

/// Kernel id used by ensembles produced from the integral representation.
pub const XK_INTEGRAL_KERNEL_ID: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    GeometricMidpoint,
}

/// Node layout for the θ-integral.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureSpec {
    pub theta_min: f64,
    pub theta_max: f64,
    pub nodes: usize,
    pub scheme: QuadratureScheme,
}

impl QuadratureSpec {
    /// Builds a spec whose truncation satisfies the tail bound for grid
    /// times up to `t_max`: Θ = (TAIL_REL_TOL · K · xk_cov(K, T, T))^{-1/K}.
    pub fn for_tolerance(k: f64, t_max: f64, nodes: usize) -> Result<Self> {
        let theta_max = required_theta_max(k, t_max)?;
        Ok(Self {
            theta_min: 1e-8,
            theta_max,
            nodes,
            scheme: QuadratureScheme::GeometricMidpoint,
        })
    }

    /// Checks the tail-variance bound for the given horizon.
    pub fn validate(&self, k: f64, t_max: f64) -> Result<()> {
        let required = required_theta_max(k, t_max)?;
        if self.theta_max < required {
            return Err(Error::QuadratureTail {
                k,
                t_max,
                theta_max: self.theta_max,
                required,
            });
        }
        Ok(())
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    /// Geometric cell boundaries, midpoints in log space, and θ-widths.
    fn cells(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes;
        let ratio = (self.theta_max / self.theta_min).powf(1.0 / n as f64);
        let mut nodes = Vec::with_capacity(n);
        let mut widths = Vec::with_capacity(n);
        let mut lo = self.theta_min;
        for _ in 0..n {
            let hi = lo * ratio;
            nodes.push((lo * hi).sqrt());
            widths.push(hi - lo);
            lo = hi;
        }
        (nodes, widths)
    }
}

fn required_theta_max(k: f64, t_max: f64) -> Result<f64> {
    let var = xk_cov(k, t_max, t_max)?;
    Ok((TAIL_REL_TOL * k * var).powf(-1.0 / k))
}

/// The covariance the discretization actually realizes:
/// Σ_k (1 - e^{-θ_k t})(1 - e^{-θ_k s}) θ_k^{-(1+K)} Δ_k.
///
/// Deterministic; converges to xk_cov as nodes → ∞ and Θ → ∞.
pub fn discretized_xk_cov(k: f64, spec: &QuadratureSpec, s: f64, t: f64) -> f64 {
    let (nodes, widths) = spec.cells();
    let mut acc = 0.0;
    for (&theta, &w) in nodes.iter().zip(&widths) {
        let ft = -(-theta * t).exp_m1();
        let fs = -(-theta * s).exp_m1();
        acc += ft * fs * theta.powf(-(1.0 + k)) * w;
    }
    acc
}

/// Simulates X^K paths through the discretized integral: one shared normal
/// per θ-node per replicate, deterministic under (seed, replicate) streams.
pub fn sample_xk_integral(
    k: f64,
    grid: &TimeGrid,
    spec: &QuadratureSpec,
    m_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    spec.validate(k, grid.max_time())?;
    let (nodes, widths) = spec.cells();
    let weights: Vec<f64> = nodes
        .iter()
        .zip(&widths)
        .map(|(&theta, &w)| theta.powf(-(1.0 + k) / 2.0) * w.sqrt())
        .collect();

    let n = grid.len();
    let offset = usize::from(grid.includes_origin());
    let n_cols = n + offset;
    let pts = grid.points();
    let mut values = vec![0.0f64; m_paths * n_cols];
    values
        .par_chunks_mut(n_cols)
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = replicate_rng(seed, i as u64);
            let z: Vec<f64> = (0..nodes.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            for (c, &t) in pts.iter().enumerate() {
                let mut acc = 0.0;
                for ((&theta, wgt), zk) in nodes.iter().zip(&weights).zip(&z) {
                    acc += -(-theta * t).exp_m1() * wgt * zk;
                }
                row[offset + c] = acc;
            }
        });
    Ok(PathEnsemble::from_rows(
        grid.clone(),
        m_paths,
        values,
        seed,
        "xk_integral",
        XK_INTEGRAL_KERNEL_ID,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::empirical_cov;

    #[test]
    fn tail_bound_enforced() {
        let spec = QuadratureSpec {
            theta_min: 1e-8,
            theta_max: 10.0,
            nodes: 64,
            scheme: QuadratureScheme::GeometricMidpoint,
        };
        match spec.validate(0.3, 2.0) {
            Err(Error::QuadratureTail { required, .. }) => assert!(required > 10.0),
            other => panic!("expected tail error, got {other:?}"),
        }
        let good = QuadratureSpec::for_tolerance(0.3, 2.0, 64).unwrap();
        assert!(good.validate(0.3, 2.0).is_ok());
    }

    #[test]
    fn discretized_cov_close_to_closed_form() {
        // K = 0.5, t = 1: xk_cov = 2 sqrt(pi) (2 - sqrt 2)
        let k = 0.5;
        let spec = QuadratureSpec::for_tolerance(k, 1.0, 256).unwrap();
        let d = discretized_xk_cov(k, &spec, 1.0, 1.0);
        let exact = xk_cov(k, 1.0, 1.0).unwrap();
        assert!(
            (d - exact).abs() / exact < 0.01,
            "discretized {d} vs exact {exact}"
        );
    }

    #[test]
    fn refinement_shrinks_error() {
        let k = 0.7;
        let exact = xk_cov(k, 2.0, 0.5).unwrap();
        let mut last = f64::INFINITY;
        for nodes in [64, 128, 256, 512] {
            let spec = QuadratureSpec::for_tolerance(k, 2.0, nodes).unwrap();
            let err = (discretized_xk_cov(k, &spec, 0.5, 2.0) - exact).abs();
            assert!(err < last, "error must shrink: {err} !< {last}");
            last = err;
        }
        // doubling nodes and the truncation point together also converges
        let base = QuadratureSpec::for_tolerance(k, 2.0, 64).unwrap();
        let mut last = f64::INFINITY;
        for doubling in 0..4 {
            let spec = QuadratureSpec {
                theta_max: base.theta_max * f64::from(1 << doubling),
                nodes: base.nodes << doubling,
                ..base.clone()
            };
            let err = (discretized_xk_cov(k, &spec, 0.5, 2.0) - exact).abs();
            assert!(err < last, "error must shrink: {err} !< {last}");
            last = err;
        }
    }

    #[test]
    fn paths_start_at_zero_and_match_discretized_cov() {
        let k = 0.5;
        let grid = TimeGrid::new(vec![1.0]).unwrap().with_origin();
        let spec = QuadratureSpec::for_tolerance(k, 1.0, 128).unwrap();
        let m = 40_000;
        let e = sample_xk_integral(k, &grid, &spec, m, 11).unwrap();
        for row in 0..8 {
            assert_eq!(e.row(row)[0], 0.0);
        }
        // empirical variance approaches the discretized covariance
        let target = discretized_xk_cov(k, &spec, 1.0, 1.0);
        let est = empirical_cov(&e, &[(1, 1)]).unwrap()[0];
        assert!(
            (est.estimate - target).abs() <= 4.0 * est.std_error,
            "estimate {} target {target} se {}",
            est.estimate,
            est.std_error
        );
    }
}

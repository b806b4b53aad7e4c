//! Exact Gaussian simulation on finite grids: Gram matrix assembly, jittered
//! Cholesky factorization, deterministic parallel path generation, and
//! empirical-covariance estimation with error bars.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::{bifbm_cov, fbm_cov, CovKernel};
use crate::params::{DecompositionConstants, ModelParams};
use crate::report::{CovCheckRow, ExperimentReport};
use crate::rng::{derive_seed, replicate_rng};

/// Default relative jitter budget for [`factor_psd`]. Gram matrices of the
/// kernels in this crate are analytically PSD; jitter only absorbs rounding.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Gram matrix of a kernel over a grid; exactly symmetric by construction.
pub fn gram_matrix(kernel: &CovKernel, grid: &TimeGrid) -> DMatrix<f64> {
    let pts = grid.points();
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(pts[i], pts[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Lower-triangular factor of `m + jitter * I`.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub lower: DMatrix<f64>,
    pub jitter: f64,
}

/// Cholesky factorization with a bounded diagonal jitter.
///
/// Returns L with L·Lᵀ = m + εI where ε ≤ tol·trace(m)/dim, reporting the ε
/// actually used. If no ε within the budget factors the matrix, reports the
/// estimated minimum eigenvalue instead.
pub fn factor_psd(m: &DMatrix<f64>, tol: f64) -> Result<PsdFactor> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let budget = tol * m.trace() / n as f64;
    for eps in [0.0, budget * 1e-4, budget * 1e-2, budget] {
        let mut trial = m.clone();
        if eps > 0.0 {
            for i in 0..n {
                trial[(i, i)] += eps;
            }
        }
        if let Some(chol) = nalgebra::Cholesky::new(trial) {
            return Ok(PsdFactor {
                lower: chol.unpack(),
                jitter: eps,
            });
        }
        if eps == 0.0 && budget == 0.0 {
            break;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Err(Error::NotPositiveSemidefinite { min_eigenvalue })
}

/// A matrix of sampled path values, one row per Monte Carlo replicate.
///
/// Regenerating with identical (seed, grid, kernel, m_paths) reproduces the
/// values bit for bit regardless of how many worker threads run the build:
/// replicate i always draws from ChaCha stream i of the seed.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    m_paths: usize,
    n_cols: usize,
    values: Vec<f64>,
    seed: u64,
    kernel_name: String,
    kernel_id: u32,
}

impl PathEnsemble {
    pub(crate) fn from_rows(
        grid: TimeGrid,
        m_paths: usize,
        values: Vec<f64>,
        seed: u64,
        kernel_name: &str,
        kernel_id: u32,
    ) -> Self {
        let n_cols = grid.len() + usize::from(grid.includes_origin());
        assert_eq!(values.len(), m_paths * n_cols);
        Self {
            grid,
            m_paths,
            n_cols,
            values,
            seed,
            kernel_name: kernel_name.to_string(),
            kernel_id,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn m_paths(&self) -> usize {
        self.m_paths
    }

    /// Number of columns per path (grid points, plus origin if present).
    pub fn n_points(&self) -> usize {
        self.n_cols
    }

    /// Time value of each column.
    pub fn times(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.n_cols);
        if self.grid.includes_origin() {
            t.push(0.0);
        }
        t.extend_from_slice(self.grid.points());
        t
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.n_cols..(m + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kernel_name(&self) -> &str {
        &self.kernel_name
    }

    pub fn kernel_id(&self) -> u32 {
        self.kernel_id
    }
}

/// Draws `m_paths` i.i.d. centered Gaussian paths with the kernel's Gram
/// matrix as covariance.
pub fn sample_process(
    kernel: &CovKernel,
    grid: &TimeGrid,
    m_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let factor = factor_psd(&gram_matrix(kernel, grid), DEFAULT_PSD_TOL)?;
    Ok(sample_with_factor(
        &factor.lower,
        grid,
        m_paths,
        seed,
        kernel.name(),
        kernel.id(),
    ))
}

/// Shared path-generation core: row i = L·z_i with z_i from stream i.
pub(crate) fn sample_with_factor(
    lower: &DMatrix<f64>,
    grid: &TimeGrid,
    m_paths: usize,
    seed: u64,
    kernel_name: &str,
    kernel_id: u32,
) -> PathEnsemble {
    let n = grid.len();
    debug_assert_eq!(lower.nrows(), n);
    let offset = usize::from(grid.includes_origin());
    let n_cols = n + offset;
    let mut values = vec![0.0f64; m_paths * n_cols];
    values
        .par_chunks_mut(n_cols.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = replicate_rng(seed, i as u64);
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            for r in 0..n {
                let mut acc = 0.0;
                for (c, zc) in z.iter().enumerate().take(r + 1) {
                    acc += lower[(r, c)] * zc;
                }
                row[offset + r] = acc;
            }
        });
    PathEnsemble::from_rows(grid.clone(), m_paths, values, seed, kernel_name, kernel_id)
}

/// One empirical second-moment estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovEstimate {
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub std_error: f64,
}

/// Mean-zero covariance estimates over column pairs:
/// estimate = (1/M) Σ_m v[m,i] v[m,j], standard error = sd(products)/√M.
pub fn empirical_cov(e: &PathEnsemble, pairs: &[(usize, usize)]) -> Result<Vec<CovEstimate>> {
    let m = e.m_paths();
    if m < 2 {
        return Err(Error::TooFewReplicates { required: 2, got: m });
    }
    let mf = m as f64;
    let mut out = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        assert!(i < e.n_points() && j < e.n_points(), "pair out of range");
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for row in 0..m {
            let r = e.row(row);
            let prod = r[i] * r[j];
            sum += prod;
            sum_sq += prod * prod;
        }
        let mean = sum / mf;
        let var = ((sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0);
        out.push(CovEstimate {
            i,
            j,
            estimate: mean,
            std_error: (var / mf).sqrt(),
        });
    }
    Ok(out)
}

/// Simulates independent X^{H,K} and B^{H,K} ensembles, forms C1·X + B and
/// compares its empirical Gram with C2²·fbm_cov(HK) entry by entry.
pub fn decomposition_mc_check(
    p: &ModelParams,
    grid: &TimeGrid,
    m_paths: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    p.require_k_below_one()?;
    let c = DecompositionConstants::for_params(p)?;
    let x = sample_process(
        &CovKernel::xhk(*p)?,
        grid,
        m_paths,
        derive_seed(seed, "decomposition/xhk"),
    )?;
    let b = sample_process(
        &CovKernel::bifbm(*p),
        grid,
        m_paths,
        derive_seed(seed, "decomposition/bifbm"),
    )?;

    let n_cols = x.n_points();
    let mut combined = vec![0.0f64; m_paths * n_cols];
    for row in 0..m_paths {
        let (xr, br) = (x.row(row), b.row(row));
        for col in 0..n_cols {
            combined[row * n_cols + col] = c.c1 * xr[col] + br[col];
        }
    }
    let ens = PathEnsemble::from_rows(grid.clone(), m_paths, combined, seed, "c1_xhk_plus_bifbm", 100);

    let times = ens.times();
    let mut pairs = Vec::new();
    for i in 0..n_cols {
        for j in i..n_cols {
            pairs.push((i, j));
        }
    }
    let est = empirical_cov(&ens, &pairs)?;
    let mut rows = Vec::with_capacity(est.len());
    for e in est {
        let theoretical = c.c2 * c.c2 * fbm_cov(p.hk(), times[e.i], times[e.j], false)?;
        rows.push(CovCheckRow::new(times[e.i], times[e.j], e.estimate, theoretical, e.std_error));
    }
    Ok(ExperimentReport::from_rows(
        "decomposition_mc_check",
        *p,
        seed,
        m_paths,
        rows,
        4.0,
    ))
}

/// Sup over grid pairs of the distance between the increment covariance of
/// the kernel started at h and its stationary limit C2²·fbm_cov(HK).
pub fn increment_kernel_distance(p: &ModelParams, h: f64, grid: &TimeGrid) -> f64 {
    assert!(h > 0.0, "h must be positive");
    let c2sq = 2f64.powf(1.0 - p.k());
    let mut worst: f64 = 0.0;
    for &t in grid.points() {
        for &s in grid.points() {
            let inc_cov = bifbm_cov(p, h + s, h + t) - bifbm_cov(p, h + s, h)
                - bifbm_cov(p, h, h + t)
                + bifbm_cov(p, h, h);
            let target = c2sq * fbm_cov(p.hk(), s, t, false).expect("hk in (0,1)");
            worst = worst.max((inc_cov - target).abs());
        }
    }
    worst
}

//! Serializable experiment records. Every Monte Carlo verdict carries the
//! numeric evidence (estimates, targets, standard errors, z-scores) needed
//! to recompute it offline.

use serde::Serialize;

use crate::params::ModelParams;

/// One empirical-vs-theoretical covariance comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovCheckRow {
    pub t: f64,
    pub s: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub std_error: f64,
    pub z: f64,
}

impl CovCheckRow {
    pub fn new(t: f64, s: f64, empirical: f64, theoretical: f64, std_error: f64) -> Self {
        let z = if std_error > 0.0 {
            (empirical - theoretical) / std_error
        } else if empirical == theoretical {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            t,
            s,
            empirical,
            theoretical,
            std_error,
            z,
        }
    }
}

/// PSD-repair diagnostics for a correlation matrix build.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsdRepair {
    pub min_eig_before: f64,
    pub clip_applied: bool,
    pub frobenius_change: f64,
    /// Off-diagonal entries exceeding 1 in magnitude before repair; any
    /// such entry contradicts the correlation bound and is surfaced here.
    pub offdiag_above_one: usize,
}

/// One deterministic diagnostic value (exact finite-n sums, gaps, ...).
#[derive(Debug, Clone, Serialize)]
pub struct DeterministicRow {
    pub name: String,
    pub n: usize,
    pub t: f64,
    pub s: f64,
    pub value: f64,
    pub target: f64,
    pub gap: f64,
}

/// Record of one Monte Carlo experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: ModelParams,
    pub seed: u64,
    pub m_paths: usize,
    /// Sequence length of the Monte Carlo layer, for partial-sum runs.
    pub sequence_len: Option<usize>,
    pub psd_repair: Option<PsdRepair>,
    pub rows: Vec<CovCheckRow>,
    pub deterministic: Vec<DeterministicRow>,
    pub max_abs_z: f64,
    pub z_threshold: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn from_rows(
        experiment: &str,
        params: ModelParams,
        seed: u64,
        m_paths: usize,
        rows: Vec<CovCheckRow>,
        z_threshold: f64,
    ) -> Self {
        let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
        Self {
            experiment: experiment.to_string(),
            params,
            seed,
            m_paths,
            sequence_len: None,
            psd_repair: None,
            rows,
            deterministic: Vec::new(),
            max_abs_z,
            z_threshold,
            pass: max_abs_z <= z_threshold,
            notes: Vec::new(),
        }
    }
}

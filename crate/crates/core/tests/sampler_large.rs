//! Large-ensemble exactness check: half a million paths on a 16-point
//! grid, empirical Gram against theory entry by entry.

use bifbm::kernels::CovKernel;
use bifbm::params::ModelParams;
use bifbm::sampler::{empirical_cov, gram_matrix, sample_process};
use bifbm::TimeGrid;

#[test]
fn half_million_paths_match_theoretical_gram() {
    let p = ModelParams::new(0.7, 0.6).unwrap();
    let pts: Vec<f64> = (1..=16).map(|i| 0.5 * i as f64).collect();
    let grid = TimeGrid::new(pts).unwrap();
    let kern = CovKernel::bifbm(p);
    let m = 500_000;
    let ens = sample_process(&kern, &grid, m, 1_618).unwrap();
    let gram = gram_matrix(&kern, &grid);

    let mut pairs = Vec::new();
    for i in 0..16 {
        for j in i..16 {
            pairs.push((i, j));
        }
    }
    let est = empirical_cov(&ens, &pairs).unwrap();
    let within = est
        .iter()
        .filter(|e| (e.estimate - gram[(e.i, e.j)]).abs() <= 4.0 * e.std_error)
        .count();
    let frac = within as f64 / est.len() as f64;
    assert!(
        frac >= 0.95,
        "only {within}/{} entries within 4 standard errors",
        est.len()
    );
}

//! Exact evaluation and numerical verification of the rate statements:
//! increment-variance decay, the large-a limit of f_a, the two-term
//! large-n expansion of the noise covariance, and the dependence-range
//! classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{f_a, noise_cov};
use crate::params::ModelParams;
use crate::special::gamma;

/// Exact increment variance of the time-changed process,
/// Γ(1-K) K^{-1} [2((h+t)^{2H} + h^{2H})^K - 2^K((h+t)^{2HK} + h^{2HK})],
/// evaluated through exp_m1/ln_1p so that large h keeps its digits.
pub fn xhk_increment_var_exact(p: &ModelParams, h: f64, t: f64) -> Result<f64> {
    p.require_k_below_one()?;
    assert!(h >= 0.0 && t > 0.0);
    let (h2, k) = (2.0 * p.h(), p.k());
    let pre = gamma(1.0 - k)? / k;
    if h == 0.0 {
        return Ok(pre * (2.0 - 2f64.powf(k)) * t.powf(p.two_hk()));
    }
    let r = t / h;
    // w = (1+r)^{2H} - 1, v = (1+r)^{2HK} - 1
    let w = (h2 * r.ln_1p()).exp_m1();
    let v = (p.two_hk() * r.ln_1p()).exp_m1();
    let core = 2.0 * (k * (w / 2.0).ln_1p()).exp_m1() - v;
    Ok(pre * 2f64.powf(k) * h.powf(p.two_hk()) * core)
}

/// Leading term of the increment variance for large h:
/// Γ(1-K) K^{-1} 2^K H² K (1-K) t² h^{2(HK-1)}.
pub fn xhk_increment_var_leading(p: &ModelParams, h: f64, t: f64) -> Result<f64> {
    p.require_k_below_one()?;
    assert!(h > 0.0);
    let k = p.k();
    Ok(gamma(1.0 - k)? / k
        * 2f64.powf(k)
        * p.h()
        * p.h()
        * k
        * (1.0 - k)
        * t
        * t
        * h.powf(2.0 * (p.hk() - 1.0)))
}

/// Leading term of f_a(n) for large a: 2^K H² K (K-1) a^{2(HK-1)}.
///
/// Negative for K < 1, zero at K = 1; independent of n.
pub fn fa_leading(p: &ModelParams, a: f64) -> f64 {
    assert!(a > 0.0);
    let k = p.k();
    2f64.powf(k) * p.h() * p.h() * k * (k - 1.0) * a.powf(2.0 * (p.hk() - 1.0))
}

/// The two displayed terms of the large-n expansion of the noise
/// covariance R(a, a+n):
///
/// term1 = 2^{-K} · 2HK(2HK-1) n^{2(HK-1)}           (fractional-noise part)
/// term2 = 2^{-K} · 2HK(K-1) ((a+1)^{2H} - a^{2H}) n^{2(HK-1)+(1-2H)}.
pub fn r_large_n_terms(p: &ModelParams, a: u64, n: u64) -> (f64, f64) {
    assert!(n >= 1);
    let (h2, k) = (2.0 * p.h(), p.k());
    let nf = n as f64;
    let af = a as f64;
    let pre = 2f64.powf(-k);
    let term1 = pre * 2.0 * p.hk() * (p.two_hk() - 1.0) * nf.powf(p.two_hk() - 2.0);
    let term2 = pre
        * 2.0
        * p.hk()
        * (k - 1.0)
        * ((af + 1.0).powf(h2) - af.powf(h2))
        * nf.powf(p.two_hk() - 1.0 - h2);
    (term1, term2)
}

/// Which displayed term dominates R(a, a+n) for large n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DominantTermClass {
    /// H > 1/2: order n^{2HK-2}.
    #[serde(rename = "quadratic_decay_2HK_minus_2")]
    QuadraticDecay2HkMinus2,
    /// H < 1/2: order n^{2HK-1-2H}.
    #[serde(rename = "decay_2HK_minus_1_minus_2H")]
    Decay2HkMinus1Minus2H,
    /// H = 1/2: the two exponents coincide.
    #[serde(rename = "boundary")]
    Boundary,
}

pub fn dominant_term_class(p: &ModelParams) -> DominantTermClass {
    if p.h() > 0.5 {
        DominantTermClass::QuadraticDecay2HkMinus2
    } else if p.h() < 0.5 {
        DominantTermClass::Decay2HkMinus1Minus2H
    } else {
        DominantTermClass::Boundary
    }
}

/// Range-of-dependence classification of the noise series Σ R(a, a+n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LrdClass {
    Divergent,
    Convergent,
}

/// Divergent iff 2HK > 1 (boundary 2HK = 1 converges).
pub fn lrd_classify(p: &ModelParams) -> LrdClass {
    if p.is_lrd() {
        LrdClass::Divergent
    } else {
        LrdClass::Convergent
    }
}

/// Partial sums Σ_{n<=N} R(a, a+n) at each requested N (ascending).
pub fn noise_partial_sums(p: &ModelParams, a: u64, checkpoints: &[u64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut n = 0u64;
    for &cp in checkpoints {
        while n <= cp {
            sum += noise_cov(p, a, n);
            n += 1;
        }
        out.push(sum);
    }
    out
}

/// Ordinary least squares on (log x, log |y|).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::SlopeFit(format!(
            "need at least 3 points, got {}",
            xs.len().min(ys.len())
        )));
    }
    if xs.iter().any(|&x| x <= 0.0) {
        return Err(Error::SlopeFit("x values must be positive".into()));
    }
    if ys.contains(&0.0) {
        return Err(Error::SlopeFit("y values must be nonzero".into()));
    }
    let sign = ys[0].signum();
    if ys.iter().any(|&y| y.signum() != sign) {
        return Err(Error::SlopeFit("y values change sign".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Which rate statement a sweep verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateTarget {
    /// Increment variance of the time-changed process vs h.
    Prop22,
    /// f_a vs a at fixed n.
    Thm31,
    /// (R(a, a+n) - term1)/term2 vs n at fixed a.
    Thm41,
}

/// Sweep layout; `points` is the swept parameter (h, a or n by target).
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub points: Vec<f64>,
    /// Increment length for the h-sweep.
    pub t: f64,
    /// Fixed n for the a-sweep.
    pub n: f64,
    /// Fixed a for the n-sweep.
    pub a: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            points: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            t: 1.0,
            n: 1.0,
            a: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateTolerances {
    pub slope_tol: f64,
    pub ratio_tol: f64,
}

impl Default for RateTolerances {
    fn default() -> Self {
        Self {
            slope_tol: 0.05,
            ratio_tol: 0.05,
        }
    }
}

/// One sweep point: exact value, leading-term prediction, their ratio.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatePoint {
    pub parameter: f64,
    pub exact: f64,
    pub leading: f64,
    pub ratio: f64,
}

/// Sweep record: pass iff |fitted_slope - target_slope| <= slope_tol and
/// |last ratio - 1| <= ratio_tol.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub quantity: String,
    pub params: ModelParams,
    pub points: Vec<RatePoint>,
    pub fitted_slope: f64,
    pub target_slope: f64,
    pub slope_tol: f64,
    pub ratio_tol: f64,
    pub pass: bool,
}

/// Runs one rate sweep and fills the report.
pub fn rate_experiment(
    target: RateTarget,
    p: &ModelParams,
    sweep: &SweepConfig,
    tol: &RateTolerances,
) -> Result<RateReport> {
    if sweep.points.len() < 3 {
        return Err(Error::SlopeFit("sweep needs at least 3 points".into()));
    }
    let (quantity, target_slope) = match target {
        RateTarget::Prop22 => {
            p.require_k_below_one()?;
            ("xhk_increment_variance", 2.0 * (p.hk() - 1.0))
        }
        RateTarget::Thm31 => {
            p.require_k_below_one()?;
            ("f_a", 2.0 * (p.hk() - 1.0))
        }
        RateTarget::Thm41 => {
            p.require_k_below_one()?;
            ("noise_minus_leading", p.two_hk() - 1.0 - 2.0 * p.h())
        }
    };
    let mut points = Vec::with_capacity(sweep.points.len());
    for &x in &sweep.points {
        let (exact, leading) = match target {
            RateTarget::Prop22 => (
                xhk_increment_var_exact(p, x, sweep.t)?,
                xhk_increment_var_leading(p, x, sweep.t)?,
            ),
            RateTarget::Thm31 => (f_a(p, x, sweep.n), fa_leading(p, x)),
            RateTarget::Thm41 => {
                let n = x.round() as u64;
                let (t1, t2) = r_large_n_terms(p, sweep.a, n);
                (noise_cov(p, sweep.a, n) - t1, t2)
            }
        };
        let ratio = if leading != 0.0 { exact / leading } else { f64::NAN };
        points.push(RatePoint {
            parameter: x,
            exact,
            leading,
            ratio,
        });
    }
    let xs: Vec<f64> = points.iter().map(|q| q.parameter).collect();
    let ys: Vec<f64> = points.iter().map(|q| q.exact).collect();
    let fit = loglog_slope(&xs, &ys)?;
    let last_ratio = points.last().expect("nonempty").ratio;
    let pass =
        (fit.slope - target_slope).abs() <= tol.slope_tol && (last_ratio - 1.0).abs() <= tol.ratio_tol;
    Ok(RateReport {
        quantity: quantity.to_string(),
        params: *p,
        points,
        fitted_slope: fit.slope,
        target_slope,
        slope_tol: tol.slope_tol,
        ratio_tol: tol.ratio_tol,
        pass,
    })
}

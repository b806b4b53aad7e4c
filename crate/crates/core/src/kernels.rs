//! Closed-form covariance kernels of the bifractional family, the noise
//! functions of their unit increments, and the algebraic identities tying
//! them together.
//!
//! Everything here is a pure function of its arguments. Large-argument
//! noise evaluations go through `exp_m1`/`ln_1p` forms of (1+x)^a - 1 so
//! that the second differences keep significant digits deep into the
//! asymptotic sweeps (a, n up to 1e6).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DecompositionConstants, ModelParams};
use crate::special::{gamma, pow_abs};

/// Covariance of the bifractional Brownian motion:
/// 2^{-K} ((t^{2H} + s^{2H})^K - |t-s|^{2HK}), for s, t >= 0.
pub fn bifbm_cov(p: &ModelParams, s: f64, t: f64) -> f64 {
    debug_assert!(s >= 0.0 && t >= 0.0);
    let (h2, k) = (2.0 * p.h(), p.k());
    2f64.powf(-k) * ((t.powf(h2) + s.powf(h2)).powf(k) - pow_abs(t - s, p.two_hk()))
}

/// Covariance of fractional Brownian motion with Hurst index `hurst`:
/// (|t|^{2h} + |s|^{2h} - |t-s|^{2h}) / 2.
///
/// `two_sided = false` restricts the domain to s, t >= 0.
pub fn fbm_cov(hurst: f64, s: f64, t: f64, two_sided: bool) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            value: hurst,
            bound: "Hurst index must lie in (0, 1)",
        });
    }
    if !two_sided && (s < 0.0 || t < 0.0) {
        return Err(Error::Domain {
            op: "fbm_cov",
            reason: format!("one-sided kernel requires s, t >= 0, got ({s}, {t})"),
        });
    }
    let h2 = 2.0 * hurst;
    Ok(0.5 * (pow_abs(t, h2) + pow_abs(s, h2) - pow_abs(t - s, h2)))
}

/// Covariance of the auxiliary process X^K:
/// Γ(1-K) K^{-1} (t^K + s^K - (t+s)^K), for s, t >= 0 and K in (0, 1).
pub fn xk_cov(k: f64, s: f64, t: f64) -> Result<f64> {
    check_k_open_unit(k)?;
    debug_assert!(s >= 0.0 && t >= 0.0);
    let g = gamma(1.0 - k)?;
    Ok(g / k * (t.powf(k) + s.powf(k) - (t + s).powf(k)))
}

/// Covariance of the time-changed process X_t = X^K_{t^{2H}}:
/// Γ(1-K) K^{-1} (t^{2HK} + s^{2HK} - (t^{2H} + s^{2H})^K).
pub fn xhk_cov(p: &ModelParams, s: f64, t: f64) -> Result<f64> {
    p.require_k_below_one()?;
    debug_assert!(s >= 0.0 && t >= 0.0);
    let (h2, k) = (2.0 * p.h(), p.k());
    let g = gamma(1.0 - k)?;
    Ok(g / k * (t.powf(p.two_hk()) + s.powf(p.two_hk()) - (t.powf(h2) + s.powf(h2)).powf(k)))
}

/// Residual of the covariance-level decomposition identity
/// C1²·xhk_cov + bifbm_cov - C2²·fbm_cov(HK); identically zero.
pub fn decomposition_residual(p: &ModelParams, s: f64, t: f64) -> Result<f64> {
    let c = DecompositionConstants::for_params(p)?;
    let lhs = c.c1 * c.c1 * xhk_cov(p, s, t)? + bifbm_cov(p, s, t);
    let rhs = c.c2 * c.c2 * fbm_cov(p.hk(), s, t, false)?;
    Ok(lhs - rhs)
}

/// Stable (b^{2H} + y1^{2H})^K - (b^{2H} + y0^{2H})^K for 0 <= y0 < y1.
fn power_sum_diff(h2: f64, k: f64, b: f64, y0: f64, y1: f64) -> f64 {
    let base = b.powf(h2) + y0.powf(h2);
    if base == 0.0 {
        return y1.powf(h2 * k);
    }
    // y1^{2H} - y0^{2H} without cancellation when y1/y0 is close to 1
    let delta = if y0 == 0.0 {
        y1.powf(h2)
    } else {
        y0.powf(h2) * (h2 * (y1 / y0).ln()).exp_m1()
    };
    base.powf(k) * (k * (delta / base).ln_1p()).exp_m1()
}

/// The four-term function f_a(n) specific to the bifractional case:
///
/// ((a+1)^{2H} + (a+n+1)^{2H})^K - ((a+1)^{2H} + (a+n)^{2H})^K
///   - (a^{2H} + (a+n+1)^{2H})^K + (a^{2H} + (a+n)^{2H})^K.
///
/// Vanishes identically at K = 1. Accepts real a, n >= 0.
pub fn f_a(p: &ModelParams, a: f64, n: f64) -> f64 {
    debug_assert!(a >= 0.0 && n >= 0.0);
    let (h2, k) = (2.0 * p.h(), p.k());
    if k == 1.0 {
        return 0.0;
    }
    power_sum_diff(h2, k, a + 1.0, a + n, a + n + 1.0)
        - power_sum_diff(h2, k, a, a + n, a + n + 1.0)
}

/// The fractional-noise part g(n) = (n+1)^{2HK} + (n-1)^{2HK} - 2 n^{2HK},
/// defined for n >= 1. Vanishes identically when 2HK = 1.
pub fn g_noise(p: &ModelParams, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain {
            op: "g_noise",
            reason: "g(n) is defined for n >= 1 only".into(),
        });
    }
    let a = p.two_hk();
    if a == 1.0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(2f64.powf(a) - 2.0);
    }
    let nf = n as f64;
    // second difference of n^a via expm1 to keep digits at large n
    Ok(nf.powf(a) * ((a * (1.0 / nf).ln_1p()).exp_m1() + (a * (-1.0 / nf).ln_1p()).exp_m1()))
}

/// Covariance R(a, a+n) of the unit-increment noise Y_a = B_{a+1} - B_a.
///
/// For n >= 1 this is 2^{-K} (f_a(n) + g(n)); the n = 0 variance is taken
/// from the kernel directly since g is only defined from n = 1.
pub fn noise_cov(p: &ModelParams, a: u64, n: u64) -> f64 {
    let af = a as f64;
    if n == 0 {
        return bifbm_cov(p, af + 1.0, af + 1.0) - 2.0 * bifbm_cov(p, af, af + 1.0)
            + bifbm_cov(p, af, af);
    }
    2f64.powf(-p.k()) * (f_a(p, af, n as f64) + g_noise(p, n).expect("n >= 1"))
}

/// The mixed second derivative g(x, y) of the bifractional covariance,
/// split into its two components:
///
/// g1 = 2^{2-K} H² K (K-1) (x^{2H} + y^{2H})^{K-2} (xy)^{2H-1},
/// g2 = 2^{1-K} H K (2HK-1) |x-y|^{2HK-2}.
///
/// Requires 2HK > 1 and x, y > 0 with x != y.
pub fn g_density_parts(p: &ModelParams, x: f64, y: f64) -> Result<(f64, f64)> {
    p.require_lrd()?;
    if x <= 0.0 || y <= 0.0 {
        return Err(Error::Domain {
            op: "g_density",
            reason: format!("arguments must be positive, got ({x}, {y})"),
        });
    }
    if x == y {
        return Err(Error::Domain {
            op: "g_density",
            reason: "singular on the diagonal x = y".into(),
        });
    }
    let (h, k) = (p.h(), p.k());
    let h2 = 2.0 * h;
    let g1 = 2f64.powf(2.0 - k)
        * h
        * h
        * k
        * (k - 1.0)
        * (x.powf(h2) + y.powf(h2)).powf(k - 2.0)
        * (x * y).powf(h2 - 1.0);
    let g2 = 2f64.powf(1.0 - k) * h * k * (p.two_hk() - 1.0) * pow_abs(x - y, p.two_hk() - 2.0);
    Ok((g1, g2))
}

/// g(x, y) = g1(x, y) + g2(x, y). See [`g_density_parts`].
pub fn g_density(p: &ModelParams, x: f64, y: f64) -> Result<f64> {
    g_density_parts(p, x, y).map(|(g1, g2)| g1 + g2)
}

/// Which half of the two-sided fractional Brownian motion to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OddEven {
    Odd,
    Even,
}

/// Covariance of the odd/even part of a two-sided fBm with Hurst K/2:
/// R^{o/e}(t, s) = (R(t, s) -/+ R(t, -s)) / 2, for s, t >= 0, K in (0, 1).
pub fn odd_even_cov(k: f64, part: OddEven, s: f64, t: f64) -> Result<f64> {
    check_k_open_unit(k)?;
    let same = fbm_cov(k / 2.0, s, t, true)?;
    let mirror = fbm_cov(k / 2.0, -s, t, true)?;
    Ok(match part {
        OddEven::Odd => 0.5 * (same - mirror),
        OddEven::Even => 0.5 * (same + mirror),
    })
}

/// Covariance-level residual of the odd/even decomposition of X^K:
/// even_cov - odd_cov - C3^{-1}·xk_cov, identically zero.
pub fn prop51_residual(k: f64, s: f64, t: f64) -> Result<f64> {
    let c = DecompositionConstants::from_k(k)?;
    let even = odd_even_cov(k, OddEven::Even, s, t)?;
    let odd = odd_even_cov(k, OddEven::Odd, s, t)?;
    Ok(even - odd - xk_cov(k, s, t)? / c.c3)
}

fn check_k_open_unit(k: f64) -> Result<()> {
    if k >= 1.0 {
        return Err(Error::KMustBeLessThanOne);
    }
    // `!(k > 0.0)` also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "K",
            value: k,
            bound: "K must lie in (0, 1)",
        });
    }
    Ok(())
}

/// A named, evaluable two-argument covariance kernel. Construction
/// validates the parameters, so `eval` itself is plain arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovKernel {
    Bifbm(ModelParams),
    FbmOneSided { hurst: f64 },
    FbmTwoSided { hurst: f64 },
    Xk { k: f64 },
    Xhk(ModelParams),
    OddPart { k: f64 },
    EvenPart { k: f64 },
}

impl CovKernel {
    pub fn bifbm(p: ModelParams) -> Self {
        CovKernel::Bifbm(p)
    }

    pub fn fbm_one_sided(hurst: f64) -> Result<Self> {
        fbm_cov(hurst, 0.0, 0.0, false)?;
        Ok(CovKernel::FbmOneSided { hurst })
    }

    pub fn fbm_two_sided(hurst: f64) -> Result<Self> {
        fbm_cov(hurst, 0.0, 0.0, true)?;
        Ok(CovKernel::FbmTwoSided { hurst })
    }

    pub fn xk(k: f64) -> Result<Self> {
        check_k_open_unit(k)?;
        Ok(CovKernel::Xk { k })
    }

    pub fn xhk(p: ModelParams) -> Result<Self> {
        p.require_k_below_one()?;
        Ok(CovKernel::Xhk(p))
    }

    pub fn odd_part(k: f64) -> Result<Self> {
        check_k_open_unit(k)?;
        Ok(CovKernel::OddPart { k })
    }

    pub fn even_part(k: f64) -> Result<Self> {
        check_k_open_unit(k)?;
        Ok(CovKernel::EvenPart { k })
    }

    /// Kernel value at (s, t). Arguments must respect [`Self::two_sided`].
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            CovKernel::Bifbm(p) => bifbm_cov(p, s, t),
            CovKernel::FbmOneSided { hurst } => fbm_cov(*hurst, s, t, false).expect("validated"),
            CovKernel::FbmTwoSided { hurst } => fbm_cov(*hurst, s, t, true).expect("validated"),
            CovKernel::Xk { k } => xk_cov(*k, s, t).expect("validated"),
            CovKernel::Xhk(p) => xhk_cov(p, s, t).expect("validated"),
            CovKernel::OddPart { k } => odd_even_cov(*k, OddEven::Odd, s, t).expect("validated"),
            CovKernel::EvenPart { k } => odd_even_cov(*k, OddEven::Even, s, t).expect("validated"),
        }
    }

    /// Whether the kernel is defined for negative time arguments.
    pub fn two_sided(&self) -> bool {
        matches!(self, CovKernel::FbmTwoSided { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CovKernel::Bifbm(_) => "bifbm",
            CovKernel::FbmOneSided { .. } => "fbm_one_sided",
            CovKernel::FbmTwoSided { .. } => "fbm_two_sided",
            CovKernel::Xk { .. } => "xk",
            CovKernel::Xhk(_) => "xhk",
            CovKernel::OddPart { .. } => "odd_part",
            CovKernel::EvenPart { .. } => "even_part",
        }
    }

    /// Stable numeric id used by the binary ensemble layout.
    pub fn id(&self) -> u32 {
        match self {
            CovKernel::Bifbm(_) => 0,
            CovKernel::FbmOneSided { .. } => 1,
            CovKernel::FbmTwoSided { .. } => 2,
            CovKernel::Xk { .. } => 3,
            CovKernel::Xhk(_) => 4,
            CovKernel::OddPart { .. } => 5,
            CovKernel::EvenPart { .. } => 6,
        }
    }
}

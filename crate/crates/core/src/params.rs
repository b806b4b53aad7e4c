//! Model parameters and the decomposition constants derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

/// The parameter pair (H, K) with H in (0,1) and K in (0,1].
///
/// `ModelParams` validates on construction and exposes the derived product
/// HK and the long-range-dependence flag 2HK > 1 read-only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    h: f64,
    k: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    h: f64,
    k: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.h, raw.k)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { h: p.h, k: p.k }
    }
}

impl ModelParams {
    pub fn new(h: f64, k: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidParameter {
                name: "H",
                value: h,
                bound: "H must lie in the open interval (0, 1)",
            });
        }
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "K",
                value: k,
                bound: "K must lie in the half-open interval (0, 1]",
            });
        }
        Ok(Self { h, k })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// The self-similarity order HK, always in (0, 1).
    pub fn hk(&self) -> f64 {
        self.h * self.k
    }

    pub fn two_hk(&self) -> f64 {
        2.0 * self.h * self.k
    }

    /// Long-range dependence holds iff 2HK > 1.
    pub fn is_lrd(&self) -> bool {
        self.two_hk() > 1.0
    }

    /// Errors unless K < 1 strictly.
    pub fn require_k_below_one(&self) -> Result<()> {
        if self.k < 1.0 {
            Ok(())
        } else {
            Err(Error::KMustBeLessThanOne)
        }
    }

    /// Errors unless 2HK > 1.
    pub fn require_lrd(&self) -> Result<()> {
        if self.is_lrd() {
            Ok(())
        } else {
            Err(Error::RequiresLrd {
                two_hk: self.two_hk(),
            })
        }
    }
}

/// The constants tying the auxiliary process to the fractional Brownian
/// motion of index HK:
///
/// C1 = (2^{-K} K / Γ(1-K))^{1/2},  C2 = 2^{(1-K)/2},  C3 = 2 Γ(1-K) / K.
///
/// They satisfy C3 · C1² = 2^{1-K} exactly; all three are recomputable
/// from K alone and require K < 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecompositionConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DecompositionConstants {
    pub fn from_k(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::InvalidParameter {
                name: "K",
                value: k,
                bound: "decomposition constants require K in (0, 1)",
            });
        }
        let gamma_1mk = gamma(1.0 - k)?;
        Ok(Self {
            c1: (2f64.powf(-k) * k / gamma_1mk).sqrt(),
            c2: 2f64.powf((1.0 - k) / 2.0),
            c3: 2.0 * gamma_1mk / k,
        })
    }

    pub fn for_params(p: &ModelParams) -> Result<Self> {
        Self::from_k(p.k())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(0.0, 0.5).is_err());
        assert!(ModelParams::new(1.0, 0.5).is_err());
        assert!(ModelParams::new(0.5, 0.0).is_err());
        assert!(ModelParams::new(0.5, 1.0 + 1e-12).is_err());
        assert!(ModelParams::new(f64::NAN, 0.5).is_err());
        assert!(ModelParams::new(0.5, 1.0).is_ok());
    }

    #[test]
    fn lrd_flag() {
        assert!(ModelParams::new(0.8, 0.8).unwrap().is_lrd());
        assert!(!ModelParams::new(0.5, 0.8).unwrap().is_lrd());
        // 2HK = 1 exactly is not LRD
        assert!(!ModelParams::new(0.625, 0.8).unwrap().is_lrd());
    }

    #[test]
    fn constants_identity() {
        for k in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
            let c = DecompositionConstants::from_k(k).unwrap();
            assert_relative_eq!(c.c3 * c.c1 * c.c1, 2f64.powf(1.0 - k), max_relative = 1e-14);
            assert_relative_eq!(c.c2, 2f64.powf((1.0 - k) / 2.0), max_relative = 1e-15);
            assert!(c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0);
        }
    }

    #[test]
    fn constants_reject_k_one() {
        assert!(DecompositionConstants::from_k(1.0).is_err());
    }

    #[test]
    fn params_serde_round_trip() {
        let p = ModelParams::new(0.6, 0.8).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        // deserialization re-validates
        assert!(serde_json::from_str::<ModelParams>("{\"h\":1.5,\"k\":0.5}").is_err());
    }
}

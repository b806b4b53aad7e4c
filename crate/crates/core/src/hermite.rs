//! Monic (probabilists') Hermite polynomials, Gaussian cross-moments, and
//! Hermite-coefficient extraction by Gauss-Hermite quadrature.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Monic Hermite polynomial H_k(x) via H_{k+1} = x·H_k - k·H_{k-1}.
pub fn hermite(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0; // H_0
            let mut cur = x; // H_1
            for j in 1..k {
                let next = x * cur - j as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// E[H_k(ξ) H_l(η)] for a standardized Gaussian pair with correlation r:
/// δ_{k,l} r^k k!.
pub fn hermite_cross_moment(k: usize, l: usize, r: f64) -> f64 {
    assert!(r.abs() <= 1.0, "correlation must satisfy |r| <= 1");
    if k != l {
        0.0
    } else {
        r.powi(k as i32) * factorial(k)
    }
}

/// k! as a float; guards at 20 where u64 still holds the product exactly.
pub fn factorial(k: usize) -> f64 {
    assert!(k <= 20, "factorial overflow guard");
    (1..=k as u64).product::<u64>() as f64
}

/// Gauss-Hermite rule for expectations under the standard normal law:
/// E[f(ξ)] ≈ Σ w_i f(x_i), weights normalized to sum to 1.
///
/// Nodes and weights come from the Golub-Welsch eigendecomposition of the
/// Jacobi matrix of the monic Hermite recurrence (off-diagonal √k).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64).sqrt();
            jacobi[(i - 1, i)] = b;
            jacobi[(i, i - 1)] = b;
        }
        let eig = nalgebra::SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let first = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Polynomial in the monomial basis; the expression language for the
/// nonlinear functionals fed to the limit-theorem experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyExpr {
    /// coefficients[d] multiplies x^d
    coefficients: Vec<f64>,
}

/// Largest supported polynomial degree.
pub const MAX_POLY_DEGREE: usize = 8;

impl PolyExpr {
    pub fn from_monomials(coefficients: &[f64]) -> Result<Self> {
        let degree = coefficients
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0);
        if degree > MAX_POLY_DEGREE {
            return Err(Error::Hermite(format!(
                "degree {degree} exceeds the supported maximum {MAX_POLY_DEGREE}"
            )));
        }
        Ok(Self {
            coefficients: coefficients[..=degree].to_vec(),
        })
    }

    /// Builds Σ c_k H_k(x) from (k, c_k) pairs, expanded to monomials.
    pub fn from_hermite_combo(terms: &[(usize, f64)]) -> Result<Self> {
        let mut acc = vec![0.0f64];
        for &(k, c) in terms {
            if k > MAX_POLY_DEGREE {
                return Err(Error::Hermite(format!(
                    "Hermite order {k} exceeds the supported maximum {MAX_POLY_DEGREE}"
                )));
            }
            let hk = hermite_monomials(k);
            if acc.len() < hk.len() {
                acc.resize(hk.len(), 0.0);
            }
            for (d, &m) in hk.iter().enumerate() {
                acc[d] += c * m;
            }
        }
        PolyExpr::from_monomials(&acc)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Monomial coefficients of the monic Hermite polynomial H_k.
fn hermite_monomials(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0]; // H_0
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0]; // H_1 = x
    for j in 1..k {
        // H_{j+1} = x·H_j - j·H_{j-1}
        let mut next = vec![0.0; cur.len() + 1];
        for (d, &c) in cur.iter().enumerate() {
            next[d + 1] += c;
        }
        for (d, &c) in prev.iter().enumerate() {
            next[d] -= j as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Hermite expansion f = Σ_{k>=1} c_k H_k with convention
/// c_k = E[f(ξ) H_k(ξ)] / k!.
#[derive(Debug, Clone, Serialize)]
pub struct HermiteExpansion {
    /// c_1 .. c_kmax
    pub coefficients: Vec<f64>,
    pub mean: f64,
    pub second_moment: f64,
    /// E[f²] - Σ c_k² k!, the mass beyond k_max.
    pub tail_mass: f64,
    pub convention: String,
}

impl HermiteExpansion {
    /// c_k for k >= 1; zero beyond k_max.
    pub fn c(&self, k: usize) -> f64 {
        assert!(k >= 1);
        self.coefficients.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn c1(&self) -> f64 {
        self.c(1)
    }

    pub fn k_max(&self) -> usize {
        self.coefficients.len()
    }

    /// Σ_{k >= from} c_k² k! over the stored coefficients.
    pub fn chaos_mass_from(&self, from: usize) -> f64 {
        (from..=self.k_max()).map(|k| self.c(k) * self.c(k) * factorial(k)).sum()
    }

    /// Value of the truncated expansion at x.
    pub fn reconstruct(&self, x: f64) -> f64 {
        (1..=self.k_max()).map(|k| self.c(k) * hermite(k, x)).sum()
    }
}

/// Extracts c_k = E[f(ξ) H_k(ξ)]/k! for k = 1..k_max by quadrature.
///
/// Rejects functions whose mean under the standard normal law is not zero
/// (|E f| > 1e-10).
pub fn hermite_coeffs(f: &PolyExpr, k_max: usize, quad_nodes: usize) -> Result<HermiteExpansion> {
    if k_max == 0 || k_max > 20 {
        return Err(Error::Hermite(format!("k_max must be in 1..=20, got {k_max}")));
    }
    let rule = GaussHermite::new(quad_nodes.max(k_max + f.degree() + 2));
    let mean = rule.expectation(|x| f.eval(x));
    if mean.abs() > 1e-10 {
        return Err(Error::Hermite(format!(
            "function must be centered: E[f] = {mean:.3e}"
        )));
    }
    let second_moment = rule.expectation(|x| {
        let v = f.eval(x);
        v * v
    });
    let coefficients: Vec<f64> = (1..=k_max)
        .map(|k| rule.expectation(|x| f.eval(x) * hermite(k, x)) / factorial(k))
        .collect();
    let captured: f64 = coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| c * c * factorial(i + 1))
        .sum();
    Ok(HermiteExpansion {
        coefficients,
        mean,
        second_moment,
        tail_mass: second_moment - captured,
        convention: "c_k = E[f(xi) H_k(xi)] / k!".to_string(),
    })
}

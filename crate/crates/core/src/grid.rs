//! Time grids for finite-dimensional sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing positive time points, with an optional logical
/// origin at t = 0.
///
/// The origin is never part of the factorized grid (a zero-variance row
/// breaks strict factorization); when the flag is set, samplers prepend an
/// exact-zero column to their output instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TimeGrid {
    points: Vec<f64>,
    include_origin: bool,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    points: Vec<f64>,
    include_origin: bool,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        let g = TimeGrid::new(raw.points)?;
        Ok(if raw.include_origin { g.with_origin() } else { g })
    }
}

impl From<TimeGrid> for RawGrid {
    fn from(g: TimeGrid) -> Self {
        RawGrid {
            points: g.points,
            include_origin: g.include_origin,
        }
    }
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid must contain at least one point".into()));
        }
        if !points[0].is_finite() || points[0] <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first point must be positive and finite, got {}",
                points[0]
            )));
        }
        for w in points.windows(2) {
            // `!(a > b)` also rejects NaN
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "points must be strictly increasing, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(Self {
            points,
            include_origin: false,
        })
    }

    /// Marks the grid as logically starting at t = 0.
    pub fn with_origin(mut self) -> Self {
        self.include_origin = true;
        self
    }

    pub fn includes_origin(&self) -> bool {
        self.include_origin
    }

    /// The strictly positive points (the origin is not among them).
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_time(&self) -> f64 {
        *self.points.last().expect("nonempty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_monotonicity_and_positivity() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![-1.0]).is_err());
        assert!(TimeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![1.0, 0.5]).is_err());
        assert!(TimeGrid::new(vec![f64::NAN]).is_err());
        let g = TimeGrid::new(vec![0.5, 1.0, 2.0]).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.max_time(), 2.0);
        assert!(!g.includes_origin());
        assert!(g.with_origin().includes_origin());
    }
}

//! Initial node values.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::StateVector;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("uniform range [{lo}, {hi}) is invalid: need 0 <= lo < hi")]
    BadRange { lo: f64, hi: f64 },
    #[error("quadrant values {0:?} average to zero or are not finite")]
    BadQuadrants([f64; 4]),
    #[error("lattice {rows}x{cols} has no nodes")]
    Empty { rows: usize, cols: usize },
}

/// How initial values are laid out over the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Independent draws from `[lo, hi)`.
    Uniform {
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    /// One constant per lattice quadrant: top-left, top-right, bottom-left,
    /// bottom-right. Odd sides put the extra row/column in the top/left half.
    Quadrant {
        #[serde(default = "default_quadrants")]
        values: [f64; 4],
    },
}

fn one() -> f64 {
    1.0
}

fn default_quadrants() -> [f64; 4] {
    [1.0, 2.0, 3.0, 4.0]
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl DistributionSpec {
    pub fn quadrant() -> Self {
        DistributionSpec::Quadrant {
            values: default_quadrants(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::Quadrant { .. } => "quadrant",
        }
    }

    /// Rejects layouts whose mean could be zero, which would leave the
    /// convergence ratio undefined.
    pub fn validate(&self) -> Result<(), DataError> {
        match *self {
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                    return Err(DataError::BadRange { lo, hi });
                }
            }
            DistributionSpec::Quadrant { values } => {
                let sum: f64 = values.iter().sum();
                if !values.iter().all(|v| v.is_finite()) || sum == 0.0 {
                    return Err(DataError::BadQuadrants(values));
                }
            }
        }
        Ok(())
    }

    /// Values for an `rows x cols` lattice, node `(r, c)` at `r * cols + c`.
    /// Quadrant layouts ignore `rng`.
    pub fn generate<R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> Result<StateVector, DataError> {
        self.validate()?;
        if rows == 0 || cols == 0 {
            return Err(DataError::Empty { rows, cols });
        }
        let values = match *self {
            DistributionSpec::Uniform { lo, hi } => (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect(),
            DistributionSpec::Quadrant { values } => {
                let (half_r, half_c) = (rows.div_ceil(2), cols.div_ceil(2));
                let mut out = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        let q = 2 * usize::from(r >= half_r) + usize::from(c >= half_c);
                        out.push(values[q]);
                    }
                }
                out
            }
        };
        Ok(StateVector::from_finite(values))
    }
}

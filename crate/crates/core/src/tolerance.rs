use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff for numerical rank and kernels.
    pub rank_tol: f64,
    /// Relative residual accepted by identity checks.
    pub residual_tol: f64,
    /// Largest log-growth slope still classified as bounded.
    pub growth_slope_tol: f64,
    /// Relative size below which a term of the `R_m` series is negligible.
    pub series_term_tol: f64,
    /// Largest power `n` examined by the Deddens growth profile.
    pub max_power: usize,
    /// Largest index `m` examined by the spectral radius algebra profile.
    pub max_index: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            residual_tol: 1e-9,
            growth_slope_tol: 0.01,
            series_term_tol: 1e-14,
            max_power: 40,
            max_index: 20,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rank_tol", self.rank_tol),
            ("residual_tol", self.residual_tol),
            ("growth_slope_tol", self.growth_slope_tol),
            ("series_term_tol", self.series_term_tol),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Precondition(format!(
                    "tolerance {name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.max_power == 0 || self.max_index == 0 {
            return Err(Error::Precondition(
                "max_power and max_index must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Relative singular value below which a power `T^n` is considered to
    /// have lost its small directions to rounding rather than to a true
    /// kernel. Profiles stop before reaching this regime.
    pub fn conditioning_horizon(&self) -> f64 {
        self.rank_tol.sqrt()
    }

    /// Largest number of series terms `build_rm` may sum.
    pub fn series_cap(&self) -> usize {
        10 * self.max_power
    }
}

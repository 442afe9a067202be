//! Kernel functions with support on [0,1].
//!
//! The same families serve as K, W, H and H-tilde in the weighted estimators.
//! Derivatives of kernel powers feed the moment plug-ins of the confidence
//! intervals.

use serde::{Deserialize, Serialize};

use crate::error::{FvolError, Result};

/// Nonincreasing, nonnegative kernel on [0,1]; zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `(3/2)(1 - u^2)` on [0,1]. The documented default.
    Quadratic,
    /// `2(1 - u)` on [0,1].
    Triangular,
    /// `1` on [0,1].
    Uniform,
}

impl Kernel {
    /// Kernel value; `u` outside [0,1] maps to 0.
    pub fn eval(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            Kernel::Quadratic => 1.5 * (1.0 - u * u),
            Kernel::Triangular => 2.0 * (1.0 - u),
            Kernel::Uniform => 1.0,
        }
    }

    /// Derivative of `K(u)^j` at `u` in [0,1], for j in {1,2}.
    pub fn deriv_pow(self, j: u8, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(FvolError::OutOfSupport { u });
        }
        debug_assert!(j == 1 || j == 2);
        let d = match self {
            Kernel::Quadratic => match j {
                1 => -3.0 * u,
                _ => -9.0 * u * (1.0 - u * u),
            },
            Kernel::Triangular => match j {
                1 => -2.0,
                _ => -8.0 * (1.0 - u),
            },
            Kernel::Uniform => 0.0,
        };
        Ok(d)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Quadratic => "quadratic",
            Kernel::Triangular => "triangular",
            Kernel::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = FvolError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quadratic" => Ok(Kernel::Quadratic),
            "triangular" => Ok(Kernel::Triangular),
            "uniform" => Ok(Kernel::Uniform),
            other => Err(FvolError::InvalidParameter(format!(
                "unknown kernel `{other}`"
            ))),
        }
    }
}

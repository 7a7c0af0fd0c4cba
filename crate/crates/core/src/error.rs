use thiserror::Error;

use crate::levy_core::Monotonicity;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Quadrature ran out of subdivisions before meeting the tolerance.
    #[error("integration did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Integration { estimate: f64, error_bound: f64 },

    /// The integral is infinite (or grows without bound across cutoffs).
    #[error("divergent integral (partial estimate {partial:e})")]
    Divergent { partial: f64 },

    #[error("process is monotone ({0:?}); no equivalent martingale measure exists")]
    Monotone(Monotonicity),

    #[error("root bracket not found on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("triplet is not a martingale (residual {0:e})")]
    NonMartingale(f64),

    #[error("no admissible damping line for the Fourier oracle")]
    Strip,
}

impl Error {
    pub fn is_divergent(&self) -> bool {
        matches!(self, Error::Divergent { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

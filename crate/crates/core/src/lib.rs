//! Exponential Lévy market models: minimal-entropy (Esscher) and q-optimal
//! martingale measures, Monte Carlo / Fourier pricing, and convergence
//! experiments for sequences of models.

pub mod convergence_lab;
pub mod error;
pub mod levy_core;
pub mod measure_change;
pub mod pricing;
pub mod quad;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
pub use levy_core::{
    char_exponent, is_monotone, levy_integral, modified_second_characteristic, DensityRatio, LevyMeasure, LevyTriplet,
    Monotonicity, Region,
};
pub use quad::IntegrationConfig;
pub use special::bessel_k1;

//! Lévy triplets, jump-measure families and singularity-aware integration.

pub mod integrate;
pub mod measure;
pub mod triplet;

pub use integrate::{levy_integral, levy_integral_complex, Region};
pub use measure::{q_weight, scaled_expm1, CompoundPoisson, Cgmy, DensityRatio, LevyMeasure, Nig, Sides, TruncExp};
pub use triplet::{
    char_exponent, char_exponent_quadrature, is_monotone, modified_second_characteristic, truncation, LevyTriplet,
    Monotonicity,
};

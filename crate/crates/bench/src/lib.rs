//! Fixture models shared by the benchmarks.

use levy_emm::{LevyMeasure, LevyTriplet};

/// `(label, triplet)` pairs covering closed-form and quadrature-backed families.
pub fn fixtures() -> Vec<(&'static str, LevyTriplet)> {
    vec![
        ("nig", LevyTriplet::nig(2.0, -0.5, 1.0, 0.1).unwrap()),
        ("cgmy", LevyTriplet::new(0.0, 0.0, LevyMeasure::cgmy(1.0, 3.0, 4.0, 0.5).unwrap()).unwrap()),
        ("trunc_exp", LevyTriplet::new(-1.0, 1.0, LevyMeasure::trunc_exp_n(4.0).unwrap()).unwrap()),
    ]
}

//! Sequences of Lévy models, numeric checks of the convergence conditions
//! on their characteristics, regime classification and price-trajectory
//! experiments.
//!
//! Finite index schedules stand in for `n → ∞` and a finite battery of test
//! functions stands in for all bounded continuous functions, so every
//! verdict is evidence only.

mod experiment;
mod hypotheses;
mod regime;
mod sequence;

pub use experiment::{
    run_convergence_experiment, stage_seed, ConvergenceReport, LimitMeasure, PredictedLimit, TrajectoryPoint, GAP_BIAS,
    GAP_SE,
};
pub use hypotheses::{check_hypotheses, ConditionTrace, HypothesisReport, TAIL_CUTOFFS};
pub use regime::{
    classify_regime, extrapolate, RegimeClassification, RegimeTag, DEAD_BAND, DIVERGENCE_RATIO, JUMP_CONFIDENCE,
    JUMP_THRESHOLD,
};
pub use sequence::{builtin_sequence, CgmyParams, Generator, ModelSequence, SequenceTag, DEFAULT_SCHEDULE};

/// Label attached to every report.
pub const EVIDENCE_NOTE: &str = "evidence, not proof: finite schedule and finite test battery";

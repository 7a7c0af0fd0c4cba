use crate::convergence_lab::sequence::ModelSequence;
use crate::convergence_lab::EVIDENCE_NOTE;
use crate::error::Result;
use crate::levy_core::{levy_integral, truncation, LevyTriplet, Region};
use crate::quad::IntegrationConfig;

/// Indicator cutoffs of the tail test functions.
pub const TAIL_CUTOFFS: [f64; 3] = [0.1, 0.5, 1.0];

/// One characteristic evaluated along the schedule and at the limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionTrace {
    pub id: String,
    /// Excluded from verdicts: the function is not `o(x²)` at 0.
    pub control: bool,
    /// `(n, value)`; an `Err` holds the failure message of that cell.
    pub values: Vec<(u32, std::result::Result<f64, String>)>,
    pub limit: std::result::Result<f64, String>,
}

impl ConditionTrace {
    /// `|value_n − limit|` per index; `None` where a cell failed.
    pub fn deviations(&self) -> Vec<(u32, Option<f64>)> {
        self.values
            .iter()
            .map(|(n, v)| {
                let d = match (v, &self.limit) {
                    (Ok(a), Ok(b)) => Some((a - b).abs()),
                    _ => None,
                };
                (*n, d)
            })
            .collect()
    }

    /// Deviation at the largest scheduled index.
    pub fn final_deviation(&self) -> Option<f64> {
        self.deviations().last().and_then(|d| d.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub sequence: String,
    pub schedule: Vec<u32>,
    pub conditions: Vec<ConditionTrace>,
    pub note: &'static str,
}

impl HypothesisReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionTrace> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

type Probe = Box<dyn Fn(&LevyTriplet, &IntegrationConfig) -> Result<f64> + Send + Sync>;

fn battery() -> Vec<(String, bool, Probe)> {
    let mut out: Vec<(String, bool, Probe)> = vec![
        ("drift".into(), false, Box::new(|t: &LevyTriplet, _: &IntegrationConfig| Ok(t.b() - t.r()))),
        (
            "diffusion_plus_small_jumps".into(),
            false,
            Box::new(|t: &LevyTriplet, cfg: &IntegrationConfig| {
                Ok(t.c() + levy_integral(t.nu(), |x| truncation(x).powi(2), Region::AbsLe(1.0), cfg)?)
            }),
        ),
        (
            "f_cubic".into(),
            false,
            Box::new(|t: &LevyTriplet, cfg: &IntegrationConfig| {
                levy_integral(t.nu(), |x| x.signum() * x.abs().powi(3).min(1.0), Region::Full, cfg)
            }),
        ),
        (
            "f_shifted_abs".into(),
            false,
            Box::new(|t: &LevyTriplet, cfg: &IntegrationConfig| {
                levy_integral(t.nu(), |x| (x.abs() - 0.5).clamp(0.0, 1.0), Region::Full, cfg)
            }),
        ),
        (
            "f_one_minus_cos".into(),
            true,
            Box::new(|t: &LevyTriplet, cfg: &IntegrationConfig| {
                levy_integral(t.nu(), |x| 2.0 * (0.5 * x.abs().min(1.0)).sin().powi(2), Region::Full, cfg)
            }),
        ),
    ];
    for eps in TAIL_CUTOFFS {
        out.push((
            format!("f_tail_{eps}"),
            false,
            Box::new(move |t: &LevyTriplet, cfg: &IntegrationConfig| levy_integral(t.nu(), |_| 1.0, Region::AbsGe(eps), cfg)),
        ));
    }
    out
}

/// Evaluate drift, `c + ∫h²ν` and the test-function battery along the
/// schedule and at the limit.
///
/// The finitely many indices and test functions give evidence, not proof,
/// of the convergence of characteristics. A failing cell is recorded in the
/// trace instead of aborting the report.
pub fn check_hypotheses(seq: &ModelSequence) -> HypothesisReport {
    let cfg = IntegrationConfig::default();
    let triplets: Vec<(u32, std::result::Result<LevyTriplet, String>)> =
        seq.schedule().iter().map(|&n| (n, seq.triplet(n).map_err(|e| e.to_string()))).collect();
    let conditions = battery()
        .into_iter()
        .map(|(id, control, probe)| {
            let values = triplets
                .iter()
                .map(|(n, t)| {
                    let v = match t {
                        Ok(t) => probe(t, &cfg).map_err(|e| e.to_string()),
                        Err(e) => Err(e.clone()),
                    };
                    (*n, v)
                })
                .collect();
            let limit = probe(seq.limit(), &cfg).map_err(|e| e.to_string());
            ConditionTrace { id, control, values, limit }
        })
        .collect();
    HypothesisReport { sequence: seq.name().to_string(), schedule: seq.schedule().to_vec(), conditions, note: EVIDENCE_NOTE }
}

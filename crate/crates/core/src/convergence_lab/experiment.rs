use num_complex::Complex64;

use crate::convergence_lab::regime::{classify_regime, extrapolate, RegimeClassification, RegimeTag};
use crate::convergence_lab::sequence::ModelSequence;
use crate::convergence_lab::EVIDENCE_NOTE;
use crate::error::{Error, Result};
use crate::levy_core::{char_exponent, LevyTriplet};
use crate::measure_change::{
    apply_girsanov, solve_esscher, solve_qopt, GirsanovSpec, MeasureKind, MeasureSolution, SolutionStatus,
};
use crate::pricing::{
    price_fourier_european, price_mc, FourierConfig, McConfig, MeasureId, PayoffKind, PayoffSpec, PriceEstimate,
};

/// Standard errors allowed between a price and its predicted limit.
pub const GAP_SE: f64 = 3.0;
/// Relative model-bias allowance on top of the MC error.
pub const GAP_BIAS: f64 = 0.01;

/// Measure under which the predicted limit price is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitMeasure {
    /// The limit model's own martingale measure for the rule.
    Martingale(GirsanovSpec),
    /// A non-martingale measure built from limiting Girsanov parameters.
    Star(GirsanovSpec),
    /// The limit model's original measure.
    Original,
}

impl LimitMeasure {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitMeasure::Martingale(_) => "limit_martingale",
            LimitMeasure::Star(_) => "limit_star",
            LimitMeasure::Original => "limit_original",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedLimit {
    pub measure: LimitMeasure,
    pub triplet: LevyTriplet,
    pub mc: PriceEstimate,
    /// Fourier value for European payoffs.
    pub fourier: Option<f64>,
    /// Girsanov `β` of the limiting measure.
    pub parameter: f64,
}

impl PredictedLimit {
    /// Reference value for gaps: Fourier when available, MC otherwise.
    pub fn reference(&self) -> (f64, f64) {
        match self.fourier {
            Some(v) => (v, 0.0),
            None => (self.mc.price, self.mc.std_err),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub n: u32,
    /// Solver status, or `"error"` when the stage failed.
    pub status: String,
    pub parameter: Option<f64>,
    pub estimate: Option<PriceEstimate>,
    pub gap: Option<f64>,
    /// `|gap| ≤ 3·SE + 1%·|limit|`.
    pub within: Option<bool>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub sequence: String,
    pub rule: MeasureKind,
    pub regime: RegimeClassification,
    pub limit: Option<PredictedLimit>,
    /// Price of the limit model under its own martingale measure for the rule.
    pub limit_model_price: Option<PriceEstimate>,
    pub points: Vec<TrajectoryPoint>,
    /// Corrected European-call limit `E*(S_T − K)⁺ + S0 − E*S̃_T` under a
    /// non-martingale limit measure; gaps of call trajectories refer to it.
    pub remark_call: Option<f64>,
    pub warnings: Vec<String>,
    pub note: &'static str,
}

impl ConvergenceReport {
    pub fn point(&self, n: u32) -> Option<&TrajectoryPoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

/// Seed of the pricing stage for index `n` (0 for the limit).
pub fn stage_seed(seed: u64, n: u64) -> u64 {
    seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn solve(t: &LevyTriplet, rule: MeasureKind) -> Result<MeasureSolution> {
    match rule {
        MeasureKind::MinimalEntropy => solve_esscher(t),
        MeasureKind::Qopt(q) => solve_qopt(t, q),
    }
}

fn within(price: &PriceEstimate, reference: (f64, f64)) -> (f64, bool) {
    let gap = price.price - reference.0;
    let se = (price.std_err.powi(2) + reference.1.powi(2)).sqrt();
    (gap, gap.abs() <= GAP_SE * se + GAP_BIAS * reference.0.abs())
}

fn require_bounded(payoff: &PayoffSpec, regime: RegimeTag) -> Result<()> {
    // European calls pass: their limit follows from the bounded put by parity.
    if payoff.is_bounded() || matches!(payoff.kind(), PayoffKind::EuropeanCall { .. }) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "regime {} predicts a limit under a non-martingale measure, which holds for bounded payoffs only; \
             pre-limit prices of unbounded payoffs need not be uniformly integrable, so the result does not extend",
            regime.as_str()
        )))
    }
}

struct Stage {
    solution: Result<MeasureSolution>,
    point: TrajectoryPoint,
}

fn run_stage(seq: &ModelSequence, n: u32, payoff: &PayoffSpec, rule: MeasureKind, cfg: &McConfig) -> Stage {
    let mut point =
        TrajectoryPoint { n, status: "error".into(), parameter: None, estimate: None, gap: None, within: None, message: None };
    let solution = seq.triplet(n).and_then(|t| solve(&t, rule).map(|s| (t, s)));
    let (t, sol) = match solution {
        Ok(v) => v,
        Err(e) => {
            point.message = Some(e.to_string());
            return Stage { solution: Err(e), point };
        }
    };
    point.status = sol.status.as_str().into();
    point.parameter = sol.parameter;
    let Some(g) = sol.girsanov() else {
        point.message = Some("no martingale measure for this index".into());
        return Stage { solution: Ok(sol), point };
    };
    let cfg = McConfig { seed: stage_seed(cfg.seed, n as u64), ..cfg.clone() };
    match apply_girsanov(&t, &g).and_then(|tq| price_mc(&tq, payoff, &cfg, MeasureId::Changed(g))) {
        Ok(p) => point.estimate = Some(p),
        Err(e) => point.message = Some(e.to_string()),
    }
    Stage { solution: Ok(sol), point }
}

fn price_limit(
    t: &LevyTriplet,
    measure: LimitMeasure,
    payoff: &PayoffSpec,
    cfg: &McConfig,
    parameter: f64,
) -> Result<PredictedLimit> {
    let (triplet, id) = match measure {
        LimitMeasure::Martingale(g) | LimitMeasure::Star(g) => (apply_girsanov(t, &g)?, MeasureId::Changed(g)),
        LimitMeasure::Original => (t.clone(), MeasureId::Original),
    };
    let cfg = McConfig { seed: stage_seed(cfg.seed, 0), ..cfg.clone() };
    let mc = price_mc(&triplet, payoff, &cfg, id)?;
    let fourier = match payoff.kind() {
        PayoffKind::EuropeanCall { .. } | PayoffKind::EuropeanPut { .. } => {
            price_fourier_european(&triplet, payoff, &FourierConfig::default()).ok()
        }
        _ => None,
    };
    Ok(PredictedLimit { measure, triplet, mc, fourier, parameter })
}

/// Price the payoff along the sequence under the rule's martingale measures
/// and compare with the limit predicted by the regime.
///
/// Per-index failures (no martingale measure, solver or pricing errors) are
/// recorded in the trajectory. Errors are returned only when the regime or
/// the predicted limit cannot be formed for the payoff.
pub fn run_convergence_experiment(
    seq: &ModelSequence,
    payoff: &PayoffSpec,
    rule: MeasureKind,
    cfg: &McConfig,
) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let regime = classify_regime(seq, rule)?;
    let stages: Vec<Stage> = seq.schedule().iter().map(|&n| run_stage(seq, n, payoff, rule, cfg)).collect();
    let mut warnings: Vec<String> = stages
        .iter()
        .filter(|s| s.point.estimate.is_none())
        .map(|s| format!("n={}: {}", s.point.n, s.point.message.as_deref().unwrap_or("skipped")))
        .collect();

    let limit_t = seq.limit();
    let own = solve(limit_t, rule).ok().and_then(|s| s.girsanov().map(|g| (s, g)));
    let own_price = own.as_ref().and_then(|(_, g)| {
        let tq = apply_girsanov(limit_t, g).ok()?;
        let cfg = McConfig { seed: stage_seed(cfg.seed, 0), ..cfg.clone() };
        price_mc(&tq, payoff, &cfg, MeasureId::Changed(*g)).ok()
    });

    let limit = match regime.tag {
        RegimeTag::LimitPositive | RegimeTag::IqFiniteContinuous => {
            let (sol, g) = own.clone().ok_or_else(|| {
                Error::Domain(format!("regime {} but the limit model has no martingale measure", regime.tag.as_str()))
            })?;
            Some(price_limit(limit_t, LimitMeasure::Martingale(g), payoff, cfg, sol.parameter.unwrap_or(0.0))?)
        }
        RegimeTag::Boundary => {
            warnings.push(regime.note.clone());
            let a = regime.alpha.unwrap_or(f64::NAN);
            if !a.is_finite() {
                return Err(Error::Domain("boundary regime with infinite α".into()));
            }
            Some(price_limit(limit_t, LimitMeasure::Martingale(GirsanovSpec::esscher(a)), payoff, cfg, a)?)
        }
        RegimeTag::LimitNegative => {
            require_bounded(payoff, regime.tag)?;
            let a = regime.alpha.unwrap_or(f64::NAN);
            if !a.is_finite() {
                return Err(Error::Domain("limit-negative regime with infinite α".into()));
            }
            Some(price_limit(limit_t, LimitMeasure::Star(GirsanovSpec::esscher(a)), payoff, cfg, a)?)
        }
        RegimeTag::IqJump => {
            require_bounded(payoff, regime.tag)?;
            let MeasureKind::Qopt(q) = rule else { unreachable!("q-optimal tag under entropy rule") };
            let betas: Vec<f64> = stages
                .iter()
                .filter_map(|s| s.solution.as_ref().ok().and_then(|s| s.parameter))
                .collect();
            if betas.is_empty() {
                return Err(Error::Domain("no pre-limit q-optimal parameter to extrapolate".into()));
            }
            let (beta, _) = extrapolate(&betas);
            Some(price_limit(limit_t, LimitMeasure::Star(GirsanovSpec::qopt(beta, q)), payoff, cfg, beta)?)
        }
        RegimeTag::IqInfinite => {
            require_bounded(payoff, regime.tag)?;
            Some(price_limit(limit_t, LimitMeasure::Original, payoff, cfg, 0.0)?)
        }
        RegimeTag::Unclassifiable => {
            warnings.push(format!("regime unclassifiable: {}", regime.note));
            None
        }
    };

    let remark_call = match (&limit, payoff.kind()) {
        (Some(l), PayoffKind::EuropeanCall { .. }) if !matches!(l.measure, LimitMeasure::Martingale(_)) => {
            char_exponent(&l.triplet, Complex64::new(1.0, 0.0)).ok().filter(|p| p.re.is_finite()).map(|p| {
                let fwd = l.triplet.s0() * (payoff.maturity() * (p.re - l.triplet.r())).exp();
                l.reference().0 + l.triplet.s0() - fwd
            })
        }
        _ => None,
    };
    if limit.as_ref().is_some_and(|l| !matches!(l.measure, LimitMeasure::Martingale(_)))
        && matches!(payoff.kind(), PayoffKind::EuropeanCall { .. })
    {
        warnings.push(match remark_call {
            Some(_) => "European call under a non-martingale limit: gaps are taken against the parity-corrected \
                        limit (remark_call, experimental); MC call prices along the sequence may miss tail mass"
                .into(),
            None => "European call under a non-martingale limit: E*[S_T] is infinite, no corrected limit".into(),
        });
    }

    let mut points: Vec<TrajectoryPoint> = stages.into_iter().map(|s| s.point).collect();
    if let Some(l) = &limit {
        let reference = match remark_call {
            Some(v) => (v, l.reference().1),
            None => l.reference(),
        };
        for p in &mut points {
            if let Some(e) = &p.estimate {
                let (gap, ok) = within(e, reference);
                p.gap = Some(gap);
                p.within = Some(ok);
            }
        }
    }

    Ok(ConvergenceReport {
        sequence: seq.name().to_string(),
        rule,
        regime,
        limit,
        limit_model_price: own_price,
        points,
        remark_call,
        warnings,
        note: EVIDENCE_NOTE,
    })
}

impl TrajectoryPoint {
    pub fn solved(&self) -> bool {
        self.status == SolutionStatus::EquivalentMartingale.as_str()
            || self.status == SolutionStatus::AbsolutelyContinuous.as_str()
            || self.status == SolutionStatus::Boundary.as_str()
    }
}

use crate::convergence_lab::sequence::ModelSequence;
use crate::error::{Error, Result};
use crate::measure_change::{domain_alpha, i_q, psi_hat_prime, MeasureKind, QParams};

/// `|ψ̂′(α⁻) − r|` below this is the boundary case.
pub const DEAD_BAND: f64 = 1e-6;
/// Smallest tail-integral jump `a` reported as a jump.
pub const JUMP_THRESHOLD: f64 = 1e-6;
/// A jump estimate must exceed this multiple of its extrapolation error.
pub const JUMP_CONFIDENCE: f64 = 10.0;
/// Doubling-ratio of increments at or above which `I_n` is read as divergent.
pub const DIVERGENCE_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    LimitPositive,
    Boundary,
    LimitNegative,
    IqFiniteContinuous,
    IqJump,
    IqInfinite,
    Unclassifiable,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::LimitPositive => "limit-positive",
            RegimeTag::Boundary => "boundary",
            RegimeTag::LimitNegative => "limit-negative",
            RegimeTag::IqFiniteContinuous => "Iq-finite-continuous",
            RegimeTag::IqJump => "Iq-jump",
            RegimeTag::IqInfinite => "Iq-infinite",
            RegimeTag::Unclassifiable => "unclassifiable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeClassification {
    pub rule: MeasureKind,
    pub tag: RegimeTag,
    /// Tilt boundary used for the probes (entropy rule).
    pub alpha: Option<f64>,
    /// `(u, ψ̂′(u) − r)` of the limit, in increasing `u`.
    pub probes: Vec<(f64, f64)>,
    /// Fatou value `ψ̂′(α) − r` (`+∞` if the integral diverges).
    pub limit_derivative: Option<f64>,
    /// `(n, I_n(q))` (q-optimal rule).
    pub iq_trajectory: Vec<(u32, f64)>,
    /// `I(q)` of the limit.
    pub iq_limit: Option<f64>,
    /// Estimated `lim I_n(q) − I(q)`.
    pub jump: Option<f64>,
    pub note: String,
}

/// Limit estimate of a sequence sampled on a doubling schedule, with an
/// error estimate.
///
/// Aitken's Δ² on the last three terms when the increments shrink
/// geometrically; otherwise the last term with the last increment as error.
pub fn extrapolate(xs: &[f64]) -> (f64, f64) {
    match xs.len() {
        0 => (f64::NAN, f64::INFINITY),
        1 => (xs[0], f64::INFINITY),
        2 => (xs[1], (xs[1] - xs[0]).abs()),
        k => {
            let (a, b, c) = (xs[k - 3], xs[k - 2], xs[k - 1]);
            let (d1, d2) = (b - a, c - b);
            let scale = 1e-12 * (1.0 + c.abs());
            if d2.abs() <= scale {
                return (c, d2.abs());
            }
            let rho = d2 / d1;
            if d1.abs() <= scale || !(rho.abs() < 1.0) {
                return (c, d2.abs());
            }
            let est = c + d2 * rho / (1.0 - rho);
            (est, (est - c).abs())
        }
    }
}

/// Decide the regime of `seq` under `rule`; see the module constants for
/// the thresholds.
pub fn classify_regime(seq: &ModelSequence, rule: MeasureKind) -> Result<RegimeClassification> {
    match rule {
        MeasureKind::MinimalEntropy => classify_entropy(seq),
        MeasureKind::Qopt(q) => classify_qopt(seq, q),
    }
}

fn blank(rule: MeasureKind) -> RegimeClassification {
    RegimeClassification {
        rule,
        tag: RegimeTag::Unclassifiable,
        alpha: None,
        probes: Vec::new(),
        limit_derivative: None,
        iq_trajectory: Vec::new(),
        iq_limit: None,
        jump: None,
        note: String::new(),
    }
}

fn sign_tag(v: f64) -> RegimeTag {
    if v > DEAD_BAND {
        RegimeTag::LimitPositive
    } else if v < -DEAD_BAND {
        RegimeTag::LimitNegative
    } else {
        RegimeTag::Boundary
    }
}

fn classify_entropy(seq: &ModelSequence) -> Result<RegimeClassification> {
    let limit = seq.limit();
    let mut out = blank(MeasureKind::MinimalEntropy);
    let mut alpha = domain_alpha(limit);
    for &n in seq.schedule() {
        alpha = alpha.min(domain_alpha(&seq.triplet(n)?));
    }
    out.alpha = Some(alpha);
    let d = |u: f64| -> Result<f64> {
        match psi_hat_prime(limit, u) {
            Ok(v) => Ok(v - limit.r()),
            Err(Error::Divergent { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let us: Vec<f64> = if alpha.is_finite() {
        (2..=8).map(|k| alpha - 10f64.powi(-k)).collect()
    } else {
        (0..=6).map(|k| 10f64.powi(k)).collect()
    };
    for u in us {
        out.probes.push((u, d(u)?));
    }
    if out.probes.windows(2).any(|w| w[1].1 < w[0].1 - DEAD_BAND) {
        out.note = "probes of ψ̂′ are not increasing; numerical failure".into();
        return Ok(out);
    }
    let last = out.probes.last().map(|p| p.1).unwrap_or(f64::NAN);
    let value = if alpha.is_finite() {
        let v = d(alpha)?;
        out.limit_derivative = Some(v);
        v
    } else {
        last
    };
    out.tag = sign_tag(value);
    out.note = match out.tag {
        RegimeTag::Boundary => "boundary case: convergence only along a subsequence".into(),
        _ => String::new(),
    };
    Ok(out)
}

fn classify_qopt(seq: &ModelSequence, q: QParams) -> Result<RegimeClassification> {
    let mut out = blank(MeasureKind::Qopt(q));
    for &n in seq.schedule() {
        out.iq_trajectory.push((n, i_q(&seq.triplet(n)?, q)));
    }
    let iq = i_q(seq.limit(), q);
    out.iq_limit = Some(iq);
    let traj: Vec<f64> = out.iq_trajectory.iter().map(|p| p.1).collect();
    if traj.iter().any(|v| v.is_nan()) || iq.is_nan() {
        out.note = "tail integral evaluation failed".into();
        return Ok(out);
    }
    if iq == f64::INFINITY {
        // lim inf I_n ≥ I(q) = ∞
        out.tag = RegimeTag::IqInfinite;
        return Ok(out);
    }
    if traj.last() == Some(&f64::INFINITY) {
        out.tag = RegimeTag::IqInfinite;
        out.note = "I_n(q) infinite at the largest index".into();
        return Ok(out);
    }
    let gaps: Vec<f64> = traj.iter().map(|v| v - iq).collect();
    let inc: Vec<f64> = gaps.windows(2).map(|w| w[1] - w[0]).collect();
    let tol = 1e-9 * (1.0 + iq.abs());
    let tail: Vec<f64> = inc.iter().rev().take(3).copied().collect();
    if tail.len() >= 2 && tail.windows(2).all(|w| w[0] * w[1] < 0.0) && tail.iter().all(|d| d.abs() > tol) {
        out.note = "oscillating I_n(q) trajectory".into();
        return Ok(out);
    }
    if tail.len() >= 2 && tail[0] > tol && tail[1] > tol && tail[0] >= DIVERGENCE_RATIO * tail[1] {
        out.tag = RegimeTag::IqInfinite;
        out.note = "increments of I_n(q) do not shrink".into();
        return Ok(out);
    }
    let (a, err) = extrapolate(&gaps);
    out.jump = Some(a);
    out.tag = if a > JUMP_THRESHOLD && a > JUMP_CONFIDENCE * err {
        RegimeTag::IqJump
    } else if a < -JUMP_THRESHOLD && -a > JUMP_CONFIDENCE * err {
        out.note = "lim I_n(q) below I(q)".into();
        RegimeTag::Unclassifiable
    } else {
        RegimeTag::IqFiniteContinuous
    };
    Ok(out)
}

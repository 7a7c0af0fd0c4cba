//! Girsanov transforms of Lévy triplets and the two measure-selection rules:
//! minimal entropy (Esscher) and q-optimal.

use crate::error::{Error, Result};
use crate::levy_core::integrate::{exp_m1_m_lin, integrate_raw, levy_integral, Region};
use crate::levy_core::{is_monotone, q_weight, scaled_expm1, truncation, DensityRatio, LevyMeasure, LevyTriplet, Monotonicity};
use crate::quad::IntegrationConfig;
use crate::roots::brent;

/// Residual tolerance for both solvers.
pub const SOLVER_TOL: f64 = 1e-10;
/// `|ψ̂′(α)|` below this is the boundary case `θ = α`.
pub const BOUNDARY_TOL: f64 = 1e-8;

fn solver_cfg() -> IntegrationConfig {
    IntegrationConfig { abs_tol: 1e-12, rel_tol: 1e-11, ..IntegrationConfig::default() }
}

/// The exponent `q > 1` of the q-optimal criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
}

impl QParams {
    pub fn new(q: f64) -> Result<Self> {
        if q > 1.0 && q.is_finite() {
            Ok(QParams { q })
        } else {
            Err(Error::InvalidParameter(format!("q>1 required, got {q}")))
        }
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    /// `q/(q−1)`, the tail exponent in `I(q)`.
    pub fn tail_exponent(&self) -> f64 {
        self.q / (self.q - 1.0)
    }
}

/// Girsanov parameters `(β, Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovSpec {
    pub beta: f64,
    pub ratio: DensityRatio,
}

impl GirsanovSpec {
    pub fn identity() -> Self {
        GirsanovSpec { beta: 0.0, ratio: DensityRatio::Identity }
    }
    /// Minimal-entropy change: `β = θ`, `Y = e^{θ(eˣ−1)}`.
    pub fn esscher(theta: f64) -> Self {
        GirsanovSpec { beta: theta, ratio: DensityRatio::Esscher { theta } }
    }
    /// q-optimal change: `β = u`, `Y = Y_u`.
    pub fn qopt(u: f64, q: QParams) -> Self {
        GirsanovSpec { beta: u, ratio: DensityRatio::Qopt { u, q: q.q } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    MinimalEntropy,
    Qopt(QParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionStatus {
    EquivalentMartingale,
    /// Martingale measure exists but `Y` vanishes on part of the support.
    AbsolutelyContinuous,
    /// `θ = α < ∞` with `ψ̂′(α) = 0`.
    Boundary,
    NoSolution,
}

impl SolutionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionStatus::EquivalentMartingale => "equivalent_martingale",
            SolutionStatus::AbsolutelyContinuous => "absolutely_continuous",
            SolutionStatus::Boundary => "boundary",
            SolutionStatus::NoSolution => "no_solution",
        }
    }
}

/// Outcome of a measure-selection solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSolution {
    pub kind: MeasureKind,
    pub status: SolutionStatus,
    /// θ (entropy) or β (q-optimal); `None` when no solution exists.
    pub parameter: Option<f64>,
    /// Defining-equation residual at `parameter` (at α for entropy no-solution).
    pub residual: f64,
    /// Sup of the finiteness domain (entropy rule); `NaN` for q-optimal.
    pub alpha: f64,
    /// `ψ̂′(α)` when it was evaluated.
    pub limit_derivative: Option<f64>,
    /// `I(q)` (q-optimal rule only).
    pub i_q: Option<f64>,
}

impl MeasureSolution {
    /// Girsanov parameters of the solved measure, if any.
    pub fn girsanov(&self) -> Option<GirsanovSpec> {
        let p = self.parameter?;
        Some(match self.kind {
            MeasureKind::MinimalEntropy => GirsanovSpec::esscher(p),
            MeasureKind::Qopt(q) => GirsanovSpec::qopt(p, q),
        })
    }
}

// Split integrand: stable Taylor-type form on |x| < 1, log-space form on the tails.
fn integrate_split(
    nu: &LevyMeasure,
    near: impl Fn(f64) -> f64,
    far_log: impl Fn(f64) -> f64,
    far_lin: impl Fn(f64) -> f64,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let g = |x: f64, ld: f64| {
        if x.abs() < 1.0 {
            let v = near(x);
            if v == 0.0 {
                0.0
            } else {
                v * ld.exp()
            }
        } else {
            let a = far_log(x);
            let pos = if a == f64::NEG_INFINITY { 0.0 } else { (a + ld).exp() };
            let lin = far_lin(x);
            if lin == 0.0 {
                pos
            } else {
                pos - lin * ld.exp()
            }
        }
    };
    integrate_raw(nu, &g, Region::Full, cfg)
}

fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `ψ̂(u) = (b + c/2)u + cu²/2 + ∫(e^{u(eˣ−1)} − 1 − u h(x)) ν(dx)`.
pub fn psi_hat(t: &LevyTriplet, u: f64) -> Result<f64> {
    psi_hat_with(t, u, &solver_cfg())
}

fn psi_hat_with(t: &LevyTriplet, u: f64, cfg: &IntegrationConfig) -> Result<f64> {
    if u == 0.0 {
        return Ok(0.0);
    }
    let near = |x: f64| {
        let w = scaled_expm1(u, x);
        exp_m1_m_lin(w) + u * exp_m1_m_lin(x) + u * (x - truncation(x))
    };
    let far_log = |x: f64| scaled_expm1(u, x);
    let far_lin = |x: f64| 1.0 + u * truncation(x);
    let j = integrate_split(t.nu(), near, far_log, far_lin, cfg)?;
    Ok((t.b() + 0.5 * t.c()) * u + 0.5 * t.c() * u * u + j)
}

/// `ψ̂′(u) = b + (½ + u)c + ∫((eˣ−1)e^{u(eˣ−1)} − h(x)) ν(dx)`.
pub fn psi_hat_prime(t: &LevyTriplet, u: f64) -> Result<f64> {
    psi_hat_prime_with(t, u, &solver_cfg())
}

fn psi_hat_prime_with(t: &LevyTriplet, u: f64, cfg: &IntegrationConfig) -> Result<f64> {
    let near = |x: f64| {
        let e = x.exp_m1();
        e * (u * e).exp_m1() + exp_m1_m_lin(x) + (x - truncation(x))
    };
    let far_log = |x: f64| {
        if x > 0.0 {
            ln_expm1(x) + scaled_expm1(u, x)
        } else {
            f64::NEG_INFINITY
        }
    };
    let far_lin = |x: f64| {
        // negative side: (eˣ−1)e^{u(eˣ−1)} is bounded, keep it linear
        if x < 0.0 {
            -(x.exp_m1() * (scaled_expm1(u, x)).exp()) + truncation(x)
        } else {
            truncation(x)
        }
    };
    let j = integrate_split(t.nu(), near, far_log, far_lin, cfg)?;
    Ok(t.b() + (0.5 + u) * t.c() + j)
}

/// `α = sup{u : ∫_{x>1} e^{u(eˣ−1)} ν(dx) < ∞}`.
///
/// For `u > 0` the factor grows double-exponentially, which no tail of the
/// supported families (at most exponential decay) can offset, so `α = 0` for
/// an unbounded right tail and `+∞` for a bounded one; an Esscher weight
/// `e^{θ(eˣ−1)}` shifts it to `α − θ`. This is decided structurally: a
/// numerical divergence test cannot see the blow-up for small `u`, which
/// only starts near `x ≈ ln(1/u)` where the density has already underflowed.
pub fn domain_alpha(t: &LevyTriplet) -> f64 {
    measure_alpha(t.nu())
}

fn measure_alpha(nu: &LevyMeasure) -> f64 {
    match nu.support() {
        None => return f64::INFINITY,
        Some((_, hi)) if hi.is_finite() => return f64::INFINITY,
        _ => {}
    }
    match nu {
        LevyMeasure::Sum(parts) => parts.iter().map(measure_alpha).fold(f64::INFINITY, f64::min),
        LevyMeasure::Weighted { base, ratio: DensityRatio::Esscher { theta } } => measure_alpha(base) - theta,
        LevyMeasure::Weighted { base, .. } => measure_alpha(base),
        _ => 0.0,
    }
}

fn shifted(t: &LevyTriplet) -> Result<LevyTriplet> {
    t.with_drift(t.b() - t.r())?.with_rate(0.0)
}

fn require_non_monotone(t: &LevyTriplet) -> Result<()> {
    match is_monotone(t) {
        Monotonicity::NotMonotone => Ok(()),
        m => Err(Error::Monotone(m)),
    }
}

// Divergence of ψ̂′ or F can only come from the right tail, where the integrand is positive.
fn or_pos_inf(v: Result<f64>) -> Result<f64> {
    match v {
        Err(e) if e.is_divergent() => Ok(f64::INFINITY),
        other => other,
    }
}

// Shrink `hi` toward `lo` until the function is finite there, keeping the sign change.
fn finite_upper<F: Fn(f64) -> Result<f64>>(f: &F, lo: f64, mut hi: f64, mut fhi: f64) -> Result<(f64, f64, f64)> {
    let mut lo = lo;
    for _ in 0..200 {
        if fhi.is_finite() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v >= 0.0 {
            hi = mid;
            fhi = v;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi, fhi))
}

/// Minimal-entropy (Esscher) martingale measure: root of `ψ̂′(θ) = r`.
pub fn solve_esscher(t: &LevyTriplet) -> Result<MeasureSolution> {
    require_non_monotone(t)?;
    let ts = shifted(t)?;
    let cfg = solver_cfg();
    let d = |u: f64| or_pos_inf(psi_hat_prime_with(&ts, u, &cfg));
    let alpha = domain_alpha(&ts);
    let base = MeasureSolution {
        kind: MeasureKind::MinimalEntropy,
        status: SolutionStatus::NoSolution,
        parameter: None,
        residual: f64::NAN,
        alpha,
        limit_derivative: None,
        i_q: None,
    };

    let mut hi = if alpha.is_finite() { (alpha - 1e-6).min(1.0) } else { 1.0 };
    let mut lo = (-1.0f64).min(hi - 1.0);
    let mut fhi = d(hi)?;

    if fhi < 0.0 {
        // Approach α (or +∞) from below.
        let candidates: Vec<f64> = if alpha.is_finite() {
            // roots can sit far closer to α than 1e-15 (θ ≈ −1e-150 happens)
            (0..=15)
                .chain((20..=300).step_by(5))
                .map(|k| alpha - 10f64.powi(-k))
                .filter(|&u| u > hi && u < alpha)
                .collect()
        } else {
            (1..=60).map(|k| 2f64.powi(k)).filter(|&u| u > hi).collect()
        };
        let mut found = false;
        for u in candidates {
            let v = d(u)?;
            lo = hi;
            hi = u;
            fhi = v;
            if v >= 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            if !alpha.is_finite() {
                return Err(Error::Bracket { lo, hi });
            }
            // Fatou extension at α (+∞ when the integral diverges there).
            let la = d(alpha)?;
            if la.abs() < BOUNDARY_TOL {
                return Ok(MeasureSolution {
                    status: SolutionStatus::Boundary,
                    parameter: Some(alpha),
                    residual: la,
                    limit_derivative: Some(la),
                    ..base
                });
            }
            if la < 0.0 {
                return Ok(MeasureSolution { residual: la, limit_derivative: Some(la), ..base });
            }
            return Err(Error::Domain(format!(
                "ψ̂′ changes sign within {:e} of α = {alpha}; root not resolvable in f64",
                alpha - hi
            )));
        }
    }

    let mut flo = d(lo)?;
    let mut n = 0;
    while flo > 0.0 {
        n += 1;
        if n > 60 {
            return Err(Error::Bracket { lo, hi });
        }
        hi = lo;
        fhi = flo;
        lo *= 2.0;
        flo = d(lo)?;
    }
    let (lo2, hi2, fhi2) = finite_upper(&d, lo, hi, fhi)?;
    if lo2 != lo {
        lo = lo2;
        flo = d(lo)?;
    }
    let (hi, fhi) = (hi2, fhi2);

    let theta = if alpha.is_finite() {
        // Work in s = −ln(α − u) so the solver can approach α closely.
        let to_s = |u: f64| -(alpha - u).ln();
        let to_u = |s: f64| alpha - (-s).exp();
        let s = brent(|s| d(to_u(s)), to_s(lo), to_s(hi), flo, fhi, 1e-15, 0.1 * SOLVER_TOL)?;
        to_u(s)
    } else {
        brent(d, lo, hi, flo, fhi, 1e-15, 0.1 * SOLVER_TOL)?
    };
    let residual = d(theta)?;
    Ok(MeasureSolution {
        status: SolutionStatus::EquivalentMartingale,
        parameter: Some(theta),
        residual,
        ..base
    })
}

/// `Y_u(x)` of the q-optimal family.
pub fn q_y(u: f64, q: QParams, x: f64) -> f64 {
    q_weight(u, q.q, x)
}

/// `F(u) = b − r + c/2 + cu + ∫((eˣ−1)Y_u(x) − h(x)) ν(dx)`.
pub fn q_f(t: &LevyTriplet, u: f64, q: QParams) -> Result<f64> {
    q_f_with(t, u, q, &solver_cfg())
}

fn q_f_with(t: &LevyTriplet, u: f64, q: QParams, cfg: &IntegrationConfig) -> Result<f64> {
    let ratio = DensityRatio::Qopt { u, q: q.q };
    let near = |x: f64| {
        let e = x.exp_m1();
        e * ratio.eval_minus_one(x) + exp_m1_m_lin(x) + (x - truncation(x))
    };
    let far_log = |x: f64| if x > 0.0 { ln_expm1(x) + ratio.ln_eval(x) } else { f64::NEG_INFINITY };
    let far_lin = |x: f64| {
        if x < 0.0 {
            -(x.exp_m1() * ratio.eval(x)) + truncation(x)
        } else {
            truncation(x)
        }
    };
    let j = integrate_split(t.nu(), near, far_log, far_lin, cfg)?;
    Ok(t.b() - t.r() + 0.5 * t.c() + t.c() * u + j)
}

/// `I(q) = ∫_{x≥1} e^{qx/(q−1)} ν(dx)`; `+∞` when divergent.
pub fn i_q(t: &LevyTriplet, q: QParams) -> f64 {
    let k = q.tail_exponent();
    let g = |x: f64, ld: f64| (k * x + ld).exp();
    match integrate_raw(t.nu(), &g, Region::Ge(1.0), &IntegrationConfig::default()) {
        Ok(v) => v,
        Err(Error::Divergent { .. }) => f64::INFINITY,
        Err(Error::Integration { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

/// q-optimal martingale measure: root of `F(u) = 0`.
pub fn solve_qopt(t: &LevyTriplet, q: QParams) -> Result<MeasureSolution> {
    require_non_monotone(t)?;
    let iq = i_q(t, q);
    let base = MeasureSolution {
        kind: MeasureKind::Qopt(q),
        status: SolutionStatus::NoSolution,
        parameter: None,
        residual: f64::NAN,
        alpha: f64::NAN,
        limit_derivative: None,
        i_q: Some(iq),
    };
    if !iq.is_finite() {
        return Ok(base);
    }
    let cfg = solver_cfg();
    let f = |u: f64| or_pos_inf(q_f_with(t, u, q, &cfg));
    let (mut lo, mut hi) = (-1.0, 1.0);
    let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
    let mut n = 0;
    while flo > 0.0 {
        n += 1;
        if n > 60 {
            return Err(Error::Bracket { lo, hi });
        }
        hi = lo;
        fhi = flo;
        lo *= 2.0;
        flo = f(lo)?;
    }
    n = 0;
    while fhi < 0.0 {
        n += 1;
        if n > 60 {
            return Err(Error::Bracket { lo, hi });
        }
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi)?;
    }
    let (lo2, hi, fhi) = finite_upper(&f, lo, hi, fhi)?;
    if lo2 != lo {
        lo = lo2;
        flo = f(lo)?;
    }
    let beta = brent(f, lo, hi, flo, fhi, 1e-15, 0.1 * SOLVER_TOL)?;
    let residual = f(beta)?;
    let status = if q_weight_positive(t.nu(), beta, q) {
        SolutionStatus::EquivalentMartingale
    } else {
        SolutionStatus::AbsolutelyContinuous
    };
    Ok(MeasureSolution { status, parameter: Some(beta), residual, ..base })
}

// Y_β > 0 at the support ends (±1e-9) and on a 64-point grid; atoms checked exactly.
fn q_weight_positive(nu: &LevyMeasure, beta: f64, q: QParams) -> bool {
    let Some((m, mm)) = nu.support() else { return true };
    let lo = if m.is_finite() { m + 1e-9 } else { -50.0 };
    let hi = if mm.is_finite() { mm - 1e-9 } else { 50.0 };
    let mut pts: Vec<f64> = vec![lo, hi];
    for i in 0..64 {
        pts.push(lo + (hi - lo) * i as f64 / 63.0);
    }
    pts.extend(nu.atoms().into_iter().map(|a| a.0));
    pts.iter().all(|&x| x == 0.0 || q_y(beta, q, x) > 0.0)
}

/// Characteristics under the changed measure: `b + βc + ∫h(Y−1)ν`, `c`, `Y·ν`.
pub fn apply_girsanov(t: &LevyTriplet, g: &GirsanovSpec) -> Result<LevyTriplet> {
    if g.ratio.is_identity() && g.beta == 0.0 {
        return Ok(t.clone());
    }
    let cfg = solver_cfg();
    let ratio = g.ratio;
    let abs_corr = levy_integral(t.nu(), |x| (truncation(x) * ratio.eval_minus_one(x)).abs(), Region::AbsLe(1.0), &cfg)?;
    if !abs_corr.is_finite() {
        return Err(Error::InvalidParameter("∫|h(Y−1)|ν(dx) is infinite".into()));
    }
    let corr = levy_integral(t.nu(), |x| truncation(x) * ratio.eval_minus_one(x), Region::AbsLe(1.0), &cfg)?;
    let nu_q = LevyMeasure::weighted(t.nu().clone(), ratio)?;
    LevyTriplet::with_market(t.b() + g.beta * t.c() + corr, t.c(), nu_q, t.r(), t.s0())
}

/// `b + c/2 + ∫(eˣ − 1 − h(x)) ν(dx) − r`; zero iff `e^{−rt}S_t` is a martingale.
pub fn martingale_residual(t: &LevyTriplet) -> Result<f64> {
    let near = |x: f64| exp_m1_m_lin(x) + (x - truncation(x));
    let far_log = |x: f64| if x > 0.0 { ln_expm1(x) } else { f64::NEG_INFINITY };
    let far_lin = |x: f64| if x < 0.0 { -x.exp_m1() + truncation(x) } else { truncation(x) };
    let j = integrate_split(t.nu(), near, far_log, far_lin, &solver_cfg())?;
    Ok(t.b() + 0.5 * t.c() + j - t.r())
}

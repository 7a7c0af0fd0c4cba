use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::levy_core::integrate::{levy_integral, Region};
use crate::quad::{adaptive, IntegrationConfig};
use crate::special::bessel_k1_scaled;

/// Jump-density ratio `Y` of a structure-preserving measure change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityRatio {
    Identity,
    /// `Y(x) = exp(θ(eˣ − 1))`.
    Esscher { theta: f64 },
    /// `Y(x) = [1 + (q−1)u(eˣ−1)]^{1/(q−1)}`, clipped to 0 when the bracket is negative.
    Qopt { u: f64, q: f64 },
}

impl DensityRatio {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DensityRatio::Identity => 1.0,
            DensityRatio::Esscher { theta } => (scaled_expm1(theta, x)).exp(),
            DensityRatio::Qopt { u, q } => q_weight(u, q, x),
        }
    }

    /// `ln Y(x)`, `-∞` where `Y` vanishes.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match *self {
            DensityRatio::Identity => 0.0,
            DensityRatio::Esscher { theta } => scaled_expm1(theta, x),
            DensityRatio::Qopt { u, q } => {
                let k = (q - 1.0) * u;
                if x > 1.0 && k > 0.0 {
                    // 1 + k(eˣ−1) = eˣ(k + (1−k)e⁻ˣ), finite for huge x
                    return (x + (k + (1.0 - k) * (-x).exp()).ln()) / (q - 1.0);
                }
                let z = scaled_expm1(k, x);
                if z <= -1.0 {
                    f64::NEG_INFINITY
                } else {
                    z.ln_1p() / (q - 1.0)
                }
            }
        }
    }

    /// `Y(x) − 1`, accurate near `x = 0`.
    pub fn eval_minus_one(&self, x: f64) -> f64 {
        match *self {
            DensityRatio::Identity => 0.0,
            DensityRatio::Esscher { theta } => (scaled_expm1(theta, x)).exp_m1(),
            DensityRatio::Qopt { u, q } => {
                let z = scaled_expm1((q - 1.0) * u, x);
                if z < -1.0 {
                    -1.0
                } else if q == 2.0 {
                    z
                } else {
                    (z.ln_1p() / (q - 1.0)).exp_m1()
                }
            }
        }
    }

    /// Point where a q-weight hits zero, if any.
    pub fn zero_crossing(&self) -> Option<f64> {
        match *self {
            DensityRatio::Qopt { u, q } if u != 0.0 => {
                // 1 + (q−1)u(eˣ−1) = 0  ⇔  eˣ = 1 − 1/((q−1)u)
                let e = 1.0 - 1.0 / ((q - 1.0) * u);
                (e > 0.0).then(|| e.ln())
            }
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match *self {
            DensityRatio::Identity => true,
            DensityRatio::Esscher { theta } => theta == 0.0,
            DensityRatio::Qopt { u, .. } => u == 0.0,
        }
    }
}

/// `u·(eˣ − 1)`, with `0·∞` read as 0.
pub fn scaled_expm1(u: f64, x: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * x.exp_m1()
    }
}

/// The q-optimal weight `Y_u(x)`.
pub fn q_weight(u: f64, q: f64, x: f64) -> f64 {
    let z = scaled_expm1((q - 1.0) * u, x);
    if z < -1.0 {
        0.0
    } else if q == 2.0 {
        1.0 + z
    } else {
        (1.0 + z).powf(1.0 / (q - 1.0))
    }
}

/// Normal inverse Gaussian jump measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Nig {
    alpha: f64,
    beta: f64,
    delta: f64,
    trunc_mean: f64,
}

impl Nig {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    /// Principal-value `∫_{|x|≤1} x ν(dx)`; the drift shift between the
    /// location parameter μ and the triplet drift `b`.
    pub fn trunc_mean(&self) -> f64 {
        self.trunc_mean
    }
    pub fn gamma(&self) -> f64 {
        (self.alpha * self.alpha - self.beta * self.beta).max(0.0).sqrt()
    }

    fn ln_density(&self, x: f64) -> f64 {
        let ax = x.abs();
        let z = self.alpha * ax;
        let k = bessel_k1_scaled(z).unwrap_or(0.0);
        (self.alpha * self.delta / PI).ln() + self.beta * x - z + k.ln() - ax.ln()
    }
}

/// CGMY (tempered stable) jump measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Cgmy {
    c: f64,
    g: f64,
    m: f64,
    y: f64,
    tail_mean: f64,
}

impl Cgmy {
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    /// `∫_{|x|>1} x ν(dx)`.
    pub fn tail_mean(&self) -> f64 {
        self.tail_mean
    }

    fn ln_density(&self, x: f64) -> f64 {
        let ax = x.abs();
        let rate = if x < 0.0 { self.g } else { self.m };
        self.c.ln() - (self.y + 1.0) * ax.ln() - rate * ax
    }
}

/// Exponential density `scale·e^{−rate·x}` restricted to `[lo, hi] ⊂ (0, ∞]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncExp {
    scale: f64,
    rate: f64,
    lo: f64,
    hi: f64,
}

impl TruncExp {
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Finite sum of point masses `λ_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoisson {
    atoms: Vec<(f64, f64)>,
}

impl CompoundPoisson {
    /// `(intensity, atom)` pairs.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
    pub fn total_intensity(&self) -> f64 {
        self.atoms.iter().map(|a| a.0).sum()
    }
}

/// A Lévy measure ν on ℝ \ {0}.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    Zero,
    Nig(Nig),
    Cgmy(Cgmy),
    TruncExp(TruncExp),
    CompoundPoisson(CompoundPoisson),
    Sum(Vec<LevyMeasure>),
    /// `Y·ν` for a non-trivial density ratio `Y`.
    Weighted { base: Box<LevyMeasure>, ratio: DensityRatio },
}

/// Which side(s) of zero carry continuous mass, as `(lo, hi)` in |x|.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sides {
    pub neg: Option<(f64, f64)>,
    pub pos: Option<(f64, f64)>,
}

fn hull(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> Option<(f64, f64)> {
    match (a, b) {
        (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
        (x, None) => x,
        (None, y) => y,
    }
}

impl LevyMeasure {
    pub fn nig(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("NIG alpha must be > 0, got {alpha}")));
        }
        if !(beta.abs() <= alpha) {
            return Err(Error::InvalidParameter(format!("NIG requires |beta| <= alpha, got beta={beta}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("NIG delta must be > 0, got {delta}")));
        }
        // PV ∫_{|x|≤1} x ν = (αδ/π)∫₀¹ 2 sinh(βx) K₁(αx) dx; the integrand is bounded.
        let odd = |x: f64| {
            if x == 0.0 {
                return 2.0 * beta / alpha;
            }
            let z = alpha * x;
            2.0 * (beta * x).sinh() * bessel_k1_scaled(z).unwrap_or(0.0) * (-z).exp()
        };
        let (integral, _) = adaptive(&odd, 0.0, 1.0, 1e-15, 1e-13, 200)
            .map_err(|_| Error::Integration { estimate: f64::NAN, error_bound: f64::NAN })?;
        let nu = LevyMeasure::Nig(Nig { alpha, beta, delta, trunc_mean: alpha * delta / PI * integral });
        nu.check_integrability()?;
        Ok(nu)
    }

    pub fn cgmy(c: f64, g: f64, m: f64, y: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(g > 0.0 && g.is_finite()) || !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "CGMY requires C, G, M > 0 (got C={c}, G={g}, M={m})"
            )));
        }
        if !(y < 2.0 && y.is_finite()) {
            return Err(Error::InvalidParameter(format!("CGMY requires Y < 2, got {y}")));
        }
        let cfg = IntegrationConfig::default();
        let side = |rate: f64| -> Result<f64> {
            let f = |x: f64| c * (-y * x.ln() - rate * x).exp();
            crate::quad::integrate_half_line(&f, 1.0, f64::INFINITY, &[], &cfg)
                .map_err(|_| Error::Integration { estimate: f64::NAN, error_bound: f64::NAN })
        };
        let tail_mean = side(m)? - side(g)?;
        let nu = LevyMeasure::Cgmy(Cgmy { c, g, m, y, tail_mean });
        nu.check_integrability()?;
        Ok(nu)
    }

    pub fn trunc_exp(scale: f64, rate: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && rate.is_finite()) {
            return Err(Error::InvalidParameter("TruncExp needs finite scale > 0 and finite rate".into()));
        }
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!("TruncExp support must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if hi.is_infinite() && rate <= 0.0 {
            return Err(Error::InvalidParameter("unbounded TruncExp support needs rate > 0".into()));
        }
        Ok(LevyMeasure::TruncExp(TruncExp { scale, rate, lo, hi }))
    }

    /// `(1/n)·e^{−(2+1/n)x}` on `[n, 2n]`.
    pub fn trunc_exp_n(n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("TruncExp index must be > 0, got {n}")));
        }
        Self::trunc_exp(1.0 / n, 2.0 + 1.0 / n, n, 2.0 * n)
    }

    /// Point masses given as `(intensity, atom)` pairs.
    pub fn compound_poisson(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(lambda, x) in &atoms {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidParameter(format!("intensity must be finite and >= 0, got {lambda}")));
            }
            if !(x != 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!("atom must be finite and non-zero, got {x}")));
            }
        }
        let atoms: Vec<_> = atoms.into_iter().filter(|a| a.0 > 0.0).collect();
        if atoms.is_empty() {
            return Ok(LevyMeasure::Zero);
        }
        Ok(LevyMeasure::CompoundPoisson(CompoundPoisson { atoms }))
    }

    pub fn sum(parts: Vec<LevyMeasure>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                LevyMeasure::Zero => {}
                LevyMeasure::Sum(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => LevyMeasure::Zero,
            1 => flat.pop().unwrap(),
            _ => LevyMeasure::Sum(flat),
        }
    }

    /// `Y·ν`, checking that the result is still a Lévy measure.
    pub fn weighted(base: LevyMeasure, ratio: DensityRatio) -> Result<Self> {
        if ratio.is_identity() {
            return Ok(base);
        }
        let nu = match base {
            LevyMeasure::Zero => return Ok(LevyMeasure::Zero),
            LevyMeasure::CompoundPoisson(cp) => {
                let atoms = cp.atoms.iter().map(|&(l, x)| (l * ratio.eval(x), x)).collect();
                return LevyMeasure::compound_poisson(atoms);
            }
            base => LevyMeasure::Weighted { base: Box::new(base), ratio },
        };
        nu.check_integrability()?;
        Ok(nu)
    }

    fn check_integrability(&self) -> Result<()> {
        let cfg = IntegrationConfig::default();
        let v = levy_integral(self, |x| (x * x).min(1.0), Region::Full, &cfg).map_err(|e| match e {
            Error::Divergent { .. } => {
                Error::InvalidParameter("measure violates ∫(x²∧1)ν(dx) < ∞".into())
            }
            other => other,
        })?;
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter("measure violates ∫(x²∧1)ν(dx) < ∞".into()))
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            LevyMeasure::Zero => "zero",
            LevyMeasure::Nig(_) => "nig",
            LevyMeasure::Cgmy(_) => "cgmy",
            LevyMeasure::TruncExp(_) => "trunc_exp",
            LevyMeasure::CompoundPoisson(_) => "compound_poisson",
            LevyMeasure::Sum(_) => "sum",
            LevyMeasure::Weighted { .. } => "weighted",
        }
    }

    /// Log of the continuous density (−∞ off the support).
    pub fn ln_density(&self, x: f64) -> f64 {
        if x == 0.0 || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        match self {
            LevyMeasure::Zero | LevyMeasure::CompoundPoisson(_) => f64::NEG_INFINITY,
            LevyMeasure::Nig(n) => n.ln_density(x),
            LevyMeasure::Cgmy(c) => c.ln_density(x),
            LevyMeasure::TruncExp(t) => {
                if x >= t.lo && x <= t.hi {
                    t.scale.ln() - t.rate * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            LevyMeasure::Sum(parts) => {
                let lds: Vec<f64> = parts.iter().map(|p| p.ln_density(x)).collect();
                let mx = lds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if mx == f64::NEG_INFINITY {
                    return mx;
                }
                mx + lds.iter().map(|l| (l - mx).exp()).sum::<f64>().ln()
            }
            LevyMeasure::Weighted { base, ratio } => {
                let lb = base.ln_density(x);
                if lb == f64::NEG_INFINITY {
                    lb
                } else {
                    lb + ratio.ln_eval(x)
                }
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// Point masses `(atom, mass)` after weighting.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            LevyMeasure::CompoundPoisson(cp) => cp.atoms.iter().map(|&(l, x)| (x, l)).collect(),
            LevyMeasure::Sum(parts) => parts.iter().flat_map(|p| p.atoms()).collect(),
            LevyMeasure::Weighted { base, ratio } => base
                .atoms()
                .into_iter()
                .map(|(x, m)| (x, m * ratio.eval(x)))
                .filter(|a| a.1 > 0.0)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Continuous support on each side of zero.
    pub fn continuous_sides(&self) -> Sides {
        match self {
            LevyMeasure::Zero | LevyMeasure::CompoundPoisson(_) => Sides::default(),
            LevyMeasure::Nig(_) | LevyMeasure::Cgmy(_) => Sides {
                neg: Some((0.0, f64::INFINITY)),
                pos: Some((0.0, f64::INFINITY)),
            },
            LevyMeasure::TruncExp(t) => Sides { neg: None, pos: Some((t.lo, t.hi)) },
            LevyMeasure::Sum(parts) => parts.iter().fold(Sides::default(), |acc, p| {
                let s = p.continuous_sides();
                Sides { neg: hull(acc.neg, s.neg), pos: hull(acc.pos, s.pos) }
            }),
            LevyMeasure::Weighted { base, .. } => base.continuous_sides(),
        }
    }

    /// Signed points where the density (or a weight) is non-smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            LevyMeasure::TruncExp(t) => {
                let mut v = vec![t.lo];
                if t.hi.is_finite() {
                    v.push(t.hi);
                }
                v
            }
            LevyMeasure::Sum(parts) => parts.iter().flat_map(|p| p.breakpoints()).collect(),
            LevyMeasure::Weighted { base, ratio } => {
                let mut v = base.breakpoints();
                v.extend(ratio.zero_crossing());
                v
            }
            _ => Vec::new(),
        }
    }

    /// Smallest and largest points of the support (atoms included); `None` for the zero measure.
    pub fn support(&self) -> Option<(f64, f64)> {
        let sides = self.continuous_sides();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let Some((a, b)) = sides.neg {
            lo = lo.min(-b);
            hi = hi.max(-a);
        }
        if let Some((a, b)) = sides.pos {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for (x, _) in self.atoms() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn has_negative_mass(&self) -> bool {
        self.continuous_sides().neg.is_some() || self.atoms().iter().any(|a| a.0 < 0.0)
    }

    pub fn has_positive_mass(&self) -> bool {
        self.continuous_sides().pos.is_some() || self.atoms().iter().any(|a| a.0 > 0.0)
    }

    /// True when the density blows up at zero (infinite activity).
    pub fn is_singular_at_zero(&self) -> bool {
        match self {
            LevyMeasure::Nig(_) => true,
            LevyMeasure::Cgmy(c) => c.y > -1.0,
            LevyMeasure::Sum(parts) => parts.iter().any(|p| p.is_singular_at_zero()),
            LevyMeasure::Weighted { base, .. } => base.is_singular_at_zero(),
            _ => false,
        }
    }

    /// Flatten into summands, distributing any weight over sums.
    pub fn components(&self) -> Vec<LevyMeasure> {
        match self {
            LevyMeasure::Zero => Vec::new(),
            LevyMeasure::Sum(parts) => parts.iter().flat_map(|p| p.components()).collect(),
            LevyMeasure::Weighted { base, ratio } => base
                .components()
                .into_iter()
                .map(|c| match c {
                    LevyMeasure::CompoundPoisson(cp) => {
                        let atoms = cp.atoms.iter().map(|&(l, x)| (l * ratio.eval(x), x)).collect();
                        LevyMeasure::compound_poisson(atoms).unwrap_or(LevyMeasure::Zero)
                    }
                    other => LevyMeasure::Weighted { base: Box::new(other), ratio: *ratio },
                })
                .filter(|c| *c != LevyMeasure::Zero)
                .collect(),
            other => vec![other.clone()],
        }
    }
}

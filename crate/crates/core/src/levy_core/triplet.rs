use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_core::integrate::{cexp_m1_m_lin, levy_integral, levy_integral_complex, Region};
use crate::levy_core::measure::{DensityRatio, LevyMeasure};
use crate::quad::IntegrationConfig;

/// Truncation function `h(x) = x·𝟙_{|x|≤1}`.
#[inline]
pub fn truncation(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        x
    } else {
        0.0
    }
}

/// Lévy triplet `(b, c, ν)` with rate `r` and spot `S0`; `b` is relative to [`truncation`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    b: f64,
    c: f64,
    nu: LevyMeasure,
    r: f64,
    s0: f64,
}

impl LevyTriplet {
    /// Triplet with `r = 0`, `S0 = 1`.
    pub fn new(b: f64, c: f64, nu: LevyMeasure) -> Result<Self> {
        Self::with_market(b, c, nu, 0.0, 1.0)
    }

    pub fn with_market(b: f64, c: f64, nu: LevyMeasure, r: f64, s0: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter(format!("drift must be finite, got {b}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("Gaussian coefficient must be >= 0, got {c}")));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be >= 0, got {r}")));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidParameter(format!("spot must be > 0, got {s0}")));
        }
        Ok(LevyTriplet { b, c, nu, r, s0 })
    }

    /// NIG(α, β, δ, μ) process: the triplet drift is μ plus the truncated mean of ν.
    pub fn nig(alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        let nu = LevyMeasure::nig(alpha, beta, delta)?;
        let b = match &nu {
            LevyMeasure::Nig(n) => mu + n.trunc_mean(),
            _ => unreachable!(),
        };
        Self::new(b, 0.0, nu)
    }

    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn nu(&self) -> &LevyMeasure {
        &self.nu
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn with_drift(&self, b: f64) -> Result<Self> {
        Self::with_market(b, self.c, self.nu.clone(), self.r, self.s0)
    }

    pub fn with_rate(&self, r: f64) -> Result<Self> {
        Self::with_market(self.b, self.c, self.nu.clone(), r, self.s0)
    }

    pub fn with_spot(&self, s0: f64) -> Result<Self> {
        Self::with_market(self.b, self.c, self.nu.clone(), self.r, s0)
    }
}

/// Classification by the monotonicity conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NotMonotone,
}

/// `ψ(u) = bu + cu²/2 + ∫(e^{ux} − 1 − u h(x)) ν(dx)`.
///
/// Closed forms are used for the parametric families inside their strips;
/// weighted measures fall back to quadrature.
pub fn char_exponent(t: &LevyTriplet, u: Complex64) -> Result<Complex64> {
    let cfg = IntegrationConfig::default();
    Ok(t.b * u + 0.5 * t.c * u * u + jump_exponent(&t.nu, u, &cfg)?)
}

/// [`char_exponent`] with the jump part always computed by quadrature.
pub fn char_exponent_quadrature(t: &LevyTriplet, u: Complex64, cfg: &IntegrationConfig) -> Result<Complex64> {
    Ok(t.b * u + 0.5 * t.c * u * u + jump_exponent_quadrature(&t.nu, u, cfg)?)
}

pub(crate) fn jump_exponent_quadrature(nu: &LevyMeasure, u: Complex64, cfg: &IntegrationConfig) -> Result<Complex64> {
    let f = |x: f64| cexp_m1_m_lin(u * x) + u * (x - truncation(x));
    levy_integral_complex(nu, f, Region::Full, cfg)
}

fn jump_exponent(nu: &LevyMeasure, u: Complex64, cfg: &IntegrationConfig) -> Result<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let divergent = || Error::Divergent { partial: f64::INFINITY };
    let finite = |v: Complex64| if v.re.is_finite() && v.im.is_finite() { Ok(v) } else { Err(divergent()) };
    match nu {
        LevyMeasure::Zero => Ok(zero),
        LevyMeasure::CompoundPoisson(cp) => {
            let v = cp
                .atoms()
                .iter()
                .map(|&(l, x)| (cexp_m1_m_lin(u * x) + u * (x - truncation(x))) * l)
                .fold(zero, |a, b| a + b);
            finite(v)
        }
        LevyMeasure::Nig(n) => {
            let (a, be, d) = (n.alpha(), n.beta(), n.delta());
            if u.re < -a - be || u.re > a - be {
                return Err(divergent());
            }
            let w = a * a - (be + u) * (be + u);
            finite(d * (n.gamma() - w.sqrt()) - u * n.trunc_mean())
        }
        LevyMeasure::Cgmy(c) => {
            if u.re < -c.g() || u.re > c.m() {
                return Err(divergent());
            }
            finite(cgmy_compensated(c.c(), c.g(), c.m(), c.y(), u) + u * c.tail_mean())
        }
        LevyMeasure::TruncExp(t) => {
            if t.hi().is_infinite() && u.re >= t.rate() {
                return Err(divergent());
            }
            let s = t.scale();
            let k = t.rate();
            let main = (exp_integral(u - k, t.lo(), t.hi()) - exp_integral(Complex64::new(-k, 0.0), t.lo(), t.hi())) * s;
            let trunc_hi = t.hi().min(1.0);
            let lin = if t.lo() < trunc_hi { s * x_exp_integral(-k, t.lo(), trunc_hi) } else { 0.0 };
            finite(main - u * lin)
        }
        LevyMeasure::Sum(parts) => parts.iter().try_fold(zero, |acc, p| Ok(acc + jump_exponent(p, u, cfg)?)),
        LevyMeasure::Weighted { .. } => jump_exponent_quadrature(nu, u, cfg),
    }
}

// ∫(e^{ux} − 1 − ux) ν_CGMY(dx).
fn cgmy_compensated(c: f64, g: f64, m: f64, y: f64, u: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if y.abs() < 1e-12 {
        let lm = (one - u / m).ln();
        let lg = (one + u / g).ln();
        return c * (-lm - u / m - lg + u / g);
    }
    if (y - 1.0).abs() < 1e-12 {
        let lm = (one - u / m).ln();
        let lg = (one + u / g).ln();
        return c * ((m - u) * lm + (g + u) * lg);
    }
    let gam = statrs::function::gamma::gamma(-y);
    let mu_ = Complex64::new(m, 0.0) - u;
    let gu = Complex64::new(g, 0.0) + u;
    let pow = |z: Complex64| if z.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { z.powf(y) };
    c * gam * (pow(mu_) - m.powf(y) + pow(gu) - g.powf(y) - u * y * (g.powf(y - 1.0) - m.powf(y - 1.0)))
}

// ∫_a^b e^{zx} dx.
fn exp_integral(z: Complex64, a: f64, b: f64) -> Complex64 {
    if b.is_infinite() {
        return -(z * a).exp() / z;
    }
    let w = z * (b - a);
    let ratio = if w.norm() < 1e-4 {
        // (e^w − 1)/w
        Complex64::new(1.0, 0.0) + w / 2.0 + w * w / 6.0 + w * w * w / 24.0
    } else {
        (w.exp() - 1.0) / w
    };
    (z * a).exp() * ratio * (b - a)
}

// ∫_a^b x e^{kx} dx for real k.
fn x_exp_integral(k: f64, a: f64, b: f64) -> f64 {
    if k.abs() < 1e-8 {
        return 0.5 * (b * b - a * a);
    }
    let anti = |x: f64| (k * x).exp() * (x / k - 1.0 / (k * k));
    anti(b) - anti(a)
}

/// Decide monotonicity: `c = 0`, `∫|h|dν < ∞`, one-sided support and the sign of `b − ∫h dν`.
pub fn is_monotone(t: &LevyTriplet) -> Monotonicity {
    if t.c > 0.0 {
        return Monotonicity::NotMonotone;
    }
    let cfg = IntegrationConfig::default();
    match levy_integral(&t.nu, |x| truncation(x).abs(), Region::AbsLe(1.0), &cfg) {
        Ok(v) if v.is_finite() => {}
        _ => return Monotonicity::NotMonotone,
    }
    let mean_h = match levy_integral(&t.nu, truncation, Region::AbsLe(1.0), &cfg) {
        Ok(v) => v,
        Err(_) => return Monotonicity::NotMonotone,
    };
    let drift = t.b - mean_h;
    if !t.nu.has_negative_mass() && drift >= 0.0 {
        Monotonicity::Increasing
    } else if !t.nu.has_positive_mass() && drift <= 0.0 {
        Monotonicity::Decreasing
    } else {
        Monotonicity::NotMonotone
    }
}

/// `c + ∫h²(x) Y(x) ν(dx)`.
pub fn modified_second_characteristic(t: &LevyTriplet, y: &DensityRatio) -> Result<f64> {
    let cfg = IntegrationConfig::default();
    let y = *y;
    let jumps = levy_integral(&t.nu, |x| truncation(x).powi(2) * y.eval(x), Region::Full, &cfg)?;
    Ok(t.c + jumps)
}

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_core::measure::LevyMeasure;
use crate::quad::{integrate_half_line, IntegrationConfig, QuadFailure, QuadValue};

/// Integration region on ℝ \ {0}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Full,
    /// `|x| ≥ ε`
    AbsGe(f64),
    /// `x ≥ a`
    Ge(f64),
    /// `|x| ≤ ε`
    AbsLe(f64),
    /// `a ≤ x ≤ b`
    Between(f64, f64),
}

impl Region {
    pub fn contains(&self, x: f64) -> bool {
        x != 0.0
            && match *self {
                Region::Full => true,
                Region::AbsGe(e) => x.abs() >= e,
                Region::Ge(a) => x >= a,
                Region::AbsLe(e) => x.abs() <= e,
                Region::Between(a, b) => x >= a && x <= b,
            }
    }

    // (positive side, negative side) as intervals in |x|.
    fn sides(&self) -> (Option<(f64, f64)>, Option<(f64, f64)>) {
        let inf = f64::INFINITY;
        match *self {
            Region::Full => (Some((0.0, inf)), Some((0.0, inf))),
            Region::AbsGe(e) => (Some((e, inf)), Some((e, inf))),
            Region::AbsLe(e) => (Some((0.0, e)), Some((0.0, e))),
            Region::Ge(a) if a >= 0.0 => (Some((a, inf)), None),
            Region::Ge(a) => (Some((0.0, inf)), Some((0.0, -a))),
            Region::Between(a, b) => {
                let pos = (b > 0.0).then(|| (a.max(0.0), b));
                let neg = (a < 0.0).then(|| ((-b).max(0.0), -a));
                (pos, neg)
            }
        }
    }
}

fn intersect(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> Option<(f64, f64)> {
    let (a, b) = (a?, b?);
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo < hi).then_some((lo, hi))
}

fn map_failure(f: QuadFailure) -> Error {
    match f {
        QuadFailure::NonFinite => Error::Divergent { partial: f64::INFINITY },
        QuadFailure::Divergent { partial } => Error::Divergent { partial },
        QuadFailure::NoConvergence { estimate, error_bound } => Error::Integration { estimate, error_bound },
    }
}

/// `∫_region g(x, ln ν(x)) dx + Σ_atoms g(x_i, ln m_i)`.
///
/// `g` receives the log-density so callers can combine exponentials safely;
/// points where the density vanishes are skipped.
pub fn integrate_raw<T: QuadValue>(
    nu: &LevyMeasure,
    g: &dyn Fn(f64, f64) -> T,
    region: Region,
    cfg: &IntegrationConfig,
) -> Result<T> {
    let mut acc = T::zero();
    for (x, m) in nu.atoms() {
        if region.contains(x) {
            let v = g(x, m.ln());
            if !v.is_finite_value() {
                return Err(Error::Divergent { partial: f64::INFINITY });
            }
            acc += v;
        }
    }

    let sides = nu.continuous_sides();
    let (rpos, rneg) = region.sides();
    let breaks = nu.breakpoints();

    if let Some((lo, hi)) = intersect(sides.pos, rpos) {
        let bp: Vec<f64> = breaks.iter().filter(|&&b| b > 0.0).cloned().collect();
        let f = |x: f64| {
            let ld = nu.ln_density(x);
            if ld == f64::NEG_INFINITY {
                T::zero()
            } else {
                g(x, ld)
            }
        };
        acc += integrate_half_line(&f, lo, hi, &bp, cfg).map_err(map_failure)?;
    }
    if let Some((lo, hi)) = intersect(sides.neg, rneg) {
        let bp: Vec<f64> = breaks.iter().filter(|&&b| b < 0.0).map(|b| -b).collect();
        let f = |y: f64| {
            let ld = nu.ln_density(-y);
            if ld == f64::NEG_INFINITY {
                T::zero()
            } else {
                g(-y, ld)
            }
        };
        acc += integrate_half_line(&f, lo, hi, &bp, cfg).map_err(map_failure)?;
    }
    Ok(acc)
}

/// `∫_region f(x) ν(dx)`.
///
/// On regions touching zero the caller should supply `f(x) = O(x²)` unless
/// ν has finite variation; otherwise the result is a divergence signal.
pub fn levy_integral<F>(nu: &LevyMeasure, f: F, region: Region, cfg: &IntegrationConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64, ld: f64| {
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * ld.exp()
        }
    };
    integrate_raw(nu, &g, region, cfg)
}

/// Complex-valued counterpart of [`levy_integral`].
pub fn levy_integral_complex<F>(
    nu: &LevyMeasure,
    f: F,
    region: Region,
    cfg: &IntegrationConfig,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let g = |x: f64, ld: f64| {
        let v = f(x);
        if v.re == 0.0 && v.im == 0.0 {
            v
        } else {
            v * ld.exp()
        }
    };
    integrate_raw(nu, &g, region, cfg)
}

/// `eᶻ − 1 − z` without cancellation near 0.
pub fn exp_m1_m_lin(z: f64) -> f64 {
    if z.abs() < 0.1 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..16 {
            term *= z / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

/// Complex `eᶻ − 1 − z`.
pub fn cexp_m1_m_lin(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..18 {
            term = term * z / k as f64;
            sum += term;
        }
        sum
    } else {
        z.exp() - 1.0 - z
    }
}

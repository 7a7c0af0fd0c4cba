use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_core::{char_exponent, LevyTriplet};
use crate::pricing::payoff::{PayoffKind, PayoffSpec};
use crate::quad::{integrate_half_line, IntegrationConfig};

/// Tolerances of the inversion integral.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Candidate damping lines `Im z = w`, tried in order.
    pub damping: Vec<f64>,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig { abs_tol: 1e-11, rel_tol: 1e-10, damping: vec![0.5, -0.5, 1.5, 0.25, 0.75, -0.25, 1.25] }
    }
}

fn finite_exponent(t: &LevyTriplet, u: Complex64) -> Option<Complex64> {
    char_exponent(t, u).ok().filter(|v| v.re.is_finite() && v.im.is_finite())
}

/// European call or put, `e^{−rT}E[(S_T − K)^±]`, by damped Fourier inversion.
///
/// Along `Im z = w` the inversion of the call transform yields the call
/// (`w > 1`), the call minus the forward (`0 < w < 1`) or the put (`w < 0`);
/// the other price follows from the forward `S0·e^{T(ψ(1)−r)}`, which
/// reduces to put–call parity under a martingale triplet.
pub fn price_fourier_european(t: &LevyTriplet, payoff: &PayoffSpec, cfg: &FourierConfig) -> Result<f64> {
    let (strike, is_call) = match payoff.kind() {
        PayoffKind::EuropeanCall { strike } => (*strike, true),
        PayoffKind::EuropeanPut { strike } => (*strike, false),
        _ => return Err(Error::Unsupported("Fourier pricing covers European calls and puts only".into())),
    };
    let mat = payoff.maturity();
    let r = t.r();
    let k = strike.ln() - r * mat;
    let ln_s0 = t.s0().ln();

    let w = cfg
        .damping
        .iter()
        .copied()
        .filter(|&w| w != 0.0 && w != 1.0)
        .find(|&w| {
            finite_exponent(t, Complex64::new(w, 0.0)).is_some()
                && finite_exponent(t, Complex64::new(w, -1.0)).is_some()
        })
        .ok_or(Error::Strip)?;

    let i = Complex64::i();
    let integrand = |v: f64| -> f64 {
        let z = Complex64::new(v, w);
        let psi = match char_exponent(t, Complex64::new(w, -v)) {
            Ok(p) => p,
            Err(_) => return f64::NAN,
        };
        let expo = (1.0 + i * z) * k - i * z * ln_s0 + mat * (psi - r * Complex64::new(w, -v));
        (expo.exp() / (i * z * (1.0 + i * z))).re
    };
    let quad = IntegrationConfig { abs_tol: cfg.abs_tol, rel_tol: cfg.rel_tol, ..IntegrationConfig::default() };
    let v = integrate_half_line(&integrand, 0.0, f64::INFINITY, &[], &quad).map_err(|e| Error::Integration {
        estimate: f64::NAN,
        error_bound: match e {
            crate::quad::QuadFailure::NoConvergence { error_bound, .. } => error_bound,
            _ => f64::INFINITY,
        },
    })? / std::f64::consts::PI;

    let disc_strike = (k).exp();
    let forward = || -> Result<f64> {
        let psi1 = finite_exponent(t, Complex64::new(1.0, 0.0)).ok_or(Error::Strip)?;
        Ok(t.s0() * (mat * (psi1.re - r)).exp())
    };
    let (call, put) = if w > 1.0 {
        (Some(v), None)
    } else if w > 0.0 {
        (None, Some(v + disc_strike))
    } else {
        (None, Some(v))
    };
    Ok(match (is_call, call, put) {
        (true, Some(c), _) => c,
        (false, _, Some(p)) => p,
        (true, None, Some(p)) => p + forward()? - disc_strike,
        (false, Some(c), None) => c - forward()? + disc_strike,
        _ => unreachable!(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_core::LevyMeasure;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn bs_call(s0: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
        let n = Normal::new(0.0, 1.0).unwrap();
        let d1 = ((s0 / k).ln() + (r + 0.5 * sigma * sigma) * t) / (sigma * t.sqrt());
        let d2 = d1 - sigma * t.sqrt();
        s0 * n.cdf(d1) - k * (-r * t).exp() * n.cdf(d2)
    }

    #[test]
    fn black_scholes_reproduced_on_every_damping_line() {
        let t = LevyTriplet::new(-0.5, 1.0, LevyMeasure::Zero).unwrap();
        let expect = bs_call(1.0, 1.0, 0.0, 1.0, 1.0);
        for w in [0.5, -0.5, 1.5] {
            let cfg = FourierConfig { damping: vec![w], ..FourierConfig::default() };
            let c = price_fourier_european(&t, &PayoffSpec::european_call(1.0, 1.0).unwrap(), &cfg).unwrap();
            assert!((c - expect).abs() < 1e-8, "w={w}: {c} vs {expect}");
        }
    }

    #[test]
    fn rate_and_spot() {
        let (r, s0, k, sigma) = (0.05, 1.3, 1.1, 0.4);
        let t = LevyTriplet::with_market(r - 0.5 * sigma * sigma, sigma * sigma, LevyMeasure::Zero, r, s0).unwrap();
        let cfg = FourierConfig::default();
        let c = price_fourier_european(&t, &PayoffSpec::european_call(k, 2.0).unwrap(), &cfg).unwrap();
        assert!((c - bs_call(s0, k, r, sigma, 2.0)).abs() < 1e-8);
        let p = price_fourier_european(&t, &PayoffSpec::european_put(k, 2.0).unwrap(), &cfg).unwrap();
        assert!((c - p - (s0 - k * (-2.0 * r).exp())).abs() < 1e-10);
    }

    #[test]
    fn non_european_rejected() {
        let t = LevyTriplet::new(-0.5, 1.0, LevyMeasure::Zero).unwrap();
        let p = PayoffSpec::new(PayoffKind::AsianFloating, 1.0).unwrap();
        assert!(price_fourier_european(&t, &p, &FourierConfig::default()).is_err());
    }
}

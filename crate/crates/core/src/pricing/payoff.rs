use crate::error::{Error, Result};

/// Piecewise-linear function of the terminal price, flat outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    points: Vec<(f64, f64)>,
}

impl Tabulated {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("tabulated payoff needs at least one point".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidParameter("tabulated payoff values must be finite".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("tabulated payoff has duplicate abscissae".into()));
        }
        Ok(Tabulated { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, s: f64) -> f64 {
        let p = &self.points;
        let i = p.partition_point(|q| q.0 <= s);
        if i == 0 {
            return p[0].1;
        }
        if i == p.len() {
            return p[p.len() - 1].1;
        }
        let (x0, y0) = p[i - 1];
        let (x1, y1) = p[i];
        y0 + (y1 - y0) * (s - x0) / (x1 - x0)
    }

    fn sup_abs(&self) -> f64 {
        self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PayoffKind {
    EuropeanCall { strike: f64 },
    EuropeanPut { strike: f64 },
    /// `(avg S − K)⁺`, trapezoidal average over the step grid.
    AsianCall { strike: f64 },
    /// `(S_T − avg S)⁺`.
    AsianFloating,
    /// `(S_T − α·inf S)⁺` with `α > 1`.
    Lookback { alpha: f64 },
    /// `min((K − S_T)⁺, cap)`.
    CappedPut { strike: f64, cap: f64 },
    BoundedCustom(Tabulated),
}

/// A payoff on the discounted price path over `[0, maturity]`.
///
/// Strikes are quoted at maturity and enter as `K·e^{−rT}` against the
/// discounted path; with `r = 0` the two coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    kind: PayoffKind,
    maturity: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, maturity: f64) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidParameter(format!("maturity must be > 0, got {maturity}")));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        };
        match &kind {
            PayoffKind::EuropeanCall { strike } | PayoffKind::EuropeanPut { strike } | PayoffKind::AsianCall { strike } => {
                positive("strike", *strike)?
            }
            PayoffKind::Lookback { alpha } => {
                if !(*alpha > 1.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!("lookback requires alpha > 1, got {alpha}")));
                }
            }
            PayoffKind::CappedPut { strike, cap } => {
                positive("strike", *strike)?;
                positive("cap", *cap)?;
            }
            PayoffKind::AsianFloating | PayoffKind::BoundedCustom(_) => {}
        }
        Ok(PayoffSpec { kind, maturity })
    }

    pub fn european_call(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(PayoffKind::EuropeanCall { strike }, maturity)
    }

    pub fn european_put(strike: f64, maturity: f64) -> Result<Self> {
        Self::new(PayoffKind::EuropeanPut { strike }, maturity)
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn is_path_dependent(&self) -> bool {
        matches!(
            self.kind,
            PayoffKind::AsianCall { .. } | PayoffKind::AsianFloating | PayoffKind::Lookback { .. }
        )
    }

    pub fn is_bounded(&self) -> bool {
        self.growth_bound().0 == 0.0
    }

    /// `(A, B)` with `payoff ≤ A·sup_t |S̃_t| + B`.
    pub fn growth_bound(&self) -> (f64, f64) {
        match &self.kind {
            PayoffKind::EuropeanCall { .. }
            | PayoffKind::AsianCall { .. }
            | PayoffKind::AsianFloating
            | PayoffKind::Lookback { .. } => (1.0, 0.0),
            PayoffKind::EuropeanPut { strike } => (0.0, *strike),
            PayoffKind::CappedPut { strike, cap } => (0.0, strike.min(*cap)),
            PayoffKind::BoundedCustom(t) => (0.0, t.sup_abs()),
        }
    }

    /// Payoff of a discounted price path sampled on a uniform grid (first
    /// entry at t = 0); `discount` is `e^{−rT}`.
    pub fn evaluate(&self, path: &[f64], discount: f64) -> f64 {
        let last = *path.last().expect("empty path");
        match &self.kind {
            PayoffKind::EuropeanCall { strike } => (last - strike * discount).max(0.0),
            PayoffKind::EuropeanPut { strike } => (strike * discount - last).max(0.0),
            PayoffKind::AsianCall { strike } => (trapezoid_mean(path) - strike * discount).max(0.0),
            PayoffKind::AsianFloating => (last - trapezoid_mean(path)).max(0.0),
            PayoffKind::Lookback { alpha } => {
                let inf = path.iter().cloned().fold(f64::INFINITY, f64::min);
                (last - alpha * inf).max(0.0)
            }
            PayoffKind::CappedPut { strike, cap } => (strike * discount - last).max(0.0).min(*cap),
            PayoffKind::BoundedCustom(t) => t.eval(last),
        }
    }
}

fn trapezoid_mean(path: &[f64]) -> f64 {
    let n = path.len();
    if n == 1 {
        return path[0];
    }
    let inner: f64 = path[1..n - 1].iter().sum();
    (0.5 * (path[0] + path[n - 1]) + inner) / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PayoffSpec::new(PayoffKind::Lookback { alpha: 1.0 }, 1.0).is_err());
        assert!(PayoffSpec::new(PayoffKind::Lookback { alpha: 1.5 }, 1.0).is_ok());
        assert!(PayoffSpec::european_put(1.0, 0.0).is_err());
        assert!(PayoffSpec::european_call(-1.0, 1.0).is_err());
        assert!(Tabulated::new(vec![]).is_err());
        assert!(Tabulated::new(vec![(1.0, 0.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn european_and_path_payoffs() {
        let path = [1.0, 1.2, 0.8, 1.1];
        let call = PayoffSpec::european_call(1.0, 1.0).unwrap();
        assert!((call.evaluate(&path, 1.0) - 0.1).abs() < 1e-15);
        let put = PayoffSpec::european_put(1.0, 1.0).unwrap();
        assert_eq!(put.evaluate(&path, 1.0), 0.0);
        let lb = PayoffSpec::new(PayoffKind::Lookback { alpha: 1.25 }, 1.0).unwrap();
        assert!((lb.evaluate(&path, 1.0) - 0.1).abs() < 1e-15);
        // trapezoid: (0.5 + 1.2 + 0.8 + 0.55)/3
        let fl = PayoffSpec::new(PayoffKind::AsianFloating, 1.0).unwrap();
        assert!((fl.evaluate(&path, 1.0) - (1.1 - 3.05 / 3.0)).abs() < 1e-15);
        let capped = PayoffSpec::new(PayoffKind::CappedPut { strike: 2.0, cap: 0.5 }, 1.0).unwrap();
        assert_eq!(capped.evaluate(&path, 1.0), 0.5);
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let t = Tabulated::new(vec![(2.0, 1.0), (0.0, 3.0)]).unwrap();
        assert_eq!(t.eval(-1.0), 3.0);
        assert_eq!(t.eval(1.0), 2.0);
        assert_eq!(t.eval(5.0), 1.0);
        let p = PayoffSpec::new(PayoffKind::BoundedCustom(t), 1.0).unwrap();
        assert_eq!(p.growth_bound(), (0.0, 3.0));
    }
}

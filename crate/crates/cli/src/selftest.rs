//! Closed-form regression battery.

use levy_emm::bessel_k1;
use levy_emm::convergence_lab::{builtin_sequence, SequenceTag};
use levy_emm::measure_change::{apply_girsanov, i_q, psi_hat, psi_hat_prime, q_f, solve_esscher, QParams};
use levy_emm::pricing::{price_fourier_european, wiener_hopf_check, FourierConfig, McConfig, PayoffSpec};
use levy_emm::{LevyMeasure, LevyTriplet, Result};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, r: Result<(bool, String)>) -> Check {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    Check { name: name.into(), pass, detail }
}

/// `2Φ(½) − 1`: at-the-money put under `b = −½c`, `c = 1`, `T = 1`.
pub fn black_scholes_put_atm() -> f64 {
    2.0 * Normal::standard().cdf(0.5) - 1.0
}

/// `F^n(u)` of the escaping-jump sequence (`q = 2`) by antiderivatives,
/// with the weight `(1 + u(eˣ−1))⁺` cut at `ln(1 − 1/u)` for `u < 0`.
pub fn escaping_f(n: f64, u: f64) -> f64 {
    let mut hi = 2.0 * n;
    if u < 0.0 {
        hi = hi.min((1.0 - 1.0 / u).ln());
    }
    if hi <= n {
        return -0.5 + u;
    }
    let m = |k: f64| ((-k * n).exp() - (-k * hi).exp()) / (k * n);
    let k = 2.0 + 1.0 / n;
    let (e0, e1, e2) = (m(k), m(k - 1.0), m(k - 2.0));
    -0.5 + u + (e1 - e0) + u * (e2 - 2.0 * e1 + e0)
}

pub fn run_battery() -> Vec<Check> {
    let mut out = Vec::new();

    // Reference values of K₁ to 16 digits.
    for (x, want) in [(0.1, 9.853844780870606), (1.0, 0.6019072301972346), (5.0, 0.004044613445452164)] {
        out.push(check(
            format!("bessel_k1({x})"),
            bessel_k1(x).map(|got| {
                let rel = ((got - want) / want).abs();
                (rel < 1e-12, format!("rel err {rel:.2e}"))
            }),
        ));
    }

    out.push(check(
        "psi_hat_prime vs finite differences (NIG)",
        (|| {
            let t = LevyTriplet::nig(2.0, 0.5, 1.0, 0.1)?;
            let mut worst = 0.0f64;
            for u in [-1.5, -0.7, -0.2] {
                let h = 1e-3;
                let fd = (8.0 * (psi_hat(&t, u + h)? - psi_hat(&t, u - h)?) - (psi_hat(&t, u + 2.0 * h)? - psi_hat(&t, u - 2.0 * h)?))
                    / (12.0 * h);
                worst = worst.max((fd - psi_hat_prime(&t, u)?).abs());
            }
            Ok((worst < 1e-6, format!("max abs err {worst:.2e}")))
        })(),
    ));

    out.push(check(
        "escaping-jumps F^n closed form, n in {1,2,5,10}",
        (|| {
            let q = QParams::new(2.0)?;
            let mut worst = 0.0f64;
            for n in [1u32, 2, 5, 10] {
                let t = LevyTriplet::new(-1.0, 1.0, LevyMeasure::trunc_exp_n(n as f64)?)?;
                for u in [-1.0, 0.0, 0.5, 1.0] {
                    worst = worst.max((q_f(&t, u, q)? - escaping_f(n as f64, u)).abs());
                }
            }
            Ok((worst < 1e-8, format!("max abs err {worst:.2e}")))
        })(),
    ));

    out.push(check(
        "escaping-jumps I_n(2) = e^-1 - e^-2",
        (|| {
            let q = QParams::new(2.0)?;
            let s = builtin_sequence(SequenceTag::EscapingJumps)?;
            let want = (-1.0f64).exp() - (-2.0f64).exp();
            let mut worst = 0.0f64;
            for &n in s.schedule() {
                worst = worst.max((i_q(&s.triplet(n)?, q) - want).abs());
            }
            let lim = i_q(s.limit(), q);
            Ok((worst < 1e-10 && lim == 0.0, format!("max abs err {worst:.2e}, I(2) of limit {lim}")))
        })(),
    ));

    out.push(check(
        "Black-Scholes Esscher put (Fourier)",
        (|| {
            let t = LevyTriplet::new(-1.0, 1.0, LevyMeasure::Zero)?;
            let s = solve_esscher(&t)?;
            let tq = apply_girsanov(&t, &s.girsanov().expect("solved"))?;
            let p = price_fourier_european(&tq, &PayoffSpec::european_put(1.0, 1.0)?, &FourierConfig::default())?;
            let want = black_scholes_put_atm();
            let theta = s.parameter.unwrap_or(f64::NAN);
            Ok(((p - want).abs() < 1e-6 && (theta - 0.5).abs() < 1e-10, format!("theta {theta}, put {p} vs {want}")))
        })(),
    ));

    out.push(check(
        "put-call parity (Esscher NIG, Fourier)",
        (|| {
            let t = LevyTriplet::with_market(0.05, 0.0, LevyMeasure::nig(3.0, -1.0, 0.5)?, 0.03, 1.0)?;
            let s = solve_esscher(&t)?;
            let tq = apply_girsanov(&t, &s.girsanov().expect("solved"))?;
            let cfg = FourierConfig::default();
            let (k, mat) = (1.1, 0.75);
            let c = price_fourier_european(&tq, &PayoffSpec::european_call(k, mat)?, &cfg)?;
            let p = price_fourier_european(&tq, &PayoffSpec::european_put(k, mat)?, &cfg)?;
            let err = (c - p - (1.0 - k * (-0.03 * mat).exp())).abs();
            Ok((err < 1e-8, format!("parity err {err:.2e}")))
        })(),
    ));

    out.push(check(
        "Wiener-Hopf product on Black-Scholes (q=1)",
        (|| {
            let t = LevyTriplet::new(-0.5, 1.0, LevyMeasure::Zero)?;
            let w = wiener_hopf_check(&t, 1.0, &McConfig { paths: 100_000, seed: 1, ..McConfig::default() })?;
            Ok((w.within(3.0, 0.005), format!("product {} ± {}", w.product, w.std_err)))
        })(),
    ));

    out
}

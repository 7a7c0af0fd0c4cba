use levy_emm::convergence_lab::{
    builtin_sequence, check_hypotheses, classify_regime, run_convergence_experiment, CgmyParams, LimitMeasure,
    ModelSequence, RegimeTag, SequenceTag, EVIDENCE_NOTE,
};
use levy_emm::measure_change::{apply_girsanov, i_q, q_f, solve_esscher, solve_qopt, MeasureKind, QParams};
use levy_emm::pricing::{price_fourier_european, wiener_hopf_check, FourierConfig, McConfig, PayoffKind, PayoffSpec};
use levy_emm::{LevyMeasure, LevyTriplet};

fn q2() -> MeasureKind {
    MeasureKind::Qopt(QParams::new(2.0).unwrap())
}

fn put() -> PayoffSpec {
    PayoffSpec::new(PayoffKind::EuropeanPut { strike: 1.0 }, 1.0).unwrap()
}

fn cgmy(m: f64) -> ModelSequence {
    builtin_sequence(SequenceTag::Cgmy(CgmyParams { m, ..CgmyParams::default() })).unwrap()
}

#[test]
fn constant_sequence_has_zero_deviations() {
    let t = LevyTriplet::nig(2.0, 0.5, 1.0, 0.1).unwrap();
    let r = check_hypotheses(&ModelSequence::constant("const", t));
    assert_eq!(r.note, EVIDENCE_NOTE);
    for c in &r.conditions {
        for (n, d) in c.deviations() {
            assert_eq!(d, Some(0.0), "{} at n={}", c.id, n);
        }
    }
}

#[test]
fn nig_sum_small_jump_variance_excess_decays_like_two_over_pi_n() {
    // NIG(¼,0,1/n) puts ≈ (2/π)(1/n) of h²-mass on [−1,1] (zK₁(z) ≈ 1 for z ≤ ¼),
    // NIG(n,0,n) has unit variance with tail mass beyond 1 of order e^{−n}.
    let r = check_hypotheses(&builtin_sequence(SequenceTag::NigToBrownian { b: 0.0 }).unwrap());
    let c = r.condition("diffusion_plus_small_jumps").unwrap();
    assert_eq!(c.limit, Ok(1.0));
    for (n, d) in c.deviations().into_iter().filter(|e| e.0 >= 8) {
        let want = 2.0 / (std::f64::consts::PI * n as f64);
        let d = d.unwrap();
        assert!((d - want).abs() < 0.1 * want, "n={n}: {d} vs {want}");
    }
}

#[test]
fn escaping_jumps_tail_mass_matches_antiderivative() {
    let r = check_hypotheses(&builtin_sequence(SequenceTag::EscapingJumps).unwrap());
    let c = r.condition("f_tail_0.5").unwrap();
    assert_eq!(c.limit, Ok(0.0));
    for (n, v) in &c.values {
        let n = *n as f64;
        let k = 2.0 + 1.0 / n;
        let want = ((-k * n).exp() - (-2.0 * k * n).exp()) / (k * n);
        assert!((v.as_ref().unwrap() - want).abs() < 1e-9 * want + 1e-15, "n={n}");
    }
    let devs = c.deviations();
    assert!(devs.windows(2).all(|w| w[1].1.unwrap() < w[0].1.unwrap()));
}

#[test]
fn regimes_of_builtin_sequences() {
    let e = MeasureKind::MinimalEntropy;
    let s = builtin_sequence(SequenceTag::NigToBrownian { b: 0.0 }).unwrap();
    let r = classify_regime(&s, e).unwrap();
    assert_eq!(r.tag, RegimeTag::LimitPositive);
    assert!((r.limit_derivative.unwrap() - 0.5).abs() < 1e-9);

    let r = classify_regime(&builtin_sequence(SequenceTag::SkewedNig).unwrap(), e).unwrap();
    assert_eq!(r.tag, RegimeTag::LimitNegative);
    assert!((r.limit_derivative.unwrap() + 1.0).abs() < 1e-6);

    assert_eq!(classify_regime(&cgmy(3.0), q2()).unwrap().tag, RegimeTag::IqFiniteContinuous);
    let r = classify_regime(&cgmy(2.0), q2()).unwrap();
    assert_eq!(r.tag, RegimeTag::IqInfinite);
    assert_eq!(r.iq_limit, Some(f64::INFINITY));

    let r = classify_regime(&builtin_sequence(SequenceTag::EscapingJumps).unwrap(), q2()).unwrap();
    assert_eq!(r.tag, RegimeTag::IqJump);
    assert_eq!(r.iq_limit, Some(0.0));
    let a = (-1.0f64).exp() - (-2.0f64).exp();
    assert!((r.jump.unwrap() - a).abs() < 1e-10);
}

#[test]
fn drift_threshold_flips_entropy_regime() {
    let tag = |b| classify_regime(&builtin_sequence(SequenceTag::NigToBrownian { b }).unwrap(), MeasureKind::MinimalEntropy);
    assert_eq!(tag(-0.4).unwrap().tag, RegimeTag::LimitPositive);
    assert_eq!(tag(-0.6).unwrap().tag, RegimeTag::LimitNegative);
    assert_eq!(tag(-0.5).unwrap().tag, RegimeTag::Boundary);
}

// F^n(u) for the escaping-jump sequence by direct antiderivatives, with the
// weight Y_u = (1 + u(eˣ−1))⁺ vanishing beyond x* = ln(1 − 1/u) when u < 0.
fn escaping_f(n: f64, u: f64) -> f64 {
    let mut hi = 2.0 * n;
    if u < 0.0 {
        hi = hi.min((1.0 - 1.0 / u).ln());
    }
    if hi <= n {
        return -0.5 + u;
    }
    // ∫_n^hi (1/n)e^{−kx} dx
    let m = |k: f64| ((-k * n).exp() - (-k * hi).exp()) / (k * n);
    let k = 2.0 + 1.0 / n;
    // (eˣ−1)(1 + u(eˣ−1)) = (1−u)eˣ·... expanded in e^{jx}, j = 0, 1, 2
    let e0 = m(k);
    let e1 = m(k - 1.0);
    let e2 = m(k - 2.0);
    let lin = e1 - e0;
    let quad = e2 - 2.0 * e1 + e0;
    -0.5 + u + lin + u * quad
}

#[test]
fn escaping_jump_f_matches_antiderivative() {
    let s = builtin_sequence(SequenceTag::EscapingJumps).unwrap();
    let q = QParams::new(2.0).unwrap();
    for &n in s.schedule() {
        let t = s.triplet(n).unwrap();
        for u in [-1.0, -1e-3, 0.0, 0.5, 1.0, 3.0] {
            let got = q_f(&t, u, q).unwrap();
            let want = escaping_f(n as f64, u);
            assert!((got - want).abs() < 1e-8, "n={n} u={u}: {got} vs {want}");
        }
        let a = (-1.0f64).exp() - (-2.0f64).exp();
        assert!((i_q(&t, q) - a).abs() < 1e-10);
    }
}

#[test]
fn constant_sequence_trajectory_is_flat() {
    let t = LevyTriplet::new(0.05, 0.04, LevyMeasure::nig(3.0, -1.0, 0.5).unwrap()).unwrap();
    let s = ModelSequence::constant("const", t);
    let cfg = McConfig { paths: 20_000, seed: 11, ..McConfig::default() };
    let r = run_convergence_experiment(&s, &put(), MeasureKind::MinimalEntropy, &cfg).unwrap();
    assert_eq!(r.regime.tag, RegimeTag::LimitPositive);
    let est: Vec<_> = r.points.iter().map(|p| p.estimate.clone().unwrap()).collect();
    for a in &est {
        for b in &est {
            let se = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
            assert!((a.price - b.price).abs() <= 3.0 * se, "{} vs {}", a.price, b.price);
        }
    }
}

#[test]
fn continuous_qopt_regime_prices_converge() {
    let cfg = McConfig { paths: 100_000, seed: 3, ..McConfig::default() };
    let r = run_convergence_experiment(&cgmy(3.0), &put(), q2(), &cfg).unwrap();
    assert!(matches!(r.limit.as_ref().unwrap().measure, LimitMeasure::Martingale(_)));
    let last = r.points.last().unwrap();
    assert_eq!(last.n, 32);
    assert_eq!(last.within, Some(true), "gap {:?}", last.gap);
}

#[test]
fn unbounded_payoff_rejected_under_star_measure() {
    let asian = PayoffSpec::new(PayoffKind::AsianCall { strike: 1.0 }, 1.0).unwrap();
    let s = builtin_sequence(SequenceTag::SkewedNig).unwrap();
    let cfg = McConfig { paths: 100, ..McConfig::default() };
    let err = run_convergence_experiment(&s, &asian, MeasureKind::MinimalEntropy, &cfg).unwrap_err();
    assert!(err.to_string().contains("bounded payoffs only"), "{err}");
}

#[test]
fn call_limit_under_star_measure_is_parity_corrected() {
    // P* = P for the skewed NIG sequence (α = 0), so the corrected call
    // limit E_P(S_T − 1)⁺ + 1 − E_P S_T equals the put limit E_P(1 − S_T)⁺.
    let call = PayoffSpec::new(PayoffKind::EuropeanCall { strike: 1.0 }, 1.0).unwrap();
    let s = builtin_sequence(SequenceTag::SkewedNig).unwrap();
    let cfg = McConfig { paths: 2_000, ..McConfig::default() };
    let r = run_convergence_experiment(&s, &call, MeasureKind::MinimalEntropy, &cfg).unwrap();
    let put = price_fourier_european(s.limit(), &put(), &FourierConfig::default()).unwrap();
    let remark = r.remark_call.unwrap();
    assert!((remark - put).abs() < 1e-6, "{remark} vs {put}");
    let p = r.point(32).unwrap();
    assert!((p.gap.unwrap() - (p.estimate.as_ref().unwrap().price - remark)).abs() < 1e-12);
    assert!(r.warnings.iter().any(|w| w.contains("remark_call")));
}

#[test]
fn schedule_failures_are_recorded_not_fatal() {
    // limit model of the skewed NIG sequence has no minimal-entropy measure
    let lim = builtin_sequence(SequenceTag::SkewedNig).unwrap().limit().clone();
    assert!(solve_esscher(&lim).unwrap().parameter.is_none());
    let s = ModelSequence::constant("no-emm", lim);
    let cfg = McConfig { paths: 100, ..McConfig::default() };
    let r = run_convergence_experiment(&s, &put(), MeasureKind::MinimalEntropy, &cfg).unwrap();
    assert!(r.points.iter().all(|p| p.status == "no_solution" && p.estimate.is_none()));
    assert_eq!(r.warnings.len(), r.points.len());
}

#[test]
fn solved_measures_pass_wiener_hopf() {
    let cfg = McConfig { paths: 40_000, seed: 5, ..McConfig::default() };
    let cases = [
        (builtin_sequence(SequenceTag::EscapingJumps).unwrap(), q2()),
        (cgmy(3.0), q2()),
        (builtin_sequence(SequenceTag::NigToBrownian { b: 0.0 }).unwrap(), MeasureKind::MinimalEntropy),
    ];
    for (s, rule) in cases {
        for n in [1, 4] {
            let t = s.triplet(n).unwrap();
            let sol = match rule {
                MeasureKind::MinimalEntropy => solve_esscher(&t).unwrap(),
                MeasureKind::Qopt(q) => solve_qopt(&t, q).unwrap(),
            };
            assert_eq!(sol.status.as_str(), "equivalent_martingale");
            let tq = apply_girsanov(&t, &sol.girsanov().unwrap()).unwrap();
            let w = wiener_hopf_check(&tq, 1.0, &cfg).unwrap();
            assert!(w.within(3.0, 0.005), "{} n={n}: {} ± {}", s.name(), w.product, w.std_err);
        }
    }
}

#[test]
fn skewed_nig_tilts_resolve_below_the_boundary() {
    // θ_n → 0⁻ faster than any power; the root must stay strictly negative
    // because at θ = 0 the right tail e^{−2α_n x} makes E[e^X] infinite.
    let s = builtin_sequence(SequenceTag::SkewedNig).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for &n in s.schedule() {
        let t = s.triplet(n).unwrap();
        let sol = solve_esscher(&t).unwrap();
        let theta = sol.parameter.unwrap();
        assert!(theta < 0.0 && theta > prev, "n={n}: {theta}");
        prev = theta;
        let tq = apply_girsanov(&t, &sol.girsanov().unwrap()).unwrap();
        assert!(levy_emm::measure_change::martingale_residual(&tq).unwrap().abs() < 1e-8);
    }
}

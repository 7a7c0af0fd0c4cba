//! One PASS/FAIL line per acceptance criterion; the test fails if any criterion fails.
//!
//! Run with `cargo test -p levy-emm-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use levy_emm::convergence_lab::{builtin_sequence, classify_regime, CgmyParams, RegimeTag, SequenceTag};
use levy_emm::measure_change::{
    apply_girsanov, domain_alpha, i_q, martingale_residual, psi_hat, psi_hat_prime, q_f, q_y, solve_esscher,
    solve_qopt, MeasureKind, QParams, SolutionStatus,
};
use levy_emm::pricing::{price_fourier_european, FourierConfig, PayoffSpec};
use levy_emm::{LevyMeasure, LevyTriplet};
use levy_emm_cli::commands;
use levy_emm_cli::config::RunConfig;
use levy_emm_cli::output::{PRICES_HEADER, PRICE_HEADER, WIENER_HOPF_HEADER};
use levy_emm_cli::selftest::black_scholes_put_atm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str, paths: usize) -> RunConfig {
    let mut cfg = RunConfig::load(&configs().join(name)).unwrap();
    cfg.mc.paths = paths;
    cfg
}

fn q2() -> QParams {
    QParams::new(2.0).unwrap()
}

type Row = BTreeMap<String, String>;

fn read_csv(path: &Path, header: &[&str]) -> Vec<Row> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let h: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(h, header, "{}", path.display());
    r.records().map(|rec| h.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &Row, key: &str) -> f64 {
    row[key].parse().unwrap_or(f64::NAN)
}

fn row<'a>(rows: &'a [Row], n: &str) -> &'a Row {
    rows.iter().find(|r| r["n"] == n).unwrap_or_else(|| panic!("no row n={n}"))
}

/// Files written by the CSV-producing criteria, and wall-clock time per criterion.
struct Produced {
    dir: PathBuf,
    elapsed: BTreeMap<u32, Duration>,
}

const CONVERGE: [&str; 3] = ["converge_nig_to_brownian", "converge_skewed_nig", "converge_escaping_jumps"];

fn produce(dir: &Path) -> Produced {
    let mut elapsed = BTreeMap::new();
    let sub = |s: &str| {
        let d = dir.join(s);
        std::fs::create_dir_all(&d).unwrap();
        d
    };

    let t = Instant::now();
    commands::price(&load("black_scholes.toml", 200_000), &sub("c3")).unwrap();
    elapsed.insert(3, t.elapsed());

    let t = Instant::now();
    commands::wiener_hopf(&load("black_scholes.toml", 100_000), &sub("c4_bs")).unwrap();
    commands::wiener_hopf(&load("wiener_hopf_nig.toml", 100_000), &sub("c4_nig")).unwrap();
    elapsed.insert(4, t.elapsed());

    let t = Instant::now();
    for (name, seq, rule) in regime_cases() {
        let r = classify_regime(&seq, rule).unwrap();
        commands::regimes_table(name, &r).write(&sub("c5"), &format!("{name}.csv")).unwrap();
    }
    elapsed.insert(5, t.elapsed());

    let t = Instant::now();
    for name in CONVERGE {
        commands::converge(&load(&format!("{name}.toml"), 100_000), &sub(name)).unwrap();
    }
    elapsed.insert(6, t.elapsed());

    Produced { dir: dir.to_path_buf(), elapsed }
}

fn regime_cases() -> Vec<(&'static str, levy_emm::convergence_lab::ModelSequence, MeasureKind)> {
    let cgmy = |m| builtin_sequence(SequenceTag::Cgmy(CgmyParams { m, ..CgmyParams::default() })).unwrap();
    let q = MeasureKind::Qopt(q2());
    vec![
        ("nig-to-brownian", builtin_sequence(SequenceTag::NigToBrownian { b: 0.0 }).unwrap(), MeasureKind::MinimalEntropy),
        ("skewed-nig", builtin_sequence(SequenceTag::SkewedNig).unwrap(), MeasureKind::MinimalEntropy),
        ("cgmy-m3", cgmy(3.0), q),
        ("cgmy-m2", cgmy(2.0), q),
        ("escaping-jumps", builtin_sequence(SequenceTag::EscapingJumps).unwrap(), q),
    ]
}

/// `F^n(u)` exactly as printed for the escaping-jump example.
fn printed_f(n: f64, u: f64) -> f64 {
    let alpha = (-1.0f64).exp() - (-2.0f64).exp() + 1.0;
    let gamma = (-(n + 1.0)).exp() - (-2.0 * (n + 1.0)).exp();
    let delta = (-(2.0 * n + 1.0)).exp() - (-2.0 * (n + 1.0)).exp();
    -0.5 + gamma / (n + 1.0) - delta / (2.0 * n + 1.0) + u * (alpha - 2.0 * gamma / (n + 1.0) + delta / (2.0 * n + 1.0))
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let mut worst = (0.0f64, 0u32, 0.0f64);
    let mut failing = Vec::new();
    for n in [1u32, 2, 5, 10] {
        let t = LevyTriplet::new(-1.0, 1.0, LevyMeasure::trunc_exp_n(n as f64).unwrap()).unwrap();
        for u in [-1.0, 0.0, 0.5, 1.0] {
            let err = (q_f(&t, u, q2()).unwrap() - printed_f(n as f64, u)).abs();
            if err >= 1e-8 {
                failing.push(format!("(n={n},u={u})"));
            }
            if err > worst.0 {
                worst = (err, n, u);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Verdict {
        id: 1,
        name: "F^n quadrature vs printed closed form (1e-8)",
        pass: failing.is_empty() && secs < 5.0,
        detail: format!(
            "max err {:.3e} at n={} u={}; {} of 16 cells off: {}; {secs:.2}s",
            worst.0,
            worst.1,
            worst.2,
            failing.len(),
            failing.join(" ")
        ),
    }
}

fn criterion_2() -> Verdict {
    let t0 = Instant::now();
    let s = builtin_sequence(SequenceTag::EscapingJumps).unwrap();
    let want = (-1.0f64).exp() - (-2.0f64).exp();
    let worst = s.schedule().iter().map(|&n| (i_q(&s.triplet(n).unwrap(), q2()) - want).abs()).fold(0.0, f64::max);
    let lim = i_q(s.limit(), q2());
    let secs = t0.elapsed().as_secs_f64();
    Verdict {
        id: 2,
        name: "I_n(2) = e^-1 - e^-2 (1e-10), I(2) of limit = 0",
        pass: worst < 1e-10 && lim == 0.0 && secs < 1.0,
        detail: format!("max err {worst:.2e}, I(2) {lim}, {secs:.3}s"),
    }
}

fn criterion_3(p: &Produced) -> Verdict {
    let rows = read_csv(&p.dir.join("c3/price.csv"), PRICE_HEADER);
    let (theta, price, se) = (num(&rows[0], "param"), num(&rows[0], "price"), num(&rows[0], "std_err"));
    let want = black_scholes_put_atm();
    let t = LevyTriplet::new(-1.0, 1.0, LevyMeasure::Zero).unwrap();
    let sol = solve_esscher(&t).unwrap();
    let tq = apply_girsanov(&t, &sol.girsanov().unwrap()).unwrap();
    let fourier = price_fourier_european(&tq, &PayoffSpec::european_put(1.0, 1.0).unwrap(), &FourierConfig::default()).unwrap();
    let secs = p.elapsed[&3].as_secs_f64();
    let pass = (theta - 0.5).abs() < 1e-10
        && (price - want).abs() <= 3.0 * se
        && (fourier - want).abs() < 1e-6
        && rows[0]["paths"] == "200000"
        && secs < 30.0;
    Verdict {
        id: 3,
        name: "Black-Scholes Esscher chain",
        pass,
        detail: format!(
            "theta {theta}, MC {price:.5} ± {se:.5}, Fourier {fourier:.8}, oracle {want:.8}, {secs:.1}s"
        ),
    }
}

fn criterion_4(p: &Produced) -> Verdict {
    let mut pass = p.elapsed[&4].as_secs_f64() < 120.0;
    let mut detail = Vec::new();
    for d in ["c4_bs", "c4_nig"] {
        let rows = read_csv(&p.dir.join(d).join("wiener_hopf.csv"), WIENER_HOPF_HEADER);
        let r = &rows[0];
        let (prod, se) = (num(r, "product"), num(r, "std_err"));
        pass &= r["status"] == "equivalent_martingale" && (prod - 1.0).abs() <= 3.0 * se + 0.005 && r["paths"] == "100000";
        detail.push(format!("{}: {prod:.5} ± {se:.5}", r["model_id"]));
    }
    detail.push(format!("{:.1}s", p.elapsed[&4].as_secs_f64()));
    Verdict { id: 4, name: "Wiener-Hopf product at z=1, q=1 (3 SE + 0.5%)", pass, detail: detail.join(", ") }
}

fn criterion_5(p: &Produced) -> Verdict {
    let want = [
        ("nig-to-brownian", RegimeTag::LimitPositive),
        ("skewed-nig", RegimeTag::LimitNegative),
        ("cgmy-m3", RegimeTag::IqFiniteContinuous),
        ("cgmy-m2", RegimeTag::IqInfinite),
        ("escaping-jumps", RegimeTag::IqJump),
    ];
    let mut pass = p.elapsed[&5].as_secs_f64() < 60.0;
    let mut detail = Vec::new();
    for (name, tag) in want {
        let rows = read_csv(&p.dir.join("c5").join(format!("{name}.csv")), levy_emm_cli::output::REGIMES_HEADER);
        let got = rows[0]["regime"].clone();
        pass &= got == tag.as_str();
        detail.push(format!("{name}={got}"));
    }
    Verdict { id: 5, name: "regime classification of the built-in sequences", pass, detail: detail.join(", ") }
}

// |price − ref| ≤ 3·√(se² + se_ref²) + 1%·|ref|
fn within(price: f64, se: f64, reference: f64, se_ref: f64) -> bool {
    (price - reference).abs() <= 3.0 * (se * se + se_ref * se_ref).sqrt() + 0.01 * reference.abs()
}

// Fourier price of the Esscher-transformed n-th model; informational only.
fn nig_to_brownian_fourier(n: u32) -> f64 {
    let t = builtin_sequence(SequenceTag::NigToBrownian { b: 0.0 }).unwrap().triplet(n).unwrap();
    let tq = apply_girsanov(&t, &solve_esscher(&t).unwrap().girsanov().unwrap()).unwrap();
    price_fourier_european(&tq, &PayoffSpec::european_put(1.0, 1.0).unwrap(), &FourierConfig::default()).unwrap_or(f64::NAN)
}

fn criterion_6(p: &Produced) -> Verdict {
    let prices = |name: &str| read_csv(&p.dir.join(name).join("prices.csv"), PRICES_HEADER);
    let mut detail = Vec::new();
    let mut pass = p.elapsed[&6].as_secs_f64() < 900.0;

    let rows = prices("converge_nig_to_brownian");
    let (n32, lim) = (row(&rows, "32"), row(&rows, "limit"));
    let bs = black_scholes_put_atm();
    let ok = within(num(n32, "price"), num(n32, "std_err"), bs, 0.0) && (num(lim, "price") - bs).abs() < 1e-6;
    pass &= ok;
    detail.push(format!(
        "nig-to-brownian n=32 {:.5} ± {:.5} vs BS {bs:.5}, exact n=32 price {:.5} [{}]",
        num(n32, "price"),
        num(n32, "std_err"),
        nig_to_brownian_fourier(32),
        if ok { "ok" } else { "off" }
    ));

    let rows = prices("converge_skewed_nig");
    let (n32, lim, mc) = (row(&rows, "32"), row(&rows, "limit"), row(&rows, "limit_mc"));
    let (f, m, mse) = (num(lim, "price"), num(mc, "price"), num(mc, "std_err"));
    let ok = lim["status"] == "limit_star"
        && (f - m).abs() <= 3.0 * mse
        && within(num(n32, "price"), num(n32, "std_err"), f, 0.0)
        && within(num(n32, "price"), num(n32, "std_err"), m, mse);
    pass &= ok;
    detail.push(format!(
        "skewed-nig n=32 {:.5} vs E_P Fourier {f:.5} / MC {m:.5} [{}]",
        num(n32, "price"),
        if ok { "ok" } else { "off" }
    ));

    let rows = prices("converge_escaping_jumps");
    let (n32, star, q) = (row(&rows, "32"), row(&rows, "limit"), row(&rows, "limit_model"));
    let (ps, ss, pq, sq) = (num(star, "price"), num(star, "std_err"), num(q, "price"), num(q, "std_err"));
    let ok = star["status"] == "limit_star" && within(num(n32, "price"), num(n32, "std_err"), ps, ss);
    pass &= ok;
    detail.push(format!(
        "escaping-jumps n=32 {:.5} vs E_P* {ps:.5} [{}]",
        num(n32, "price"),
        if ok { "ok" } else { "off" }
    ));
    let strict = ps + 3.0 * (ss * ss + sq * sq).sqrt() < pq;
    pass &= strict;
    detail.push(format!(
        "E_P* {ps:.5} ± {ss:.5} < E_Q {pq:.5} ± {sq:.5} at 3 SE [{}]",
        if strict { "holds" } else { "fails" }
    ));
    detail.push(format!("{:.1}s", p.elapsed[&6].as_secs_f64()));
    Verdict { id: 6, name: "convergence trajectories at n=32 (3 SE + 1%)", pass, detail: detail.join("; ") }
}

fn random_triplet(rng: &mut ChaCha8Rng, family: usize) -> LevyTriplet {
    let nig = |rng: &mut ChaCha8Rng| {
        let a = rng.random_range(0.5..5.0);
        LevyMeasure::nig(a, rng.random_range(-0.9..0.9) * a, rng.random_range(0.2..2.0)).unwrap()
    };
    let cp = |rng: &mut ChaCha8Rng| {
        let atoms = (0..rng.random_range(1..4))
            .map(|_| {
                let x: f64 = rng.random_range(0.05..2.0);
                (rng.random_range(0.1..2.0), if rng.random_bool(0.5) { -x } else { x })
            })
            .collect();
        LevyMeasure::compound_poisson(atoms).unwrap()
    };
    let nu = match family {
        0 => nig(rng),
        1 => LevyMeasure::cgmy(
            rng.random_range(0.1..2.0),
            rng.random_range(1.0..10.0),
            rng.random_range(2.5..10.0),
            rng.random_range(-0.5..1.5),
        )
        .unwrap(),
        2 => LevyMeasure::trunc_exp_n(rng.random_range(1..10) as f64).unwrap(),
        3 => cp(rng),
        _ => LevyMeasure::sum(vec![nig(rng), cp(rng)]),
    };
    // one-sided jump measures need a Gaussian part to stay non-monotone
    let c = if !nu.has_negative_mass() || !nu.has_positive_mass() || rng.random_bool(0.5) {
        rng.random_range(0.05..0.5)
    } else {
        0.0
    };
    LevyTriplet::new(rng.random_range(-1.0..1.0), c, nu).unwrap()
}

fn criterion_7() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_607);
    let mut problems = Vec::new();
    let (mut solved, mut worst_res, mut worst_fd) = (0, 0.0f64, 0.0f64);
    for i in 0..20 {
        let t = random_triplet(&mut rng, i % 5);
        let tag = format!("#{i} {}", t.nu().family_name());

        for sol in [solve_esscher(&t).unwrap(), solve_qopt(&t, q2()).unwrap()] {
            if let Some(g) = sol.girsanov() {
                if sol.status == SolutionStatus::EquivalentMartingale {
                    solved += 1;
                    let res = martingale_residual(&apply_girsanov(&t, &g).unwrap()).unwrap().abs();
                    worst_res = worst_res.max(res);
                    if res >= 1e-8 {
                        problems.push(format!("{tag}: residual {res:.2e}"));
                    }
                }
            }
        }

        // grid and stencil scaled by e^M for a right support bound M
        let alpha = domain_alpha(&t);
        let right = t.nu().support().map_or(0.0, |s| if s.1.is_finite() { s.1.clamp(0.0, 50.0) } else { 0.0 });
        let scale = right.exp();
        let top = if alpha.is_finite() { (alpha - 0.05).min(1.0) } else { (10.0 / scale).min(1.0) };
        let grid: Vec<f64> = (0..12).map(|k| -2.0 + (top + 2.0) * k as f64 / 11.0).collect();
        let d: Vec<f64> = grid.iter().map(|&u| psi_hat_prime(&t, u).unwrap()).collect();
        if !d.windows(2).all(|w| w[1] > w[0]) {
            problems.push(format!("{tag}: psi_hat_prime not increasing"));
        }
        let ph = |u: f64| psi_hat(&t, u).unwrap();
        for (&u, &dv) in grid.iter().zip(&d).skip(1).take(grid.len() - 2) {
            let eps = if u > 0.0 { 1e-3 / scale } else { 1e-3 };
            let fd = (8.0 * (ph(u + eps) - ph(u - eps)) - (ph(u + 2.0 * eps) - ph(u - 2.0 * eps))) / (12.0 * eps);
            let err = (fd - dv).abs() / dv.abs().max(1.0);
            worst_fd = worst_fd.max(err);
            if err >= 1e-6 {
                problems.push(format!("{tag}: FD at u={u}: {err:.2e}"));
            }
        }

        if i_q(&t, q2()).is_finite() {
            let f: Vec<f64> = (0..9).map(|k| q_f(&t, -1.0 + 0.25 * k as f64, q2()).unwrap()).collect();
            if !f.windows(2).all(|w| w[1] > w[0]) {
                problems.push(format!("{tag}: F not increasing"));
            }
        }
    }
    for _ in 0..200 {
        let (u, x) = (rng.random_range(-5.0..5.0), rng.random_range(-20.0..5.0));
        let lin: f64 = 1.0 + u * f64::exp_m1(x);
        if lin > 0.0 && q_y(u, q2(), x) != lin {
            problems.push(format!("Y_u({u}, {x}) not exact"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Verdict {
        id: 7,
        name: "solver and measure self-consistency on 20 random triplets",
        pass: problems.is_empty() && solved > 0 && secs < 120.0,
        detail: format!(
            "{solved} solved measures, max residual {worst_res:.2e}, max FD err {worst_fd:.2e}, {secs:.1}s{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    }
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8(first: &Produced) -> Verdict {
    let again = tempfile::tempdir().unwrap();
    produce(again.path());
    let (a, b) = (files(&first.dir), files(again.path()));
    let differing: Vec<String> =
        a.keys().chain(b.keys()).filter(|k| a.get(*k) != b.get(*k)).map(|k| k.display().to_string()).collect();
    Verdict {
        id: 8,
        name: "byte-identical CSVs on rerun with fixed seeds",
        pass: differing.is_empty() && !a.is_empty(),
        detail: format!("{} files compared{}", a.len(), if differing.is_empty() { String::new() } else { format!(", differing: {}", differing.join(" ")) }),
    }
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut verdicts = vec![criterion_1(), criterion_2()];
    let produced = produce(dir.path());
    verdicts.extend([criterion_3(&produced), criterion_4(&produced), criterion_5(&produced), criterion_6(&produced)]);
    verdicts.push(criterion_7());
    verdicts.push(criterion_8(&produced));

    for v in &verdicts {
        println!("{} criterion {}: {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
    }
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

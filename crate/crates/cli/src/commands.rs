use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};

use levy_emm::convergence_lab::{
    check_hypotheses, classify_regime, run_convergence_experiment, ConvergenceReport, HypothesisReport,
    RegimeClassification,
};
use levy_emm::measure_change::{
    apply_girsanov, solve_esscher, solve_qopt, MeasureKind, MeasureSolution, SolutionStatus,
};
use levy_emm::pricing::{price_mc, wiener_hopf_check, MeasureId};
use levy_emm::LevyTriplet;

use crate::config::{Fallback, RunConfig};
use crate::output::{
    f, num, Table, ESSCHER_HEADER, HYPOTHESES_HEADER, PRICES_HEADER, PRICE_HEADER, QOPT_HEADER, REGIMES_HEADER,
    WIENER_HOPF_HEADER,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NO_SOLUTION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Files written and the exit status of a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub files: Vec<PathBuf>,
}

pub fn rule_label(rule: MeasureKind) -> String {
    match rule {
        MeasureKind::MinimalEntropy => "entropy".into(),
        MeasureKind::Qopt(q) => format!("qopt(q={})", q.q()),
    }
}

fn solve(t: &LevyTriplet, rule: MeasureKind) -> Result<MeasureSolution> {
    Ok(match rule {
        MeasureKind::MinimalEntropy => solve_esscher(t)?,
        MeasureKind::Qopt(q) => solve_qopt(t, q)?,
    })
}

fn status_code(s: SolutionStatus) -> u8 {
    if s == SolutionStatus::NoSolution {
        EXIT_NO_SOLUTION
    } else {
        EXIT_OK
    }
}

pub fn price(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (id, t) = cfg.model()?;
    let payoff = cfg.payoff()?;
    let (rule, fallback) = cfg.rule()?;
    let mc = cfg.mc()?;
    let sol = solve(&t, rule)?;
    let est = match (sol.girsanov(), fallback) {
        (Some(g), _) => Some(price_mc(&apply_girsanov(&t, &g)?, &payoff, &mc, MeasureId::Changed(g))?),
        (None, Fallback::Original) => Some(price_mc(&t, &payoff, &mc, MeasureId::Original)?),
        (None, Fallback::None) => None,
    };
    let mut table = Table::new(PRICE_HEADER);
    table.push(vec![
        id,
        rule_label(rule),
        sol.status.as_str().into(),
        num(sol.parameter),
        num(est.as_ref().map(|e| e.price)),
        num(est.as_ref().map(|e| e.std_err)),
        est.as_ref().map(|e| e.paths.to_string()).unwrap_or_default(),
        mc.seed.to_string(),
    ]);
    let file = table.write(out, "price.csv")?;
    Ok(Outcome { code: status_code(sol.status), files: vec![file] })
}

pub fn esscher(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (id, t) = cfg.model()?;
    let sol = solve_esscher(&t)?;
    let mut table = Table::new(ESSCHER_HEADER);
    table.push(vec![
        id,
        sol.status.as_str().into(),
        num(sol.parameter),
        f(sol.residual),
        f(sol.alpha),
        num(sol.limit_derivative),
    ]);
    let file = table.write(out, "esscher.csv")?;
    Ok(Outcome { code: status_code(sol.status), files: vec![file] })
}

pub fn qopt(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (id, t) = cfg.model()?;
    let (rule, _) = cfg.rule()?;
    let MeasureKind::Qopt(q) = rule else {
        return Err(crate::config::config_err(anyhow!("qopt needs [measure] rule = \"qopt\" with q")));
    };
    let sol = solve_qopt(&t, q)?;
    let mut table = Table::new(QOPT_HEADER);
    table.push(vec![id, f(q.q()), sol.status.as_str().into(), num(sol.parameter), f(sol.residual), num(sol.i_q)]);
    let file = table.write(out, "qopt.csv")?;
    Ok(Outcome { code: status_code(sol.status), files: vec![file] })
}

pub fn wiener_hopf(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (id, t) = cfg.model()?;
    let mc = cfg.mc()?;
    let rate = cfg.exp_rate()?;
    let (label, status, param, tq) = match cfg.measure {
        Some(_) => {
            let (rule, _) = cfg.rule()?;
            let sol = solve(&t, rule)?;
            let tq = match sol.girsanov() {
                Some(g) => Some(apply_girsanov(&t, &g)?),
                None => None,
            };
            (rule_label(rule), sol.status, sol.parameter, tq)
        }
        None => ("none".into(), SolutionStatus::EquivalentMartingale, None, Some(t.clone())),
    };
    let est = match &tq {
        Some(tq) => Some(wiener_hopf_check(tq, rate, &mc)?),
        None => None,
    };
    let mut table = Table::new(WIENER_HOPF_HEADER);
    table.push(vec![
        id,
        label,
        status.as_str().into(),
        num(param),
        f(rate),
        num(est.as_ref().map(|e| e.sup_mean)),
        num(est.as_ref().map(|e| e.inf_mean)),
        num(est.as_ref().map(|e| e.product)),
        num(est.as_ref().map(|e| e.std_err)),
        est.as_ref().map(|e| e.paths.to_string()).unwrap_or_default(),
        mc.seed.to_string(),
    ]);
    let file = table.write(out, "wiener_hopf.csv")?;
    Ok(Outcome { code: status_code(status), files: vec![file] })
}

pub fn hypotheses_table(r: &HypothesisReport) -> Table {
    let mut t = Table::new(HYPOTHESES_HEADER);
    let cell = |v: &std::result::Result<f64, String>| match v {
        Ok(x) => (f(*x), String::new()),
        Err(e) => (String::new(), e.clone()),
    };
    for c in &r.conditions {
        let (lim, lim_err) = cell(&c.limit);
        for ((n, v), (_, d)) in c.values.iter().zip(c.deviations()) {
            let (val, err) = cell(v);
            let err = if err.is_empty() { lim_err.clone() } else { err };
            t.push(vec![
                r.sequence.clone(),
                c.id.clone(),
                c.control.to_string(),
                n.to_string(),
                val,
                lim.clone(),
                num(d),
                err,
            ]);
        }
    }
    t
}

pub fn regimes_table(sequence: &str, r: &RegimeClassification) -> Table {
    let mut t = Table::new(REGIMES_HEADER);
    let mut row = |q: &str, at: String, v: Option<f64>| {
        t.push(vec![
            sequence.into(),
            rule_label(r.rule),
            r.tag.as_str().into(),
            q.into(),
            at,
            num(v),
            r.note.clone(),
        ]);
    };
    row("classification", String::new(), None);
    if let Some(a) = r.alpha {
        row("alpha", String::new(), Some(a));
    }
    for (u, v) in &r.probes {
        row("psi_hat_prime", f(*u), Some(*v));
    }
    if let Some(v) = r.limit_derivative {
        row("psi_hat_prime_at_alpha", num(r.alpha), Some(v));
    }
    for (n, v) in &r.iq_trajectory {
        row("iq", n.to_string(), Some(*v));
    }
    if let Some(v) = r.iq_limit {
        row("iq_limit", String::new(), Some(v));
    }
    if let Some(v) = r.jump {
        row("jump", String::new(), Some(v));
    }
    t
}

pub fn prices_table(r: &ConvergenceReport) -> Table {
    let mut t = Table::new(PRICES_HEADER);
    for p in &r.points {
        t.push(vec![
            p.n.to_string(),
            num(p.estimate.as_ref().map(|e| e.price)),
            num(p.estimate.as_ref().map(|e| e.std_err)),
            num(p.gap),
            p.status.clone(),
            num(p.parameter),
            p.within.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    if let Some(l) = &r.limit {
        let (v, se) = l.reference();
        t.push(vec![
            "limit".into(),
            f(v),
            f(se),
            String::new(),
            l.measure.as_str().into(),
            f(l.parameter),
            String::new(),
        ]);
        t.push(vec![
            "limit_mc".into(),
            f(l.mc.price),
            f(l.mc.std_err),
            String::new(),
            l.measure.as_str().into(),
            f(l.parameter),
            String::new(),
        ]);
    }
    if let Some(e) = &r.limit_model_price {
        let param = match e.measure {
            MeasureId::Changed(g) => Some(g.beta),
            MeasureId::Original => None,
        };
        t.push(vec![
            "limit_model".into(),
            f(e.price),
            f(e.std_err),
            String::new(),
            "limit_martingale".into(),
            num(param),
            String::new(),
        ]);
    }
    if let Some(v) = r.remark_call {
        t.push(vec![
            "remark_call".into(),
            f(v),
            String::new(),
            String::new(),
            "experimental".into(),
            String::new(),
            String::new(),
        ]);
    }
    t
}

pub fn converge(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let seq = cfg.sequence()?;
    let payoff = cfg.payoff()?;
    let (rule, _) = cfg.rule()?;
    let mc = cfg.mc()?;
    let mut files = vec![hypotheses_table(&check_hypotheses(&seq)).write(out, "hypotheses.csv")?];
    let regime = classify_regime(&seq, rule)?;
    files.push(regimes_table(seq.name(), &regime).write(out, "regimes.csv")?);
    let report = run_convergence_experiment(&seq, &payoff, rule, &mc)?;
    files.push(prices_table(&report).write(out, "prices.csv")?);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let code = if report.points.iter().any(|p| p.estimate.is_some()) {
        EXIT_OK
    } else if report.points.iter().all(|p| p.status == SolutionStatus::NoSolution.as_str()) {
        EXIT_NO_SOLUTION
    } else {
        EXIT_NUMERICAL
    };
    Ok(Outcome { code, files })
}

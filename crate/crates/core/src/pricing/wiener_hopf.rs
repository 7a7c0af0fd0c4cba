use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::measure_change::martingale_residual;
use crate::pricing::sampler::{Draws, PathModel};
use crate::pricing::stats::PairMoments;
use crate::pricing::{lane_rng, McConfig};

const MARTINGALE_TOL: f64 = 1e-6;

/// MC estimates of `E[e^{sup X̃}]`, `E[e^{inf X̃}]` over `[0, τ]`, `τ ~ Exp(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerHopfEstimate {
    pub sup_mean: f64,
    pub inf_mean: f64,
    /// Product of the two means; 1 for a martingale.
    pub product: f64,
    /// Delta-method standard error of `product`.
    pub std_err: f64,
    pub paths: usize,
}

impl WienerHopfEstimate {
    pub fn within(&self, k: f64, bias: f64) -> bool {
        (self.product - 1.0).abs() <= k * self.std_err + bias
    }
}

/// Simulate the running supremum and infimum of the discounted log-price up
/// to an independent exponential time and multiply the two exponential
/// moments.
///
/// Between jumps the Gaussian part is a Brownian bridge whose maximum and
/// minimum are drawn exactly, so there is no grid bias; jumps (all of them,
/// NIG components included) come from the small-jump-truncated table.
pub fn wiener_hopf_check(t: &LevyTriplet, q: f64, cfg: &McConfig) -> Result<WienerHopfEstimate> {
    cfg.validate()?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponential rate must be > 0, got {q}")));
    }
    let res = martingale_residual(t)?;
    if res.abs() > MARTINGALE_TOL {
        return Err(Error::NonMartingale(res));
    }
    // Typical horizon for the jump budget: E[τ] = 1/q.
    let model = PathModel::build(t, cfg.model_options(1.0 / q, false))?;
    let lambda = model.jumps.intensity();
    let s = model.sigma;

    let lanes: Vec<PairMoments> = cfg
        .lane_units()
        .into_par_iter()
        .enumerate()
        .map(|(lane, units)| {
            let mut rng = lane_rng(cfg.seed, lane);
            let mut acc = PairMoments::default();
            let run = |d: &mut Draws<_>| -> (f64, f64) {
                let tau = d.exponential() / q;
                let (mut now, mut x, mut hi, mut lo) = (0.0, 0.0f64, 0.0f64, 0.0f64);
                loop {
                    let next = if lambda > 0.0 { now + d.exponential() / lambda } else { f64::INFINITY };
                    let end = next.min(tau);
                    let dt = end - now;
                    let x1 = x + model.drift * dt + if s > 0.0 { s * dt.sqrt() * d.normal() } else { 0.0 };
                    let (bmax, bmin) = if s > 0.0 && dt > 0.0 {
                        let gap = x1 - x;
                        let v = 2.0 * s * s * dt;
                        let up = (gap * gap - v * d.uniform().ln()).sqrt();
                        let down = (gap * gap - v * d.uniform().ln()).sqrt();
                        (0.5 * (x + x1 + up), 0.5 * (x + x1 - down))
                    } else {
                        (x.max(x1), x.min(x1))
                    };
                    hi = hi.max(bmax);
                    lo = lo.min(bmin);
                    x = x1;
                    if end >= tau {
                        break;
                    }
                    x += model.jumps.sample(d);
                    hi = hi.max(x);
                    lo = lo.min(x);
                    now = end;
                }
                (hi.exp(), lo.exp())
            };
            for _ in 0..units {
                if cfg.antithetic {
                    let mut twin = rng.clone();
                    let (a1, b1) = run(&mut Draws::new(&mut rng, false));
                    let (a2, b2) = run(&mut Draws::new(&mut twin, true));
                    acc.push(0.5 * (a1 + a2), 0.5 * (b1 + b2));
                } else {
                    let (a, b) = run(&mut Draws::new(&mut rng, false));
                    acc.push(a, b);
                }
            }
            acc
        })
        .collect();
    let mut m = PairMoments::default();
    for l in &lanes {
        m.merge(l);
    }
    let (ma, mb) = (m.a.mean(), m.b.mean());
    let n = m.a.count() as f64;
    let var = if n > 0.0 {
        (mb * mb * m.a.variance() + ma * ma * m.b.variance() + 2.0 * ma * mb * m.covariance()) / n
    } else {
        0.0
    };
    let per = if cfg.antithetic { 2 } else { 1 };
    Ok(WienerHopfEstimate {
        sup_mean: ma,
        inf_mean: mb,
        product: ma * mb,
        std_err: var.max(0.0).sqrt(),
        paths: m.a.count() as usize * per,
    })
}

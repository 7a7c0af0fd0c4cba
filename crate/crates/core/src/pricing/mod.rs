//! Monte Carlo and Fourier pricing of exponential Lévy models.
//!
//! Paths are generated in a fixed number of lanes, each with its own
//! ChaCha8 stream derived from `(seed, lane)`. Lane results are reduced in
//! lane order, so estimates do not depend on the rayon thread count.

mod fourier;
mod payoff;
mod sampler;
mod stats;
mod wiener_hopf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy_core::LevyTriplet;
use crate::measure_change::GirsanovSpec;

pub use fourier::{price_fourier_european, FourierConfig};
pub use payoff::{PayoffKind, PayoffSpec, Tabulated};
pub use stats::{Moments, PairMoments};
pub use wiener_hopf::{wiener_hopf_check, WienerHopfEstimate};

use sampler::{Draws, ModelOptions, PathModel};

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    /// Time steps for path-dependent payoffs; Europeans always use one step.
    pub steps: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Jumps below this size are replaced by a Brownian motion.
    pub small_jump_cutoff: f64,
    /// Number of independent RNG streams; fixes the reduction order.
    pub lanes: usize,
    /// Raise the cutoff until the expected jump count per path is at most this.
    pub jump_budget: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            steps: 64,
            seed: 0,
            antithetic: false,
            small_jump_cutoff: 1e-3,
            lanes: 8,
            jump_budget: Some(256.0),
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidParameter("paths must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if self.lanes == 0 {
            return Err(Error::InvalidParameter("lanes must be >= 1".into()));
        }
        if !(self.small_jump_cutoff > 0.0 && self.small_jump_cutoff <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "small-jump cutoff must lie in (0, 1], got {}",
                self.small_jump_cutoff
            )));
        }
        if let Some(b) = self.jump_budget {
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("jump budget must be > 0, got {b}")));
            }
        }
        Ok(())
    }

    fn model_options(&self, horizon: f64, exact_nig: bool) -> ModelOptions {
        ModelOptions { cutoff: self.small_jump_cutoff, jump_budget: self.jump_budget, horizon, exact_nig }
    }

    // Sampling units (paths, or antithetic pairs) assigned to each lane.
    fn lane_units(&self) -> Vec<usize> {
        let units = if self.antithetic { self.paths.div_ceil(2) } else { self.paths };
        let l = self.lanes;
        (0..l).map(|i| units / l + usize::from(i < units % l)).collect()
    }
}

/// Which measure a pricing triplet lives under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureId {
    /// The model's own (historical) measure.
    Original,
    /// Image of the original triplet under a Girsanov change.
    Changed(GirsanovSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_err: f64,
    pub paths: usize,
    pub measure: MeasureId,
    /// Small-jump cutoff used by the simulator (0 if none).
    pub cutoff: f64,
}

impl PriceEstimate {
    /// `|price − target| ≤ k·SE + bias`.
    pub fn agrees_with(&self, target: f64, k: f64, bias: f64) -> bool {
        (self.price - target).abs() <= k * self.std_err + bias
    }
}

/// Discounted log-price increments, `paths × steps`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub steps: usize,
    pub dt: f64,
    pub s0: f64,
    increments: Vec<f64>,
    jumps: Vec<u32>,
}

impl PathBatch {
    pub fn len(&self) -> usize {
        self.increments.len() / self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self, path: usize) -> &[f64] {
        &self.increments[path * self.steps..(path + 1) * self.steps]
    }

    /// Jumps drawn from the compound-Poisson table (exact NIG parts excluded).
    pub fn jump_count(&self, path: usize) -> u32 {
        self.jumps[path]
    }

    pub fn terminal_log(&self, path: usize) -> f64 {
        self.increments(path).iter().sum()
    }

    /// Discounted prices `S̃` on the grid, starting with `S0`.
    pub fn prices(&self, path: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps + 1);
        let mut x = 0.0;
        out.push(self.s0);
        for dx in self.increments(path) {
            x += dx;
            out.push(self.s0 * x.exp());
        }
        out
    }
}

fn lane_rng(seed: u64, lane: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane as u64);
    rng
}

/// Sample discounted log-price paths on a uniform grid over `[0, horizon]`.
///
/// With `antithetic`, paths come in consecutive mirrored pairs.
pub fn simulate_paths(t: &LevyTriplet, cfg: &McConfig, horizon: f64) -> Result<PathBatch> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let model = PathModel::build(t, cfg.model_options(horizon, true))?;
    let steps = cfg.steps;
    let dt = horizon / steps as f64;
    let lanes: Vec<(Vec<f64>, Vec<u32>)> = cfg
        .lane_units()
        .into_par_iter()
        .enumerate()
        .map(|(lane, units)| {
            let mut rng = lane_rng(cfg.seed, lane);
            let per = if cfg.antithetic { 2 } else { 1 };
            let mut out = vec![0.0; units * per * steps];
            let mut jumps = Vec::with_capacity(units * per);
            for chunk in out.chunks_mut(per * steps) {
                if cfg.antithetic {
                    let mut twin = rng.clone();
                    let (a, b) = chunk.split_at_mut(steps);
                    jumps.push(model.fill(dt, a, &mut Draws::new(&mut rng, false)));
                    jumps.push(model.fill(dt, b, &mut Draws::new(&mut twin, true)));
                } else {
                    jumps.push(model.fill(dt, chunk, &mut Draws::new(&mut rng, false)));
                }
            }
            (out, jumps)
        })
        .collect();
    let (mut increments, mut jumps) = (Vec::new(), Vec::new());
    for (inc, j) in lanes {
        increments.extend(inc);
        jumps.extend(j);
    }
    Ok(PathBatch { steps, dt, s0: t.s0(), increments, jumps })
}

/// `E[g(S̃)]` under the measure whose triplet is `t`.
///
/// `t` should already be a martingale triplet (e.g. from `apply_girsanov`)
/// unless an expectation under a non-martingale measure is intended.
pub fn price_mc(t: &LevyTriplet, payoff: &PayoffSpec, cfg: &McConfig, measure: MeasureId) -> Result<PriceEstimate> {
    cfg.validate()?;
    let horizon = payoff.maturity();
    let model = PathModel::build(t, cfg.model_options(horizon, true))?;
    let steps = if payoff.is_path_dependent() { cfg.steps } else { 1 };
    let dt = horizon / steps as f64;
    let s0 = t.s0();
    let discount = (-t.r() * horizon).exp();

    let eval = |incs: &[f64], prices: &mut Vec<f64>| {
        prices.clear();
        prices.push(s0);
        let mut x = 0.0;
        for dx in incs {
            x += dx;
            prices.push(s0 * x.exp());
        }
        payoff.evaluate(prices, discount)
    };

    let lanes: Vec<Moments> = cfg
        .lane_units()
        .into_par_iter()
        .enumerate()
        .map(|(lane, units)| {
            let mut rng = lane_rng(cfg.seed, lane);
            let mut m = Moments::default();
            let mut a = vec![0.0; steps];
            let mut b = vec![0.0; steps];
            let mut prices = Vec::with_capacity(steps + 1);
            for _ in 0..units {
                if cfg.antithetic {
                    let mut twin = rng.clone();
                    model.fill(dt, &mut a, &mut Draws::new(&mut rng, false));
                    model.fill(dt, &mut b, &mut Draws::new(&mut twin, true));
                    let v = 0.5 * (eval(&a, &mut prices) + eval(&b, &mut prices));
                    m.push(v);
                } else {
                    model.fill(dt, &mut a, &mut Draws::new(&mut rng, false));
                    m.push(eval(&a, &mut prices));
                }
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &lanes {
        total.merge(m);
    }
    let per = if cfg.antithetic { 2 } else { 1 };
    Ok(PriceEstimate {
        price: total.mean(),
        std_err: total.std_err(),
        paths: total.count() as usize * per,
        measure,
        cutoff: model.cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_core::LevyMeasure;

    fn small(paths: usize) -> McConfig {
        McConfig { paths, lanes: 3, ..McConfig::default() }
    }

    #[test]
    fn config_validation() {
        assert!(McConfig { paths: 0, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { steps: 0, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { small_jump_cutoff: 1.5, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { small_jump_cutoff: 0.0, ..McConfig::default() }.validate().is_err());
        assert!(McConfig::default().validate().is_ok());
    }

    #[test]
    fn lane_split_covers_all_units() {
        let c = McConfig { paths: 11, lanes: 4, antithetic: true, ..McConfig::default() };
        assert_eq!(c.lane_units().iter().sum::<usize>(), 6);
        let c = McConfig { paths: 11, lanes: 4, ..McConfig::default() };
        assert_eq!(c.lane_units(), vec![3, 3, 3, 2]);
    }

    #[test]
    fn constant_payoff_is_exact() {
        let t = LevyTriplet::nig(1.0, 0.0, 1.0, 0.0).unwrap();
        let table = Tabulated::new(vec![(0.0, 0.25)]).unwrap();
        let p = PayoffSpec::new(PayoffKind::BoundedCustom(table), 1.0).unwrap();
        let e = price_mc(&t, &p, &small(1000), MeasureId::Original).unwrap();
        assert_eq!(e.price, 0.25);
        assert_eq!(e.std_err, 0.0);
        assert_eq!(e.paths, 1000);
    }

    #[test]
    fn batch_shape_and_antithetic_mirror() {
        let t = LevyTriplet::new(-0.5, 1.0, LevyMeasure::Zero).unwrap();
        let cfg = McConfig { paths: 6, steps: 4, antithetic: true, lanes: 2, ..McConfig::default() };
        let b = simulate_paths(&t, &cfg, 1.0).unwrap();
        assert_eq!(b.len(), 6);
        // pure Brownian: mirrored increments are reflections about the drift
        let drift = -0.5 * b.dt;
        for (x, y) in b.increments(0).iter().zip(b.increments(1)) {
            assert!((x - drift + (y - drift)).abs() < 1e-14);
        }
        assert_eq!(b.prices(0).len(), 5);
    }
}

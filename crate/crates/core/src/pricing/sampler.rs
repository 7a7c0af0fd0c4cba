//! Increment samplers for exponential Lévy paths.
//!
//! A triplet is split into a Gaussian part, exactly simulated NIG
//! components (inverse-Gaussian subordination), and a finite-activity jump
//! table. Infinite-activity components that are not exact have their jumps
//! below a cutoff `ε` replaced by a Brownian motion of equal variance, with
//! a drift that keeps `E[e^{X_t}]` unchanged.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::levy_core::integrate::exp_m1_m_lin;
use crate::levy_core::{levy_integral, truncation, LevyMeasure, LevyTriplet, Region};
use crate::quad::{adaptive, IntegrationConfig};

/// Random draws that can be replayed mirrored (`u ↦ 1−u`, `z ↦ −z`).
pub(crate) struct Draws<'a, R: Rng> {
    rng: &'a mut R,
    mirror: bool,
}

impl<'a, R: Rng> Draws<'a, R> {
    pub fn new(rng: &'a mut R, mirror: bool) -> Self {
        Draws { rng, mirror }
    }

    pub fn uniform(&mut self) -> f64 {
        let u: f64 = self.rng.sample(Open01);
        if self.mirror {
            1.0 - u
        } else {
            u
        }
    }

    pub fn normal(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        if self.mirror {
            -z
        } else {
            z
        }
    }

    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }
}

/// Inverse-Gaussian time change of an NIG component.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NigSubordinated {
    beta: f64,
    delta: f64,
    gamma: f64,
}

impl NigSubordinated {
    /// `βτ + W_τ` with `τ ~ IG(δ·dt/γ, (δ·dt)²)`; `γ = 0` is the Lévy first-passage law.
    pub fn increment<R: Rng>(&self, dt: f64, d: &mut Draws<R>) -> f64 {
        let a = self.delta * dt;
        let z = d.normal();
        let tau = if self.gamma == 0.0 {
            a * a / (z * z)
        } else {
            let mu = a / self.gamma;
            let lambda = a * a;
            // Michael–Schucany–Haas, root taken in cancellation-free form.
            let y = mu * z * z;
            let x = 2.0 * lambda * mu / (2.0 * lambda + y + (y * (4.0 * lambda + y)).sqrt());
            if d.uniform() <= mu / (mu + x) {
                x
            } else {
                mu * mu / x
            }
        };
        self.beta * tau + tau.sqrt() * d.normal()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Atom(f64),
    /// Density `∝ |x|^p` on `sign·[a, b]`.
    Power { sign: f64, a: f64, b: f64, p: f64 },
    /// Density `∝ e^{−rate·x}` on `[lo, hi]`.
    Exp { lo: f64, hi: f64, rate: f64 },
    Uniform { sign: f64, a: f64, b: f64 },
}

impl Cell {
    fn sample(&self, u: f64) -> f64 {
        match *self {
            Cell::Atom(x) => x,
            Cell::Power { sign, a, b, p } => {
                let k = p + 1.0;
                let r = b / a;
                let x = if k.abs() < 1e-9 {
                    a * r.powf(u)
                } else {
                    a * (1.0 + u * (r.powf(k) - 1.0)).powf(1.0 / k)
                };
                sign * x.clamp(a, b)
            }
            Cell::Exp { lo, hi, rate } => {
                if rate == 0.0 {
                    lo + u * (hi - lo)
                } else {
                    // inverse of (1 − e^{−rate(x−lo)})/(1 − e^{−rate(hi−lo)})
                    let span = (-rate * (hi - lo)).exp_m1();
                    (lo - (u * span).ln_1p() / rate).clamp(lo, hi)
                }
            }
            Cell::Uniform { sign, a, b } => sign * (a + u * (b - a)),
        }
    }
}

/// Compound-Poisson jump law tabulated by cells with cumulative intensities.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct JumpTable {
    cells: Vec<Cell>,
    cum: Vec<f64>,
}

const SHAPE_TOL: f64 = 1e-4;
const MAX_DEPTH: u32 = 48;
// Jumps below e^{-60} are indistinguishable from total loss.
const NEG_CAP: f64 = 60.0;
const POS_CAP: f64 = 700.0;
// Cells whose density stays below e^{-600} carry no mass in double precision.
const NEGLIGIBLE_LN: f64 = -600.0;

impl JumpTable {
    pub fn intensity(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn sample<R: Rng>(&self, d: &mut Draws<R>) -> f64 {
        let total = self.intensity();
        let target = d.uniform() * total;
        let i = self.cum.partition_point(|&c| c <= target).min(self.cells.len() - 1);
        self.cells[i].sample(d.uniform())
    }

    fn push(&mut self, cell: Cell, mass: f64) {
        if mass > 0.0 && mass.is_finite() {
            self.cum.push(self.intensity() + mass);
            self.cells.push(cell);
        }
    }

    fn add_atoms(&mut self, atoms: &[(f64, f64)]) {
        for &(x, m) in atoms {
            self.push(Cell::Atom(x), m);
        }
    }

    fn add_trunc_exp(&mut self, scale: f64, rate: f64, lo: f64, hi: f64) {
        let mass = if rate == 0.0 {
            scale * (hi - lo)
        } else {
            scale * (-rate * lo).exp() * -(-rate * (hi - lo)).exp_m1() / rate
        };
        self.push(Cell::Exp { lo, hi, rate }, mass);
    }

    /// Tabulate `nu` restricted to `|x| ≥ eps`.
    fn add_continuous(&mut self, nu: &LevyMeasure, eps: f64, family: &str) -> Result<()> {
        let sides = nu.continuous_sides();
        let breaks = nu.breakpoints();
        for (sign, side) in [(-1.0, sides.neg), (1.0, sides.pos)] {
            let Some((lo, hi)) = side else { continue };
            let a0 = lo.max(eps);
            if a0 >= hi {
                continue;
            }
            let lf = |y: f64| nu.ln_density(sign * y);
            let cap = if sign > 0.0 { POS_CAP } else { NEG_CAP };
            let mut end = hi.min(cap);
            let mut lump = 0.0;
            if hi > cap {
                // whatever lies beyond the cap is lumped at the cap
                let region = if sign > 0.0 { Region::Ge(cap) } else { Region::Between(f64::NEG_INFINITY, -cap) };
                lump = levy_integral(nu, |_| 1.0, region, &IntegrationConfig::default())?;
                if sign > 0.0 && lump > 1e-12 {
                    return Err(Error::Unsupported(format!(
                        "{family} component: upward jump tail too heavy to simulate"
                    )));
                }
                end = cap;
            }
            let mut knots: Vec<f64> = vec![a0];
            let mut x = a0 * 2.0;
            while x < end {
                knots.push(x);
                x *= 2.0;
            }
            knots.extend(breaks.iter().filter(|b| b.signum() == sign).map(|b| b.abs()).filter(|&b| b > a0 && b < end));
            knots.push(end);
            knots.sort_by(|p, q| p.total_cmp(q));
            knots.dedup();
            for w in knots.windows(2) {
                self.refine(&lf, sign, w[0], w[1], lf(w[0]), lf(w[1]), 0);
            }
            if lump > 0.0 {
                self.push(Cell::Atom(sign * cap), lump);
            }
        }
        Ok(())
    }

    // Split `[a, b]` until ln ν is linear in ln|x| to within SHAPE_TOL.
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, lf: &dyn Fn(f64) -> f64, sign: f64, a: f64, b: f64, la: f64, lb: f64, depth: u32) {
        let m = (a * b).sqrt();
        let lm = lf(m);
        if la.max(lb).max(lm) < NEGLIGIBLE_LN {
            return;
        }
        let smooth = la.is_finite() && lb.is_finite() && lm.is_finite() && (lm - 0.5 * (la + lb)).abs() <= SHAPE_TOL;
        if (smooth && b <= 2.0 * a) || depth >= MAX_DEPTH || m <= a || m >= b {
            let f = |x: f64| lf(x).exp();
            let mass = match adaptive(&f, a, b, 0.0, 1e-10, 64) {
                Ok((v, _)) => v,
                Err(_) => 0.5 * (b - a) * (la.exp() + lb.exp()),
            };
            let cell = if smooth {
                Cell::Power { sign, a, b, p: (lb - la) / (b / a).ln() }
            } else {
                Cell::Uniform { sign, a, b }
            };
            self.push(cell, mass);
            return;
        }
        self.refine(lf, sign, a, m, la, lm, depth + 1);
        self.refine(lf, sign, m, b, lm, lb, depth + 1);
    }
}

/// How a triplet is turned into increments.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PathModel {
    /// Drift of the discounted log-price per unit time.
    pub drift: f64,
    /// Gaussian volatility, small-jump substitute included.
    pub sigma: f64,
    pub nig: Vec<NigSubordinated>,
    pub jumps: JumpTable,
    /// Small-jump cutoff actually used (0 when no approximation was needed).
    pub cutoff: f64,
}

/// Options for [`PathModel::build`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModelOptions {
    pub cutoff: f64,
    /// Expected jumps per path over the horizon that `ε` may not exceed.
    pub jump_budget: Option<f64>,
    pub horizon: f64,
    /// Simulate plain NIG components through the subordinator.
    pub exact_nig: bool,
}

impl PathModel {
    pub fn build(t: &LevyTriplet, opt: ModelOptions) -> Result<Self> {
        let cfg = IntegrationConfig::default();
        let mut drift = t.b() - t.r();
        let mut nig = Vec::new();
        let mut jumps = JumpTable::default();
        let mut generic = Vec::new();
        let mut generic_names = Vec::new();

        for comp in t.nu().components() {
            match &comp {
                LevyMeasure::Nig(n) if opt.exact_nig => {
                    drift -= n.trunc_mean();
                    nig.push(NigSubordinated { beta: n.beta(), delta: n.delta(), gamma: n.gamma() });
                }
                LevyMeasure::CompoundPoisson(_) => {
                    let atoms = comp.atoms();
                    drift -= atoms.iter().map(|&(x, m)| m * truncation(x)).sum::<f64>();
                    jumps.add_atoms(&atoms);
                }
                LevyMeasure::TruncExp(te) => {
                    drift -= levy_integral(&comp, truncation, Region::AbsLe(1.0), &cfg)?;
                    jumps.add_trunc_exp(te.scale(), te.rate(), te.lo(), te.hi());
                }
                LevyMeasure::Zero => {}
                other => {
                    generic_names.push(other.family_name());
                    generic.push(other.clone());
                }
            }
        }

        let mut sigma2 = t.c();
        let mut cutoff = 0.0;
        if !generic.is_empty() {
            let nu = LevyMeasure::sum(generic);
            let family = generic_names.join("+");
            let eps = if nu.is_singular_at_zero() || reaches_zero(&nu) {
                choose_cutoff(&nu, jumps.intensity(), opt, &cfg)?
            } else {
                0.0
            };
            if eps > 0.0 {
                let small_var = levy_integral(&nu, |x| x * x, Region::AbsLe(eps), &cfg)?;
                let small_exp = levy_integral(&nu, exp_m1_m_lin, Region::AbsLe(eps), &cfg)?;
                sigma2 += small_var;
                drift += small_exp - 0.5 * small_var;
                cutoff = eps;
            }
            if eps < 1.0 {
                let mid = levy_integral(&nu, |x| x, Region::Between(-1.0, -eps.max(f64::MIN_POSITIVE)), &cfg)?
                    + levy_integral(&nu, |x| x, Region::Between(eps.max(f64::MIN_POSITIVE), 1.0), &cfg)?;
                drift -= mid;
            }
            jumps.add_continuous(&nu, eps, &family)?;
        }

        if !(drift.is_finite() && sigma2.is_finite()) {
            return Err(Error::Unsupported("path model has non-finite drift or variance".into()));
        }
        Ok(PathModel { drift, sigma: sigma2.max(0.0).sqrt(), nig, jumps, cutoff })
    }

    /// Discounted log-price increments on equal steps of `dt`; returns the
    /// number of table jumps.
    pub fn fill<R: Rng>(&self, dt: f64, out: &mut [f64], d: &mut Draws<R>) -> u32 {
        let sd = self.sigma * dt.sqrt();
        for x in out.iter_mut() {
            *x = self.drift * dt;
            if sd > 0.0 {
                *x += sd * d.normal();
            }
            for n in &self.nig {
                *x += n.increment(dt, d);
            }
        }
        let lambda = self.jumps.intensity();
        let mut count = 0;
        if lambda > 0.0 {
            let horizon = dt * out.len() as f64;
            let mut t = d.exponential() / lambda;
            while t < horizon {
                let k = ((t / dt) as usize).min(out.len() - 1);
                out[k] += self.jumps.sample(d);
                count += 1;
                t += d.exponential() / lambda;
            }
        }
        count
    }
}

// Continuous mass arbitrarily close to zero on some side.
fn reaches_zero(nu: &LevyMeasure) -> bool {
    let s = nu.continuous_sides();
    s.neg.is_some_and(|r| r.0 == 0.0) || s.pos.is_some_and(|r| r.0 == 0.0)
}

fn choose_cutoff(nu: &LevyMeasure, other_rate: f64, opt: ModelOptions, cfg: &IntegrationConfig) -> Result<f64> {
    let eps0 = opt.cutoff;
    let Some(budget) = opt.jump_budget else { return Ok(eps0) };
    let rate = |e: f64| levy_integral(nu, |_| 1.0, Region::AbsGe(e), cfg);
    let jumps = |e: f64| -> Result<f64> { Ok((rate(e)? + other_rate) * opt.horizon) };
    if jumps(eps0)? <= budget {
        return Ok(eps0);
    }
    if jumps(1.0)? > budget {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (eps0.ln(), 0.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if jumps(mid.exp())? > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_cell_inverse_cdf_hits_quantiles() {
        // density ∝ x^{-1.5} on [1, 2]: CDF(x) = (1 − x^{-1/2}) / (1 − 2^{-1/2})
        let c = Cell::Power { sign: 1.0, a: 1.0, b: 2.0, p: -1.5 };
        for u in [0.1, 0.5, 0.9] {
            let x = c.sample(u);
            let cdf = (1.0 - x.powf(-0.5)) / (1.0 - 2f64.powf(-0.5));
            assert!((cdf - u).abs() < 1e-12);
        }
        let e = Cell::Exp { lo: 1.0, hi: 2.0, rate: 3.0 };
        let x = e.sample(0.5);
        let cdf = -(-3.0 * (x - 1.0)).exp_m1() / -(-3.0f64).exp_m1();
        assert!((cdf - 0.5).abs() < 1e-12);
    }

    #[test]
    fn table_intensity_matches_quadrature() {
        let nu = LevyMeasure::cgmy(1.0, 2.0, 3.0, 0.5).unwrap();
        let mut t = JumpTable::default();
        t.add_continuous(&nu, 1e-3, "cgmy").unwrap();
        let exact = levy_integral(&nu, |_| 1.0, Region::AbsGe(1e-3), &IntegrationConfig::default()).unwrap();
        assert!((t.intensity() / exact - 1.0).abs() < 1e-8, "{} vs {exact}", t.intensity());
    }

    #[test]
    fn ig_subordinator_mean() {
        // E[βτ] = β·δ·dt/γ, E[τ] = δ·dt/γ for NIG(α=2, β=1, δ=1): γ = √3
        let s = NigSubordinated { beta: 0.0, delta: 1.0, gamma: 3f64.sqrt() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = Draws::new(&mut rng, false);
        let n = 200_000;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = s.increment(1.0, &mut d);
            sum2 += x * x;
        }
        // β = 0: Var X = E τ = δ/γ
        let var = sum2 / n as f64;
        assert!((var - 1.0 / 3f64.sqrt()).abs() < 0.01, "{var}");
    }
}

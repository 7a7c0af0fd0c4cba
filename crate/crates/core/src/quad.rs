//! Adaptive Gauss–Kronrod (7/15) quadrature over real or complex integrands,
//! plus the geometric cutoff scheme used for Lévy-measure integrals.

use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values the integrator can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    fn zero() -> Self;
    fn norm(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Why a quadrature attempt failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadFailure {
    /// Integrand produced an infinite or NaN value.
    NonFinite,
    /// Subdivision budget exhausted.
    NoConvergence { estimate: f64, error_bound: f64 },
    /// Estimates grow without bound across cutoffs.
    Divergent { partial: f64 },
}

/// Single 15-point Kronrod rule with a QUADPACK-style error estimate.
/// Returns `(estimate, error, ∫|f|, all values finite)`.
pub fn gk15<T: QuadValue>(f: &dyn Fn(f64) -> T, a: f64, b: f64) -> (T, f64, f64, bool) {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();

    let fc = f(centr);
    let mut finite = fc.is_finite_value();
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = fc.norm() * WGK[7];
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        finite &= f1.is_finite_value() && f2.is_finite_value();
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += (f1 + f2) * WG[j];
        resk += (f1 + f2) * WGK[jtw];
        resabs += (f1.norm() + f2.norm()) * WGK[jtw];
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        finite &= f1.is_finite_value() && f2.is_finite_value();
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += (f1 + f2) * WGK[jtwm1];
        resabs += (f1.norm() + f2.norm()) * WGK[jtwm1];
    }
    if !finite {
        return (resk * hlgth, f64::INFINITY, f64::INFINITY, false);
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).norm() + (fv2[j] - reskh).norm());
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut abserr = ((resk - resg) * hlgth).norm();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (200.0 * abserr / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        abserr = abserr.max(50.0 * f64::EPSILON * resabs);
    }
    (result, abserr, resabs, true)
}

/// Globally adaptive bisection on `[a, b]` (finite).
pub fn adaptive<T: QuadValue>(
    f: &dyn Fn(f64) -> T,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<(T, f64), QuadFailure> {
    let (r, err, converged) = adaptive_impl(f, a, b, abs_tol, rel_tol, max_subdivisions)?;
    if converged {
        Ok((r, err))
    } else {
        Err(QuadFailure::NoConvergence { estimate: r.norm(), error_bound: err })
    }
}

// Best estimate and error bound after the subdivision budget, converged or not.
fn adaptive_best<T: QuadValue>(
    f: &dyn Fn(f64) -> T,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<(T, f64), QuadFailure> {
    adaptive_impl(f, a, b, abs_tol, rel_tol, max_subdivisions).map(|(r, e, _)| (r, e))
}

fn adaptive_impl<T: QuadValue>(
    f: &dyn Fn(f64) -> T,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<(T, f64, bool), QuadFailure> {
    if a == b {
        return Ok((T::zero(), 0.0, true));
    }
    let (r0, e0, a0, ok) = gk15(f, a, b);
    if !ok {
        return Err(QuadFailure::NonFinite);
    }
    // (lo, hi, estimate, error, ∫|f|)
    let mut intervals: Vec<(f64, f64, T, f64, f64)> = vec![(a, b, r0, e0, a0)];
    let mut total = r0;
    let mut err = e0;
    let mut resabs = a0;
    loop {
        // Accept at the tolerance, or once the error is at the rounding floor.
        let floor = 100.0 * f64::EPSILON * resabs;
        if err <= abs_tol.max(rel_tol * total.norm()).max(floor) {
            return Ok((total, err, true));
        }
        if intervals.len() >= max_subdivisions {
            return Ok((total, err, false));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, r, e, ra) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further; accept what we have.
            intervals.push((lo, hi, r, 0.0, ra));
            err -= e;
            continue;
        }
        let (r1, e1, a1, ok1) = gk15(f, lo, mid);
        let (r2, e2, a2, ok2) = gk15(f, mid, hi);
        if !(ok1 && ok2) {
            return Err(QuadFailure::NonFinite);
        }
        total = total - r + r1 + r2;
        err = err - e + e1 + e2;
        resabs = resabs - ra + a1 + a2;
        intervals.push((lo, mid, r1, e1, a1));
        intervals.push((mid, hi, r2, e2, a2));
        if !err.is_finite() || err < 0.0 {
            err = intervals.iter().map(|iv| iv.3).sum();
        }
    }
}

/// Tolerances for Lévy-measure integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Geometric cutoffs splitting `(0, 1]`; strictly increasing.
    pub inner_grid: Vec<f64>,
    /// Subdivision budget per grid piece.
    pub max_subdivisions: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            inner_grid: (0..=12).rev().map(|k| 10f64.powi(-k)).collect(),
            max_subdivisions: 400,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if self.inner_grid.is_empty() || self.inner_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err("cutoff grid must be non-empty and strictly increasing".into());
        }
        if self.inner_grid[0] <= 0.0 {
            return Err("cutoff grid must be positive".into());
        }
        if self.max_subdivisions == 0 {
            return Err("max_subdivisions must be positive".into());
        }
        Ok(())
    }
}

// Divergence: partial sums growing ×10 this many times in a row.
const GROWTH_RUNS: usize = 3;
// Divergence: this many consecutive non-decaying pieces (log-type divergence).
const FLAT_RUNS: usize = 8;
const FLAT_RATIO: f64 = 0.98;

/// Integrate `g` over `[lo, hi] ⊂ [0, ∞]` with geometric pieces: decades
/// below 1 (down to 0 if `lo == 0`), doublings above 1 (out to ∞ if `hi == ∞`).
pub fn integrate_half_line<T: QuadValue>(
    g: &dyn Fn(f64) -> T,
    lo: f64,
    hi: f64,
    extra_breaks: &[f64],
    cfg: &IntegrationConfig,
) -> Result<T, QuadFailure> {
    if hi <= lo {
        return Ok(T::zero());
    }
    let grid_min = cfg.inner_grid[0];
    let mut pts: Vec<f64> = Vec::new();
    if lo > 0.0 {
        pts.push(lo);
    }
    for &c in cfg.inner_grid.iter().chain(std::iter::once(&1.0)) {
        if c > lo && c < hi {
            pts.push(c);
        }
    }
    let mut x = 2.0;
    let finite_cap = if hi.is_finite() { hi } else { extra_breaks.iter().cloned().fold(1.0, f64::max) };
    while x < finite_cap {
        if x > lo {
            pts.push(x);
        }
        x *= 2.0;
    }
    for &e in extra_breaks {
        if e > lo && e < hi {
            pts.push(e);
        }
    }
    if hi.is_finite() {
        pts.push(hi);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if lo == 0.0 && pts.first().is_none_or(|&p| p > grid_min) {
        pts.insert(0, grid_min.min(hi));
    }

    let n_pieces = pts.len().max(1) as f64 + 4.0;
    let piece_abs = cfg.abs_tol / n_pieces;
    let piece_rel = cfg.rel_tol;

    let mut middle = T::zero();
    for w in pts.windows(2) {
        let (r, _) = adaptive(g, w[0], w[1], piece_abs, piece_rel, cfg.max_subdivisions)?;
        middle += r;
    }

    let mut total = middle;
    if lo == 0.0 {
        let top = pts.first().copied().unwrap_or(hi.min(grid_min));
        let tail = geometric_tail(g, top, 0.1, total, cfg, piece_abs)?;
        total += tail;
    }
    if hi.is_infinite() {
        let start = pts.last().copied().unwrap_or(lo.max(1.0)).max(1.0);
        let tail = geometric_tail(g, start, 2.0, total, cfg, piece_abs)?;
        total += tail;
    }
    Ok(total)
}

// Sum pieces [x, x·factor] (or [x·factor, x]) until the geometric remainder is negligible.
fn geometric_tail<T: QuadValue>(
    g: &dyn Fn(f64) -> T,
    start: f64,
    factor: f64,
    base: T,
    cfg: &IntegrationConfig,
    piece_abs: f64,
) -> Result<T, QuadFailure> {
    let mut sum = T::zero();
    let mut x = start;
    let mut prev_piece: Option<f64> = None;
    let mut prev_total = base.norm();
    let mut growth = 0;
    let mut flat = 0;
    let mut zeros = 0;
    let mut prev_rho: Option<f64> = None;
    let mut stable = 0;
    for _ in 0..1100 {
        let y = x * factor;
        let (a, b) = if factor > 1.0 { (x, y) } else { (y, x) };
        if !(y.is_finite() && y > 0.0) || a == b {
            break;
        }
        // Tail pieces only need accuracy relative to the running total.
        let abs = piece_abs.max(0.01 * cfg.rel_tol * (base + sum).norm());
        let piece = match adaptive(g, a, b, abs, cfg.rel_tol, cfg.max_subdivisions) {
            Ok((r, _)) => r,
            Err(QuadFailure::NonFinite) => {
                return Err(QuadFailure::Divergent { partial: (base + sum).norm() })
            }
            // Far out the integrand carries rounding noise; an error bound within
            // the overall budget is good enough.
            Err(QuadFailure::NoConvergence { .. }) => {
                let (r, err) = adaptive_best(g, a, b, abs, cfg.rel_tol, cfg.max_subdivisions)?;
                if err > 0.1 * cfg.abs_tol.max(cfg.rel_tol * (base + sum + r).norm()) {
                    return Err(QuadFailure::NoConvergence { estimate: (base + sum + r).norm(), error_bound: err });
                }
                r
            }
            Err(e) => return Err(e),
        };
        sum += piece;
        let total = (base + sum).norm();
        let pn = piece.norm();

        let piece_grew = prev_piece.is_some_and(|pp| pn > 10.0 * pp);
        if piece_grew && prev_total > cfg.abs_tol && total > 10.0 * prev_total {
            growth += 1;
            if growth >= GROWTH_RUNS {
                return Err(QuadFailure::Divergent { partial: total });
            }
        } else {
            growth = 0;
        }
        prev_total = total;

        if pn == 0.0 {
            zeros += 1;
            if zeros >= 2 {
                return Ok(sum);
            }
            prev_piece = Some(0.0);
            x = y;
            continue;
        }
        zeros = 0;
        let tol = 0.1 * cfg.abs_tol.max(cfg.rel_tol * total);
        match prev_piece {
            Some(pp) if pp > 0.0 => {
                let rho = pn / pp;
                if rho >= FLAT_RATIO && pn > 1e-3 * cfg.abs_tol {
                    flat += 1;
                    if flat >= FLAT_RUNS {
                        return Err(QuadFailure::Divergent { partial: total });
                    }
                } else {
                    flat = 0;
                }
                if rho < 0.9 {
                    let remainder = piece * (rho / (1.0 - rho));
                    // A stable ratio (power-law or exponential tail) makes the
                    // geometric remainder accurate even when it is not yet small.
                    let drift_err = prev_rho.map_or(f64::INFINITY, |pr: f64| {
                        pn * (rho - pr).abs() / ((1.0 - rho) * (1.0 - rho))
                    });
                    if remainder.norm() <= tol || (stable >= 2 && drift_err <= tol) {
                        sum += remainder;
                        return Ok(sum);
                    }
                    stable = match prev_rho {
                        Some(pr) if (rho - pr).abs() <= 1e-3 * rho => stable + 1,
                        _ => 0,
                    };
                }
                prev_rho = Some(rho);
            }
            _ => {}
        }
        prev_piece = Some(pn);
        x = y;
    }
    if factor > 1.0 {
        Err(QuadFailure::NoConvergence { estimate: (base + sum).norm(), error_bound: f64::INFINITY })
    } else {
        // Reached the bottom of the representable range.
        Ok(sum)
    }
}

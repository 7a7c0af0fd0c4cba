use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy_core::{levy_integral, truncation, LevyMeasure, LevyTriplet, Region};
use crate::quad::IntegrationConfig;

pub type Generator = Arc<dyn Fn(u32) -> Result<LevyTriplet> + Send + Sync>;

pub const DEFAULT_SCHEDULE: [u32; 6] = [1, 2, 4, 8, 16, 32];

/// Parameters of the CGMY sequence `CGMY(C=1, G, M + eps/n, Y)` with drift `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgmyParams {
    pub y: f64,
    pub g: f64,
    pub m: f64,
    /// `M_n = m + eps/n`; 0 gives a constant sequence.
    pub eps: f64,
    /// `None`: chosen so that the limit has martingale residual −0.1.
    pub drift: Option<f64>,
}

impl Default for CgmyParams {
    fn default() -> Self {
        CgmyParams { y: 0.0, g: 3.0, m: 3.0, eps: 1.0, drift: None }
    }
}

/// Built-in model sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceTag {
    /// `b·t + NIG(n,0,n) + NIG(¼,0,1/n)`; limit `b·t + W_t`.
    NigToBrownian { b: f64 },
    /// `NIG(½−1/(4n), −(½−1/(4n)), 1, −1)`; limit `NIG(½,−½,1,−1)`.
    SkewedNig,
    Cgmy(CgmyParams),
    /// `−t + W_t + Z^n`, `ν_n = (1/n)e^{−(2+1/n)x}` on `[n, 2n]`; limit `−t + W_t`.
    EscapingJumps,
    Custom,
}

impl SequenceTag {
    pub fn name(&self) -> &'static str {
        match self {
            SequenceTag::NigToBrownian { .. } => "nig-to-brownian",
            SequenceTag::SkewedNig => "skewed-nig",
            SequenceTag::Cgmy(_) => "cgmy",
            SequenceTag::EscapingJumps => "escaping-jumps",
            SequenceTag::Custom => "custom",
        }
    }
}

/// A sequence of Lévy models `n ↦ (b_n, c_n, ν_n)` with a declared limit.
#[derive(Clone)]
pub struct ModelSequence {
    tag: SequenceTag,
    name: String,
    schedule: Vec<u32>,
    limit: LevyTriplet,
    generator: Generator,
}

impl fmt::Debug for ModelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSequence")
            .field("tag", &self.tag)
            .field("name", &self.name)
            .field("schedule", &self.schedule)
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

fn check_schedule(s: &[u32]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("index schedule is empty".into()));
    }
    if s[0] == 0 {
        return Err(Error::InvalidParameter("indices start at 1".into()));
    }
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("index schedule must be strictly increasing".into()));
    }
    Ok(())
}

impl ModelSequence {
    /// Every scheduled triplet is generated once to validate the family.
    pub fn custom(name: impl Into<String>, limit: LevyTriplet, schedule: Vec<u32>, generator: Generator) -> Result<Self> {
        let seq = ModelSequence { tag: SequenceTag::Custom, name: name.into(), schedule: Vec::new(), limit, generator };
        seq.with_schedule(schedule)
    }

    /// Sequence read from an explicit table; the schedule is the table's index set.
    pub fn from_table(name: impl Into<String>, limit: LevyTriplet, mut table: Vec<(u32, LevyTriplet)>) -> Result<Self> {
        table.sort_by_key(|e| e.0);
        let schedule: Vec<u32> = table.iter().map(|e| e.0).collect();
        check_schedule(&schedule)?;
        let gen: Generator = Arc::new(move |n| {
            table
                .binary_search_by_key(&n, |e| e.0)
                .map(|i| table[i].1.clone())
                .map_err(|_| Error::InvalidParameter(format!("index {n} not in the table")))
        });
        ModelSequence::custom(name, limit, schedule, gen)
    }

    /// Every index maps to `t`, which is also the limit.
    pub fn constant(name: impl Into<String>, t: LevyTriplet) -> Self {
        let g = t.clone();
        ModelSequence {
            tag: SequenceTag::Custom,
            name: name.into(),
            schedule: DEFAULT_SCHEDULE.to_vec(),
            limit: t,
            generator: Arc::new(move |_| Ok(g.clone())),
        }
    }

    pub fn with_schedule(mut self, schedule: Vec<u32>) -> Result<Self> {
        check_schedule(&schedule)?;
        for &n in &schedule {
            (self.generator)(n)?;
        }
        self.schedule = schedule;
        Ok(self)
    }

    pub fn tag(&self) -> &SequenceTag {
        &self.tag
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schedule(&self) -> &[u32] {
        &self.schedule
    }

    pub fn limit(&self) -> &LevyTriplet {
        &self.limit
    }

    pub fn triplet(&self, n: u32) -> Result<LevyTriplet> {
        if n == 0 {
            return Err(Error::InvalidParameter("indices start at 1".into()));
        }
        (self.generator)(n)
    }
}

fn nig_to_brownian(b: f64, n: u32) -> Result<LevyTriplet> {
    let n = n as f64;
    let nu = LevyMeasure::sum(vec![LevyMeasure::nig(n, 0.0, n)?, LevyMeasure::nig(0.25, 0.0, 1.0 / n)?]);
    LevyTriplet::new(b, 0.0, nu)
}

fn skewed_nig(n: u32) -> Result<LevyTriplet> {
    let a = 0.5 - 0.25 / n as f64;
    LevyTriplet::nig(a, -a, 1.0, -1.0)
}

fn cgmy_measure(p: &CgmyParams, m: f64) -> Result<LevyMeasure> {
    LevyMeasure::cgmy(1.0, p.g, m, p.y)
}

fn escaping_jumps(n: u32) -> Result<LevyTriplet> {
    LevyTriplet::new(-1.0, 1.0, LevyMeasure::trunc_exp_n(n as f64)?)
}

/// Drift making the martingale residual of `(b, 0, ν)` equal to −0.1.
fn cgmy_default_drift(nu: &LevyMeasure) -> Result<f64> {
    let j = levy_integral(nu, |x| x.exp_m1() - truncation(x), Region::Full, &IntegrationConfig::default())?;
    Ok(-0.1 - j)
}

/// Construct a built-in sequence with the default schedule.
pub fn builtin_sequence(tag: SequenceTag) -> Result<ModelSequence> {
    let (limit, generator): (LevyTriplet, Generator) = match tag.clone() {
        SequenceTag::NigToBrownian { b } => {
            if !b.is_finite() {
                return Err(Error::InvalidParameter(format!("drift must be finite, got {b}")));
            }
            (LevyTriplet::new(b, 1.0, LevyMeasure::Zero)?, Arc::new(move |n| nig_to_brownian(b, n)))
        }
        SequenceTag::SkewedNig => (LevyTriplet::nig(0.5, -0.5, 1.0, -1.0)?, Arc::new(skewed_nig)),
        SequenceTag::Cgmy(p) => {
            if !(p.m > 2.0 || (p.m == 2.0 && p.eps > 0.0)) {
                return Err(Error::InvalidParameter(format!("the sequence needs M_n > 2, got M = {}", p.m)));
            }
            if !(p.eps >= 0.0 && p.eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("eps must be >= 0, got {}", p.eps)));
            }
            let nu = cgmy_measure(&p, p.m)?;
            let b = match p.drift {
                Some(b) => b,
                None => cgmy_default_drift(&nu)?,
            };
            let gen: Generator = Arc::new(move |n| LevyTriplet::new(b, 0.0, cgmy_measure(&p, p.m + p.eps / n as f64)?));
            (LevyTriplet::new(b, 0.0, nu)?, gen)
        }
        SequenceTag::EscapingJumps => (LevyTriplet::new(-1.0, 1.0, LevyMeasure::Zero)?, Arc::new(escaping_jumps)),
        SequenceTag::Custom => {
            return Err(Error::InvalidParameter("custom sequences are built with ModelSequence::custom".into()))
        }
    };
    let seq = ModelSequence { name: tag.name().to_string(), tag, schedule: Vec::new(), limit, generator };
    seq.with_schedule(DEFAULT_SCHEDULE.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        let s = builtin_sequence(SequenceTag::EscapingJumps).unwrap();
        assert!(s.clone().with_schedule(vec![]).is_err());
        assert!(s.clone().with_schedule(vec![2, 2]).is_err());
        assert!(s.clone().with_schedule(vec![0, 1]).is_err());
        assert_eq!(s.with_schedule(vec![3, 7]).unwrap().schedule(), &[3, 7]);
    }

    #[test]
    fn nig_sum_first_element() {
        let s = builtin_sequence(SequenceTag::NigToBrownian { b: 0.0 }).unwrap();
        let t = s.triplet(1).unwrap();
        let want = LevyMeasure::sum(vec![
            LevyMeasure::nig(1.0, 0.0, 1.0).unwrap(),
            LevyMeasure::nig(0.25, 0.0, 1.0).unwrap(),
        ]);
        assert_eq!(t.nu(), &want);
        assert_eq!(t.c(), 0.0);
        assert_eq!(s.limit().c(), 1.0);
    }

    #[test]
    fn escaping_jumps_first_density() {
        let s = builtin_sequence(SequenceTag::EscapingJumps).unwrap();
        let nu = s.triplet(1).unwrap().nu().clone();
        for x in [1.0, 1.3, 1.9] {
            assert!((nu.density(x) - (-3.0 * x).exp()).abs() < 1e-15);
        }
        assert_eq!(nu.density(0.9), 0.0);
        assert_eq!(nu.density(2.1), 0.0);
    }

    #[test]
    fn constant_cgmy_equals_limit() {
        let p = CgmyParams { eps: 0.0, ..CgmyParams::default() };
        let s = builtin_sequence(SequenceTag::Cgmy(p)).unwrap();
        for &n in s.schedule() {
            assert_eq!(&s.triplet(n).unwrap(), s.limit());
        }
    }

    #[test]
    fn cgmy_requires_tail_above_two() {
        let p = CgmyParams { m: 1.5, ..CgmyParams::default() };
        assert!(builtin_sequence(SequenceTag::Cgmy(p)).is_err());
        let p = CgmyParams { m: 2.0, eps: 0.0, ..CgmyParams::default() };
        assert!(builtin_sequence(SequenceTag::Cgmy(p)).is_err());
    }

    #[test]
    fn table_sequence() {
        let a = LevyTriplet::new(0.1, 1.0, LevyMeasure::Zero).unwrap();
        let b = LevyTriplet::new(0.2, 1.0, LevyMeasure::Zero).unwrap();
        let s = ModelSequence::from_table("t", a.clone(), vec![(4, b.clone()), (1, a.clone())]).unwrap();
        assert_eq!(s.schedule(), &[1, 4]);
        assert_eq!(s.triplet(4).unwrap(), b);
        assert!(s.triplet(2).is_err());
    }
}

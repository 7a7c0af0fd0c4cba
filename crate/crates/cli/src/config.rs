//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use levy_emm::convergence_lab::{builtin_sequence, CgmyParams, ModelSequence, SequenceTag};
use levy_emm::measure_change::{MeasureKind, QParams};
use levy_emm::pricing::{McConfig, PayoffKind, PayoffSpec, Tabulated};
use levy_emm::{LevyMeasure, LevyTriplet};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub model: Option<ModelConfig>,
    pub payoff: Option<PayoffConfig>,
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub mc: McSection,
    pub sequence: Option<SequenceConfig>,
    pub wiener_hopf: Option<WienerHopfConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_model_id")]
    pub id: String,
    /// Triplet drift `b` (truncation `x·𝟙_{|x|≤1}`).
    pub drift: Option<f64>,
    /// NIG location `μ`; only with NIG jump components, `b = μ + Σ∫h ν`.
    pub location: Option<f64>,
    #[serde(default)]
    pub diffusion: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "one")]
    pub spot: f64,
    #[serde(default)]
    pub jumps: Vec<JumpConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    Nig { alpha: f64, beta: f64, delta: f64 },
    Cgmy { c: f64, g: f64, m: f64, y: f64 },
    TruncExp { scale: f64, rate: f64, lo: f64, hi: f64 },
    CompoundPoisson { atoms: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub kind: PayoffName,
    pub strike: Option<f64>,
    pub cap: Option<f64>,
    pub alpha: Option<f64>,
    /// `[[S_T, value], ...]` for `tabulated`.
    pub points: Option<Vec<[f64; 2]>>,
    pub maturity_years: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffName {
    EuropeanCall,
    EuropeanPut,
    AsianCall,
    AsianFloating,
    Lookback,
    CappedPut,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Entropy,
    Qopt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    None,
    /// Price under the model's own measure when no martingale measure exists.
    Original,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub rule: RuleName,
    pub q: Option<f64>,
    #[serde(default)]
    pub fallback: Fallback,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub paths: usize,
    pub steps: usize,
    pub antithetic: bool,
    pub small_jump_cutoff: f64,
    pub lanes: usize,
    /// Expected table jumps per path; 0 disables the adaptive cutoff.
    pub jump_budget: f64,
}

impl Default for McSection {
    fn default() -> Self {
        let d = McConfig::default();
        McSection {
            paths: d.paths,
            steps: d.steps,
            antithetic: d.antithetic,
            small_jump_cutoff: d.small_jump_cutoff,
            lanes: d.lanes,
            jump_budget: d.jump_budget.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub tag: String,
    pub schedule: Option<Vec<u32>>,
    /// Drift of `nig-to-brownian`, or of `cgmy` (default: residual −0.1).
    pub b: Option<f64>,
    pub y: Option<f64>,
    pub g: Option<f64>,
    pub m: Option<f64>,
    pub eps: Option<f64>,
    /// Limit model of a `custom` sequence.
    pub limit: Option<ModelConfig>,
    #[serde(default)]
    pub table: Vec<TableEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub n: u32,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerHopfConfig {
    /// Rate of the independent exponential time.
    pub exp_rate: f64,
}

fn default_model_id() -> String {
    "model".into()
}

fn one() -> f64 {
    1.0
}

/// Configuration problem; maps to exit status 1.
#[derive(Debug)]
pub struct ConfigError(pub anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(e.into()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(config_err)?;
        Self::parse(&text).map_err(|e| config_err(anyhow!("{}: {:#}", path.display(), e)))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn mc(&self) -> Result<McConfig> {
        let m = &self.mc;
        let cfg = McConfig {
            paths: m.paths,
            steps: m.steps,
            seed: self.seed(),
            antithetic: m.antithetic,
            small_jump_cutoff: m.small_jump_cutoff,
            lanes: m.lanes,
            jump_budget: if m.jump_budget > 0.0 { Some(m.jump_budget) } else { None },
        };
        cfg.validate().map_err(|e| config_err(anyhow!("[mc] {e}")))?;
        Ok(cfg)
    }

    pub fn model(&self) -> Result<(String, LevyTriplet)> {
        let m = self.model.as_ref().ok_or_else(|| config_err(anyhow!("missing [model] section")))?;
        Ok((m.id.clone(), m.build().map_err(|e| config_err(anyhow!("[model] {e:#}")))?))
    }

    pub fn payoff(&self) -> Result<PayoffSpec> {
        let p = self.payoff.as_ref().ok_or_else(|| config_err(anyhow!("missing [payoff] section")))?;
        p.build().map_err(|e| config_err(anyhow!("[payoff] {e:#}")))
    }

    pub fn rule(&self) -> Result<(MeasureKind, Fallback)> {
        let m = self.measure.as_ref().ok_or_else(|| config_err(anyhow!("missing [measure] section")))?;
        let kind = match (m.rule, m.q) {
            (RuleName::Entropy, None) => MeasureKind::MinimalEntropy,
            (RuleName::Entropy, Some(_)) => return Err(config_err(anyhow!("[measure] q applies to rule = \"qopt\" only"))),
            (RuleName::Qopt, None) => return Err(config_err(anyhow!("[measure] rule = \"qopt\" needs q"))),
            (RuleName::Qopt, Some(q)) => {
                MeasureKind::Qopt(QParams::new(q).map_err(|e| config_err(anyhow!("[measure] {e}")))?)
            }
        };
        Ok((kind, m.fallback))
    }

    pub fn sequence(&self) -> Result<ModelSequence> {
        let s = self.sequence.as_ref().ok_or_else(|| config_err(anyhow!("missing [sequence] section")))?;
        s.build().map_err(|e| config_err(anyhow!("[sequence] {e:#}")))
    }

    pub fn exp_rate(&self) -> Result<f64> {
        let r = self.wiener_hopf.as_ref().map_or(1.0, |w| w.exp_rate);
        if !(r > 0.0 && r.is_finite()) {
            return Err(config_err(anyhow!("[wiener_hopf] exp_rate must be > 0, got {r}")));
        }
        Ok(r)
    }
}

impl JumpConfig {
    fn build(&self) -> Result<LevyMeasure> {
        Ok(match self {
            JumpConfig::Nig { alpha, beta, delta } => LevyMeasure::nig(*alpha, *beta, *delta)?,
            JumpConfig::Cgmy { c, g, m, y } => LevyMeasure::cgmy(*c, *g, *m, *y)?,
            JumpConfig::TruncExp { scale, rate, lo, hi } => LevyMeasure::trunc_exp(*scale, *rate, *lo, *hi)?,
            JumpConfig::CompoundPoisson { atoms } => {
                LevyMeasure::compound_poisson(atoms.iter().map(|a| (a[0], a[1])).collect())?
            }
        })
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<LevyTriplet> {
        let parts = self.jumps.iter().map(JumpConfig::build).collect::<Result<Vec<_>>>()?;
        let b = match (self.drift, self.location) {
            (Some(b), None) => b,
            (None, Some(mu)) => {
                let mut b = mu;
                for p in &parts {
                    match p {
                        LevyMeasure::Nig(n) => b += n.trunc_mean(),
                        _ => bail!("location is only defined for NIG jump components; give drift instead"),
                    }
                }
                b
            }
            (None, None) => bail!("one of drift or location is required"),
            (Some(_), Some(_)) => bail!("drift and location are mutually exclusive"),
        };
        let nu = match parts.len() {
            0 => LevyMeasure::Zero,
            1 => parts.into_iter().next().expect("one part"),
            _ => LevyMeasure::sum(parts),
        };
        Ok(LevyTriplet::with_market(b, self.diffusion, nu, self.rate, self.spot)?)
    }
}

impl PayoffConfig {
    pub fn build(&self) -> Result<PayoffSpec> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("{:?} payoff needs {name}", self.kind));
        let kind = match self.kind {
            PayoffName::EuropeanCall => PayoffKind::EuropeanCall { strike: need(self.strike, "strike")? },
            PayoffName::EuropeanPut => PayoffKind::EuropeanPut { strike: need(self.strike, "strike")? },
            PayoffName::AsianCall => PayoffKind::AsianCall { strike: need(self.strike, "strike")? },
            PayoffName::AsianFloating => PayoffKind::AsianFloating,
            PayoffName::Lookback => PayoffKind::Lookback { alpha: need(self.alpha, "alpha")? },
            PayoffName::CappedPut => {
                PayoffKind::CappedPut { strike: need(self.strike, "strike")?, cap: need(self.cap, "cap")? }
            }
            PayoffName::Tabulated => {
                let pts = self.points.as_ref().ok_or_else(|| anyhow!("tabulated payoff needs points"))?;
                PayoffKind::BoundedCustom(Tabulated::new(pts.iter().map(|p| (p[0], p[1])).collect())?)
            }
        };
        Ok(PayoffSpec::new(kind, self.maturity_years)?)
    }
}

impl SequenceConfig {
    pub fn build(&self) -> Result<ModelSequence> {
        let tag = match self.tag.as_str() {
            "nig-to-brownian" => SequenceTag::NigToBrownian { b: self.b.unwrap_or(0.0) },
            "skewed-nig" => SequenceTag::SkewedNig,
            "cgmy" => {
                let d = CgmyParams::default();
                SequenceTag::Cgmy(CgmyParams {
                    y: self.y.unwrap_or(d.y),
                    g: self.g.unwrap_or(d.g),
                    m: self.m.unwrap_or(d.m),
                    eps: self.eps.unwrap_or(d.eps),
                    drift: self.b,
                })
            }
            "escaping-jumps" => SequenceTag::EscapingJumps,
            "custom" => return self.build_custom(),
            other => bail!(
                "unknown sequence tag {other:?} (expected nig-to-brownian, skewed-nig, cgmy, escaping-jumps or custom)"
            ),
        };
        let seq = builtin_sequence(tag)?;
        Ok(match &self.schedule {
            Some(s) => seq.with_schedule(s.clone())?,
            None => seq,
        })
    }

    fn build_custom(&self) -> Result<ModelSequence> {
        let limit = self.limit.as_ref().ok_or_else(|| anyhow!("custom sequence needs [sequence.limit]"))?.build()?;
        if self.table.is_empty() {
            bail!("custom sequence needs at least one [[sequence.table]] entry");
        }
        let table = self
            .table
            .iter()
            .map(|e| Ok((e.n, e.model.build().with_context(|| format!("table entry n={}", e.n))?)))
            .collect::<Result<Vec<_>>>()?;
        let seq = ModelSequence::from_table("custom", limit, table)?;
        if let Some(s) = &self.schedule {
            return Ok(seq.with_schedule(s.clone())?);
        }
        Ok(seq)
    }
}

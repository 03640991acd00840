//! Experiment configuration. The file format is TOML; the grammar is
//! documented in `docs/config.md`.

use std::fs;
use std::path::{Path, PathBuf};

use branchim_core::arrivals::{ArrivalProcess, GppParams, Intensity};
use branchim_core::model::{BranchingModel, OffspringLaw};
use branchim_core::presets;
use branchim_core::transient::TransientVariant;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_intensity_table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub seed: u64,
    pub replicates: u64,
    /// Observation times, strictly increasing.
    pub grid: Vec<f64>,
    /// Initial counts; defaults to empty with immigration and to one
    /// type-1 particle without.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub variant: Variant,
    pub model: ModelSpec,
    #[serde(default)]
    pub arrivals: ArrivalSpec,
    #[serde(default)]
    pub lt: LtSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    PaperLiteral,
    #[default]
    RenewalConsistent,
}

impl From<Variant> for TransientVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::PaperLiteral => TransientVariant::PaperLiteral,
            Variant::RenewalConsistent => TransientVariant::RenewalConsistent,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper-literal" => Ok(Self::PaperLiteral),
            "renewal-consistent" => Ok(Self::RenewalConsistent),
            other => Err(format!(
                "unknown variant {other:?} (expected paper-literal or renewal-consistent)"
            )),
        }
    }
}

/// Either a named preset or an explicit list of types.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    /// Numeric arguments of a parameterized preset.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<TypeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `params = [mu]`, default `[1]`.
    PureDeath,
    Critical,
    SymmetricSubcritical,
    /// `params = [mu1, mu2, p12, p21]`.
    Alternating,
    Doubling,
    Supercritical,
    Asymmetric,
    DeterministicCycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeSpec {
    pub rate: f64,
    pub offspring: Vec<OffspringEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringEntry {
    pub counts: Vec<u32>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArrivalSpec {
    #[default]
    None,
    Constant {
        rate: f64,
    },
    Exponential {
        scale: f64,
        exponent: f64,
    },
    /// Piecewise-linear intensity, inline or from a `t,lambda` CSV file.
    /// Relative paths are resolved against the config file.
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        knots: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<PathBuf>,
    },
    Gpp {
        a: f64,
        b: f64,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LtSpec {
    /// Transform arguments, one vector of length `k` per point.
    #[serde(default)]
    pub s: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Distributional tests pass when the p-value exceeds this.
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    /// Moment tests pass within this many standard errors.
    #[serde(default = "default_se_band")]
    pub se_band: f64,
}

fn default_p_min() -> f64 {
    0.01
}

fn default_se_band() -> f64 {
    3.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            p_min: default_p_min(),
            se_band: default_se_band(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write every trajectory to `trajectories.csv`.
    #[serde(default)]
    pub trajectories: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; table paths become relative to the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let ArrivalSpec::Table { file: Some(f), .. } = &mut cfg.arrivals {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("grid must not be empty".into()));
        }
        if self.grid.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || self.grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(format!(
                "grid must be finite, nonnegative and strictly increasing: {:?}",
                self.grid
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let model = self.model.build()?;
        let k = model.k();
        if let Some(init) = &self.initial {
            if init.len() != k {
                return Err(Error::Config(format!(
                    "initial has {} entries for {k} types",
                    init.len()
                )));
            }
        }
        for s in &self.lt.s {
            if s.len() != k || s.iter().any(|x| !(*x <= 0.0)) {
                return Err(Error::Config(format!(
                    "transform argument {s:?} must have {k} nonpositive entries"
                )));
            }
        }
        if !(self.tolerances.p_min > 0.0 && self.tolerances.p_min < 1.0) {
            return Err(Error::Config("p_min must lie in (0, 1)".into()));
        }
        if !(self.tolerances.se_band > 0.0) {
            return Err(Error::Config("se_band must be positive".into()));
        }
        if let ArrivalSpec::Table { knots, file } = &self.arrivals {
            if knots.is_some() == file.is_some() {
                return Err(Error::Config(
                    "a table intensity needs exactly one of knots or file".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<BranchingModel> {
        self.model.build()
    }

    pub fn build_arrivals(&self) -> Result<Option<ArrivalProcess>> {
        self.arrivals.build()
    }

    /// Initial counts after applying the default.
    pub fn initial_state(&self, k: usize) -> Vec<u64> {
        self.initial.clone().unwrap_or_else(|| {
            let mut n = vec![0; k];
            if self.arrivals == ArrivalSpec::None {
                n[0] = 1;
            }
            n
        })
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<BranchingModel> {
        match (self.preset, self.types.is_empty()) {
            (Some(p), true) => p.build(&self.params),
            (None, false) => {
                if !self.params.is_empty() {
                    return Err(Error::Config("params only apply to presets".into()));
                }
                let k = self.types.len();
                let mut mu = Vec::with_capacity(k);
                let mut laws = Vec::with_capacity(k);
                for t in &self.types {
                    mu.push(t.rate);
                    let entries = t.offspring.iter().map(|e| (e.counts.clone(), e.p)).collect();
                    laws.push(OffspringLaw::new(k, entries)?);
                }
                Ok(BranchingModel::new(mu, laws)?)
            }
            _ => Err(Error::Config(
                "model needs exactly one of preset or types".into(),
            )),
        }
    }
}

impl Preset {
    fn build(self, params: &[f64]) -> Result<BranchingModel> {
        let arity = match self {
            Self::PureDeath => 1,
            Self::Alternating => 4,
            _ => 0,
        };
        let fixed = self == Self::PureDeath && params.is_empty();
        if params.len() != arity && !fixed {
            return Err(Error::Config(format!(
                "preset {self:?} takes {arity} params, got {}",
                params.len()
            )));
        }
        Ok(match self {
            Self::PureDeath => {
                let mu = params.first().copied().unwrap_or(1.0);
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(Error::Config(format!("death rate {mu} must be positive")));
                }
                presets::pure_death(mu)
            }
            Self::Alternating => {
                // Validate before the preset constructor, which panics.
                let p = branchim_core::transient::TwoTypeParams::new(
                    params[0], params[1], params[2], params[3],
                )?;
                p.model()
            }
            Self::Critical => presets::critical(),
            Self::SymmetricSubcritical => presets::symmetric_subcritical(),
            Self::Doubling => presets::doubling(),
            Self::Supercritical => presets::supercritical(),
            Self::Asymmetric => presets::asymmetric(),
            Self::DeterministicCycle => presets::deterministic_cycle(),
        })
    }
}

impl ArrivalSpec {
    pub fn build(&self) -> Result<Option<ArrivalProcess>> {
        Ok(Some(match self {
            Self::None => return Ok(None),
            Self::Constant { rate } => ArrivalProcess::Nhpp(Intensity::constant(*rate)?),
            Self::Exponential { scale, exponent } => {
                ArrivalProcess::Nhpp(Intensity::exponential(*scale, *exponent)?)
            }
            Self::Table { knots: Some(k), .. } => {
                ArrivalProcess::Nhpp(Intensity::table(k.iter().map(|&[t, l]| (t, l)).collect())?)
            }
            Self::Table { file: Some(f), .. } => ArrivalProcess::Nhpp(read_intensity_table(f)?),
            Self::Table { .. } => {
                return Err(Error::Config("table intensity without knots or file".into()))
            }
            Self::Gpp { a, b, lambda } => ArrivalProcess::Gpp(GppParams::new(*a, *b, *lambda)?),
        }))
    }
}

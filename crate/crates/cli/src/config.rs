//! Job configuration: a strict JSON schema built from named presets, and the
//! versioned registry pinning box/resolution pairs and the battery seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plab_core::battery::BatteryId;
use plab_core::decompositions::BlockKind;
use plab_core::grid::{BoxDomain, ScaleWindow};
use plab_core::norms::{q_format, Characterization, Scale, SpaceSpec};
use plab_core::spaces::{FundamentalSpace, SpaceKind};
use plab_core::wavelets::WaveletPreset;
use plab_core::weights::{WeightModel, WeightPreset};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Built-in registry, overridable through `PLAB_DATA_DIR/registry.json`.
pub const DEFAULT_REGISTRY: &str = include_str!("../data/registry.json");

/// Environment variable naming the registry directory.
pub const DATA_DIR_ENV: &str = "PLAB_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Norm,
    Equiv,
    Axioms,
    Witness,
    Wavelet,
    Decompose,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::Equiv => "equiv",
            Command::Axioms => "axioms",
            Command::Witness => "witness",
            Command::Wavelet => "wavelet",
            Command::Decompose => "decompose",
            Command::Report => "report",
        }
    }
}

/// `q` in `(0, inf]` inside lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QValue(#[serde(with = "q_format")] pub f64);

/// Weight presets accepted by configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightConfig {
    /// `2^{js}` in the plain class.
    Constant { s: f64 },
    /// `2^{js}` in the star class `W*_{s,s}`.
    ConstantStar { s: f64 },
    Yoneda,
    SpatialPower { s: f64, eps: f64 },
}

impl WeightConfig {
    pub fn model(&self) -> WeightModel {
        match *self {
            WeightConfig::Constant { s } => WeightModel::constant(s),
            WeightConfig::ConstantStar { s } => WeightModel::constant_star(s),
            WeightConfig::Yoneda => WeightModel::from_preset(WeightPreset::Yoneda),
            WeightConfig::SpatialPower { s, eps } => WeightModel::from_preset(WeightPreset::SpatialPower { s, eps }),
        }
    }
}

fn default_q() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

/// Scale letter, `tau`, `q`, `a` and the level window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub scale: Scale,
    #[serde(default)]
    pub tau: f64,
    #[serde(with = "q_format", default = "default_q")]
    pub q: f64,
    /// Peetre decay; defaults to `N0 + alpha3 + n + 1`.
    #[serde(default)]
    pub a: Option<f64>,
    pub j_max: i32,
    #[serde(default)]
    pub j_min: i32,
    #[serde(default = "default_true")]
    pub paper_admissible: bool,
}

/// Overrides of the characterization orders.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivConfig {
    pub alt_moment_order: Option<i32>,
    pub local_means_l0: Option<i32>,
    pub wavelet: Option<WaveletPreset>,
    /// Difference order `M`.
    pub m: Option<u32>,
    pub u: Option<QValue>,
    pub c_tilde: Option<f64>,
    /// When set, every spread must stay at or below this cap.
    pub spread_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessCase {
    pub m: u32,
    pub a: f64,
    pub p: f64,
}

fn default_fm_levels() -> i32 {
    1
}

fn default_thm_levels() -> Vec<i32> {
    vec![2, 4, 6, 8]
}

fn default_thm_q() -> Vec<QValue> {
    vec![QValue(1.0), QValue(2.0), QValue(f64::INFINITY)]
}

fn default_tau_offset() -> f64 {
    0.25
}

fn default_windows() -> Vec<i32> {
    vec![4, 8]
}

fn default_collapse_p() -> Vec<f64> {
    vec![1.5, 2.0, 4.0]
}

fn default_exp_min() -> i32 {
    2
}

fn default_exp_max() -> i32 {
    8
}

/// Witness targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case", deny_unknown_fields)]
pub enum WitnessConfig {
    /// Decay of `(Phi^* f_m)_a` and vanishing band parts.
    #[serde(rename = "example_3_4")]
    Example34 {
        cases: Vec<WitnessCase>,
        #[serde(default = "default_fm_levels")]
        j_max: i32,
    },
    /// `b` vs `n` sequence norms of the proper-subspace witness.
    #[serde(rename = "thm_9_12")]
    Thm912 {
        #[serde(default = "default_thm_levels")]
        levels: Vec<i32>,
        #[serde(default = "default_thm_q")]
        q: Vec<QValue>,
        tau: f64,
        /// Peetre decay (`N0 + alpha3 + n + 1` when absent).
        #[serde(default)]
        a: Option<f64>,
    },
    /// `tau~` estimate and the collapse comparison on Lebesgue spaces.
    TauCollapse {
        #[serde(default = "default_collapse_p")]
        p: Vec<f64>,
        #[serde(default = "default_windows")]
        windows: Vec<i32>,
        #[serde(default = "default_tau_offset")]
        tau_offset: f64,
    },
    /// Maximal-operator sweep on the split space, `r = 2^{-e}`.
    SplitSweep {
        #[serde(default = "default_exp_min")]
        exp_min: i32,
        #[serde(default = "default_exp_max")]
        exp_max: i32,
    },
}

/// Wavelet job: presets (all when absent) and transform depth (full when absent).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletJob {
    pub presets: Option<Vec<WaveletPreset>>,
    pub depth: Option<usize>,
}

/// Decomposition job: block kind and moment order (minimal admissible when absent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeJob {
    pub kind: BlockKind,
    pub moment_order: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Tsv,
    Json,
    Plotdata,
}

/// Aggregation of earlier runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJob {
    /// `runs.jsonl` files or output directories holding one.
    pub inputs: Vec<PathBuf>,
    pub format: ReportFormat,
}

/// One batch job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    /// Registry name of the box/resolution pair.
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub space: Option<SpaceKind>,
    #[serde(default)]
    pub weight: Option<WeightConfig>,
    #[serde(default)]
    pub spec: Option<SpecConfig>,
    /// Battery members (the default battery when absent).
    #[serde(default)]
    pub battery: Option<Vec<BatteryId>>,
    #[serde(default)]
    pub characterizations: Option<Vec<Characterization>>,
    #[serde(default)]
    pub equiv: Option<EquivConfig>,
    #[serde(default)]
    pub witness: Option<WitnessConfig>,
    #[serde(default)]
    pub wavelet: Option<WaveletJob>,
    #[serde(default)]
    pub decompose: Option<DecomposeJob>,
    #[serde(default)]
    pub report: Option<ReportJob>,
    /// Battery seed (the registry seed when absent).
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl JobConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The part of the config that determines results (no output path or
    /// worker count), used for hashing.
    pub fn canonical(&self) -> Self {
        Self { workers: None, out: None, ..self.clone() }
    }

    fn need<'a, T>(v: &'a Option<T>, what: &str, cmd: Command) -> Result<&'a T> {
        v.as_ref().ok_or_else(|| CliError::Config(format!("command {} needs a `{what}` block", cmd.name())))
    }

    pub fn space_kind(&self) -> Result<SpaceKind> {
        Self::need(&self.space, "space", self.command).copied()
    }

    pub fn weight_model(&self) -> Result<WeightModel> {
        Ok(Self::need(&self.weight, "weight", self.command)?.model())
    }

    pub fn spec_config(&self) -> Result<SpecConfig> {
        Self::need(&self.spec, "spec", self.command).copied()
    }

    /// The validated space specification on `d`.
    pub fn space_spec(&self, d: &BoxDomain) -> Result<SpaceSpec> {
        let sc = self.spec_config()?;
        let space = FundamentalSpace::new(self.space_kind()?, d.dim())?;
        let window = ScaleWindow::new(sc.j_min, sc.j_max)?;
        let mut spec = SpaceSpec::new(sc.scale, space, self.weight_model()?, sc.tau, sc.q, window);
        if let Some(a) = sc.a {
            spec = spec.with_a(a);
        }
        if !sc.paper_admissible {
            spec = spec.relaxed();
        }
        spec.validate(d)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainEntry {
    dim: usize,
    half_width: f64,
    samples: usize,
}

/// Versioned registry of box/resolution presets and the battery seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub version: u32,
    pub battery_seed: u64,
    domains: BTreeMap<String, DomainEntry>,
}

impl Registry {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| CliError::Config(format!("registry: {e}")))
    }

    /// `PLAB_DATA_DIR/registry.json` when the variable is set, else the built-in one.
    pub fn load() -> Result<Self> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => Self::parse(&std::fs::read_to_string(Path::new(&dir).join("registry.json"))?),
            None => Self::parse(DEFAULT_REGISTRY),
        }
    }

    pub fn domain(&self, name: &str) -> Result<BoxDomain> {
        let e = self
            .domains
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown domain preset {name:?}")))?;
        Ok(BoxDomain::new(e.dim, e.half_width, e.samples)?)
    }

    pub fn domain_names(&self) -> impl Iterator<Item = &str> {
        self.domains.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_parses() {
        let r = Registry::parse(DEFAULT_REGISTRY).unwrap();
        for name in r.domain_names() {
            r.domain(name).unwrap();
        }
        assert!(r.domain("nope").is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(JobConfig::from_json(r#"{"command":"norm","colour":1}"#).is_err());
        assert!(JobConfig::from_json(r#"{"command":"norm","weight":{"preset":"constant","s":1,"x":2}}"#).is_err());
    }

    #[test]
    fn q_accepts_inf() {
        let c = JobConfig::from_json(
            r#"{"command":"norm","spec":{"scale":"N","q":"inf","j_max":3}}"#,
        )
        .unwrap();
        assert!(c.spec.unwrap().q.is_infinite());
    }
}

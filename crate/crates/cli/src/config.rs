//! Run configuration: defaults, TOML file, environment, then flags.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Deserializer, Serialize};
use zhang_core::scalar::{format_rational, parse_rational};
use zhang_core::skew::RNG_ALGORITHM;
use zhang_core::{build_lattice, Lattice, ModelParams, Rational};

pub const ENV_OUTPUT_DIR: &str = "ZHANG_OUTPUT_DIR";
pub const ENV_THREADS: &str = "ZHANG_THREADS";

/// A rational given as `"p/q"`, a decimal string, or a TOML number; kept in canonical `p/q` form.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Rat(pub String);

impl Rat {
    pub fn new(s: &str) -> anyhow::Result<Self> {
        let r = parse_rational(s)?;
        Ok(Rat(format_rational(&r)))
    }

    pub fn value(&self) -> Rational {
        parse_rational(&self.0).expect("canonical rational")
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
            F(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::S(s) => s,
            Raw::I(i) => i.to_string(),
            Raw::F(f) => f.to_string(),
        };
        Rat::new(&text).map_err(serde::de::Error::custom)
    }
}

fn rat(s: &str) -> Rat {
    Rat::new(s).expect("valid default")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "Ec")]
    pub ec: Rat,
    pub eps: Rat,
    pub delta: Rat,
}

impl Default for Model {
    fn default() -> Self {
        Model { d: 1, l: 2, ec: rat("7/2"), eps: rat("1/2"), delta: rat("1") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Rng {
    pub algorithm: String,
    pub seed: u64,
}

impl Default for Rng {
    fn default() -> Self {
        Rng { algorithm: RNG_ALGORITHM.into(), seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    pub piece_budget: usize,
    pub region_budget: usize,
    pub word_budget: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { piece_budget: 100_000, region_budget: 20_000, word_budget: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub directory: String,
    /// Artifact kinds to write, among `csv`, `json` and `bin`.
    pub formats: Vec<String>,
}

impl Default for Output {
    fn default() -> Self {
        Output { directory: "out".into(), formats: vec!["csv".into(), "json".into(), "bin".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Runtime {
    /// Worker threads for sweeps; results do not depend on it.
    pub threads: usize,
}

impl Default for Runtime {
    fn default() -> Self {
        Runtime { threads: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Simulate {
    pub events: u64,
    pub burn_in: u64,
    /// Exact rational arithmetic instead of `f64`.
    pub exact: bool,
    pub grazing_tolerance: f64,
}

impl Default for Simulate {
    fn default() -> Self {
        Simulate { events: 10_000, burn_in: 0, exact: false, grazing_tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Atlas {
    /// Longest avalanche followed before the enumeration gives up.
    pub tau_cap: usize,
}

impl Default for Atlas {
    fn default() -> Self {
        Atlas { tau_cap: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Levels {
    pub max_n: usize,
}

impl Default for Levels {
    fn default() -> Self {
        Levels { max_n: 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Removability {
    pub max_n: usize,
    pub witness_len: usize,
}

impl Default for Removability {
    fn default() -> Self {
        Removability { max_n: 12, witness_len: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lyapunov {
    pub events: u64,
    pub burn_in: u64,
    pub reortho: usize,
    pub batches: usize,
}

impl Default for Lyapunov {
    fn default() -> Self {
        Lyapunov { events: 1_000_000, burn_in: 10_000, reortho: 5, batches: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Entropy {
    pub n_max: usize,
    pub node_budget: usize,
    pub clean_level: Option<usize>,
    pub clean_max_n: usize,
    pub samples: usize,
    pub sample_len: usize,
    /// Contraction horizon threshold `c`, and the sampled search behind it.
    pub horizon_c: Rat,
    pub horizon_samples: usize,
    pub horizon_max_t: usize,
}

impl Default for Entropy {
    fn default() -> Self {
        Entropy {
            n_max: 400,
            node_budget: 200_000,
            clean_level: None,
            clean_max_n: 12,
            samples: 400,
            sample_len: 40,
            horizon_c: rat("1/2"),
            horizon_samples: 200,
            horizon_max_t: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dimension {
    /// `orbit`, `ifs` or `exact`.
    pub mode: String,
    pub points: usize,
    /// Discarded events per point, or the level `n` in exact mode.
    pub transient: u64,
    /// Box sizes; empty means the default ladder.
    pub deltas: Vec<f64>,
}

impl Default for Dimension {
    fn default() -> Self {
        Dimension { mode: "orbit".into(), points: 20_000, transient: 1000, deltas: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    /// `L` or `Ec`.
    pub axis: String,
    pub grid: Vec<Rat>,
    pub events: u64,
    pub burn_in: u64,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep { axis: "L".into(), grid: ["8", "16", "32", "64", "128"].iter().map(|s| rat(s)).collect(), events: 100_000, burn_in: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Maximal {
    /// Side lengths; empty means `model.L` alone.
    pub sides: Vec<usize>,
    /// Energy field after every stage (single side only).
    pub frames: bool,
}

impl Default for Maximal {
    fn default() -> Self {
        Maximal { sides: Vec::new(), frames: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bifurcation {
    pub eps_min: Rat,
    pub eps_max: Rat,
    pub eps_steps: usize,
    pub ec_min: Rat,
    pub ec_max: Rat,
    pub ec_steps: usize,
    pub depth: usize,
}

impl Default for Bifurcation {
    fn default() -> Self {
        Bifurcation {
            eps_min: rat("1/20"),
            eps_max: rat("19/20"),
            eps_steps: 19,
            ec_min: rat("1/4"),
            ec_max: rat("8"),
            ec_steps: 32,
            depth: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Rescale {
    pub events: u64,
    pub burn_in: u64,
    pub hbar: f64,
    /// Entropy of the return map; `log N` when absent.
    pub h_f: Option<f64>,
}

impl Default for Rescale {
    fn default() -> Self {
        Rescale { events: 100_000, burn_in: 0, hbar: 1.0, h_f: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: Model,
    pub rng: Rng,
    pub budgets: Budgets,
    pub output: Output,
    pub runtime: Runtime,
    pub simulate: Simulate,
    pub atlas: Atlas,
    pub regions: Levels,
    pub removability: Removability,
    pub coding: Levels,
    pub lyapunov: Lyapunov,
    pub entropy: Entropy,
    pub dimension: Dimension,
    pub sweep: Sweep,
    pub maximal: Maximal,
    pub bifurcation: Bifurcation,
    pub rescale: Rescale,
}

impl RunConfig {
    /// Parses a config file, or the `config` table of a run manifest.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let value: toml::Table = text.parse().context("config is not valid TOML")?;
        let table = match value.get("config") {
            Some(toml::Value::Table(t)) if value.contains_key("artifact_version") => t.clone(),
            _ => value,
        };
        Ok(RunConfig::deserialize(toml::Value::Table(table))?)
    }

    /// Sets `section.key` from a TOML literal, or a bare string when it does not parse.
    pub fn set(&mut self, path: &str, literal: &str) -> anyhow::Result<()> {
        let mut root = toml::Value::try_from(&*self)?;
        let (section, key) = path.split_once('.').ok_or_else(|| anyhow!("override `{path}` must be `section.key`"))?;
        let value: toml::Value = match format!("v = {literal}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("key v"),
            Err(_) => toml::Value::String(literal.into()),
        };
        let table = root
            .get_mut(section)
            .and_then(|s| s.as_table_mut())
            .ok_or_else(|| anyhow!("unknown config section `{section}`"))?;
        table.insert(key.into(), value);
        *self = RunConfig::deserialize(root).with_context(|| format!("bad value for `{path}`"))?;
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.rng.algorithm != RNG_ALGORITHM {
            bail!("unsupported rng algorithm `{}` (only {RNG_ALGORITHM})", self.rng.algorithm);
        }
        if self.runtime.threads == 0 {
            bail!("thread count must be positive");
        }
        for f in &self.output.formats {
            if !["csv", "json", "bin"].contains(&f.as_str()) {
                bail!("unknown output format `{f}`");
            }
        }
        let b = &self.budgets;
        if b.piece_budget == 0 || b.region_budget == 0 || b.word_budget == 0 || self.entropy.node_budget == 0 {
            bail!("budgets must be positive");
        }
        self.params()?;
        self.lattice()?;
        Ok(())
    }

    pub fn params(&self) -> anyhow::Result<ModelParams> {
        Ok(ModelParams::with_delta(self.model.ec.value(), self.model.eps.value(), self.model.delta.value())?)
    }

    pub fn lattice(&self) -> anyhow::Result<Lattice> {
        Ok(build_lattice(self.model.d, self.model.l)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.model.ec = Rat::new("0.05").unwrap();
        c.entropy.clean_level = Some(5);
        let back = RunConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.model.ec.0, "1/20");
    }

    #[test]
    fn numbers_and_strings_both_parse() {
        let c = RunConfig::from_toml("[model]\nEc = 7\neps = 0.5\n").unwrap();
        assert_eq!((c.model.ec.0.as_str(), c.model.eps.0.as_str()), ("7", "1/2"));
        assert!(RunConfig::from_toml("[model]\nEc = \"1/0\"\n").is_err());
        assert!(RunConfig::from_toml("[model]\ncolour = 1\n").is_err());
    }

    #[test]
    fn dotted_overrides() {
        let mut c = RunConfig::default();
        c.set("entropy.n_max", "50").unwrap();
        c.set("model.Ec", "1/3").unwrap();
        assert_eq!(c.entropy.n_max, 50);
        assert_eq!(c.model.ec.0, "1/3");
        assert!(c.set("nosuch.key", "1").is_err());
        assert!(c.set("entropy.n_max", "many").is_err());
    }
}

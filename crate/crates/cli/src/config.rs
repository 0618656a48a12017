//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, DeserializeOwned, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use racxpt_core::codebooks::{rate_for_count, LibraryParams};
use racxpt_core::decoder::DecoderConfig;
use racxpt_core::exponents::{AuxConfig, EcthxConfig, SolverConfig, WITNESS_K};
use racxpt_core::jscc::PackingPolicy;
use racxpt_core::mac::{InputStructure, MacChannel};
use racxpt_core::typekit::Kernel;

use crate::error::{CliError, Result};

/// Reads a JSON config, reporting the field path and line of any error.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    parse(&text).map_err(|msg| CliError::Config { path: path.to_path_buf(), msg })
}

pub fn parse<T: DeserializeOwned>(text: &str) -> std::result::Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("field `{path}`: {}", e.inner())
        }
    })?;
    de.end().map_err(|e| e.to_string())?;
    Ok(value)
}

/// A channel given by preset name or explicitly.
#[derive(Debug, Clone)]
pub enum ChannelSpec {
    Preset(String),
    Explicit(MacChannel),
}

impl ChannelSpec {
    pub fn resolve(&self) -> Result<MacChannel> {
        match self {
            Self::Preset(name) => Ok(MacChannel::preset(name)?),
            Self::Explicit(w) => Ok(w.clone()),
        }
    }
}

impl Serialize for ChannelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Preset(name) => s.serialize_str(name),
            Self::Explicit(w) => w.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ChannelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ChannelSpec;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a channel preset name or a {x, y, z, kernel} object")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ChannelSpec, E> {
                MacChannel::preset(v).map_err(E::custom)?;
                Ok(ChannelSpec::Preset(v.to_string()))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<ChannelSpec, A::Error> {
                MacChannel::deserialize(de::value::MapAccessDeserializer::new(map)).map(ChannelSpec::Explicit)
            }
        }
        d.deserialize_any(V)
    }
}

fn single_letter() -> Vec<f64> {
    vec![1.0]
}

/// `P_U`, `P_{X|U}` and `P_{Y|U}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    #[serde(default = "single_letter")]
    pub p_u: Vec<f64>,
    pub p_x: Kernel,
    pub p_y: Kernel,
}

impl StructureSpec {
    pub fn resolve(&self) -> Result<InputStructure> {
        Ok(InputStructure::new(self.p_u.clone(), self.p_x.clone(), self.p_y.clone())?)
    }
}

/// Codebook library recipe; blocklength comes from the command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibrarySpec {
    #[serde(default = "single_letter")]
    pub p_u: Vec<f64>,
    /// `P_{X|U}` of each codebook of sender 1.
    pub x: Vec<Kernel>,
    pub y: Vec<Kernel>,
    /// Rates in bits; alternatively `n1`/`n2` give codebook sizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<Vec<u64>>,
    #[serde(default)]
    pub iid: bool,
}

fn rates(which: &str, r: &Option<Vec<f64>>, sizes: &Option<Vec<u64>>, n: usize) -> Result<Vec<f64>> {
    match (r, sizes) {
        (Some(r), None) => Ok(r.clone()),
        (None, Some(s)) => Ok(s.iter().map(|&c| rate_for_count(n, c as u128)).collect()),
        _ => Err(CliError::Invalid(format!("library: give exactly one of r{which} and n{which}"))),
    }
}

impl LibrarySpec {
    pub fn params(&self, n: usize) -> Result<LibraryParams> {
        let r1 = rates("1", &self.r1, &self.n1, n)?;
        let r2 = rates("2", &self.r2, &self.n2, n)?;
        let mut p = LibraryParams::from_kernels(n, &self.p_u, &self.x, &self.y, r1, r2)?;
        p.iid = self.iid;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dichotomy {
    /// Distance from the pentagon boundary required for a verdict.
    pub margin: f64,
    /// Exponents above this count as positive.
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweep {
    pub r1: [f64; 2],
    pub r2: [f64; 2],
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentTask {
    /// `E_LH` and its members at each rate pair.
    Lh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        structure: Option<StructureSpec>,
        #[serde(default)]
        rates: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sweep: Option<RateSweep>,
        #[serde(default)]
        solver: SolverConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dichotomy: Option<Dichotomy>,
    },
    /// `Ej` against `Es_LH`, and the equivalent form of `Ej0`.
    Jscc {
        q1: Vec<f64>,
        q2: Vec<f64>,
        #[serde(default)]
        aux: AuxConfig,
        #[serde(default = "witness_k")]
        witness_k: usize,
        #[serde(default = "ej_tolerance")]
        ej_tolerance: f64,
        #[serde(default = "equivalent_tolerance")]
        equivalent_tolerance: f64,
    },
}

impl ExponentTask {
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Self::Lh { solver, .. } => solver.seed = seed,
            Self::Jscc { aux, .. } => aux.seed = seed,
        }
    }
}

fn witness_k() -> usize {
    WITNESS_K
}

fn ej_tolerance() -> f64 {
    1e-6
}

fn equivalent_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub channel: ChannelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    pub task: ExponentTask,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateExpect {
    #[serde(default)]
    pub err_d_zero: bool,
    /// Empirical exponent nondecreasing within this many standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_nondecreasing_within: Option<f64>,
    /// `Err_c` nonincreasing within this many standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_c_nonincreasing_within: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err_c_last_below: Option<f64>,
    /// Cross-check exact rows against this many Monte Carlo trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo_agreement: Option<u64>,
}

fn default_pair() -> (usize, usize) {
    (0, 0)
}

fn default_trials() -> u64 {
    10_000
}

fn default_tries() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub channel: ChannelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    pub library: LibrarySpec,
    pub n: Vec<usize>,
    #[serde(default)]
    pub decoder: DecoderConfig,
    #[serde(default = "default_pair")]
    pub pair: (usize, usize),
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_tries")]
    pub max_tries: usize,
    #[serde(default)]
    pub separated: bool,
    #[serde(default)]
    pub monte_carlo_only: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub expect: SimulateExpect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub library: LibrarySpec,
    pub n: usize,
    #[serde(default = "default_tries")]
    pub max_tries: usize,
    #[serde(default)]
    pub separated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecodeInput {
    /// A received sequence.
    Output { z: Vec<usize> },
    /// Send messages `a` and `b` from codebooks `i` and `j` through the
    /// channel, seeded by the run seed.
    Send { i: usize, a: usize, j: usize, b: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    pub channel: ChannelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Library file written by `packing`, relative to the config file.
    pub library: PathBuf,
    #[serde(default)]
    pub decoder: DecoderConfig,
    pub input: DecodeInput,
}

fn objective_tolerance() -> f64 {
    1e-3
}

fn ecthx_margin() -> f64 {
    0.01
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prop2Config {
    pub channel: ChannelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "single_letter")]
    pub p_u: Vec<f64>,
    /// Shared composition of the true and competing `X` codebooks.
    pub p_x: Kernel,
    pub p_y: Kernel,
    pub r1k: f64,
    pub r2j: f64,
    pub eta: f64,
    /// Also minimize the numerical exponent.
    #[serde(default = "yes")]
    pub numerical: bool,
    #[serde(default)]
    pub ecthx: EcthxConfig,
    #[serde(default = "objective_tolerance")]
    pub objective_tolerance: f64,
    #[serde(default = "ecthx_margin")]
    pub ecthx_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Constant { kernel: Kernel },
    /// `assignment[k]` indexes `kernels` at grid rate `k` (row-major over
    /// both grids for two-argument maps).
    Table { kernels: Vec<Kernel>, assignment: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompositionSpec {
    Classical { g1: MapSpec, g2: MapSpec },
    TypeInformed { g1: MapSpec, g2: MapSpec },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalSpec {
    Exact,
    MonteCarlo { trials: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionCheck {
    pub n: usize,
    pub codes: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsccExpect {
    #[serde(default)]
    pub total_strictly_decreasing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition_check: Option<DecompositionCheck>,
}

fn grid_points() -> usize {
    65
}

fn one() -> usize {
    1
}

fn exact() -> Vec<EvalSpec> {
    vec![EvalSpec::Exact]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsccConfig {
    pub channel: ChannelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    #[serde(default = "single_letter")]
    pub p_u: Vec<f64>,
    #[serde(default = "grid_points")]
    pub grid_points: usize,
    pub compositions: CompositionSpec,
    pub n: Vec<usize>,
    /// Independent codes per blocklength, seeded `seed, seed + 1, ...`.
    #[serde(default = "one")]
    pub codes: usize,
    /// One entry for all blocklengths or one per blocklength.
    #[serde(default = "exact")]
    pub evaluation: Vec<EvalSpec>,
    #[serde(default)]
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub packing: PackingPolicy,
    #[serde(default = "yes")]
    pub target: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "dominant")]
    pub dominant: usize,
    #[serde(default)]
    pub expect: JsccExpect,
}

fn dominant() -> usize {
    3
}

fn joints() -> usize {
    200
}

fn type_max_n() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Random joints for the multi-information partition identity.
    #[serde(default = "joints")]
    pub partition_joints: usize,
    /// Largest blocklength of the type-class checks.
    #[serde(default = "type_max_n")]
    pub type_max_n: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { seed: None, partition_joints: joints(), type_max_n: type_max_n() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_presets_and_objects() {
        let c: ChannelSpec = parse(r#""bsc-pair:0.1""#).unwrap();
        assert_eq!(c.resolve().unwrap(), MacChannel::bsc_pair(0.1).unwrap());
        let c: ChannelSpec = parse(r#"{"x": 1, "y": 1, "z": 2, "kernel": [[[0.25, 0.75]]]}"#).unwrap();
        assert_eq!(c.resolve().unwrap().z_size(), 2);
        assert_eq!(serde_json::to_string(&ChannelSpec::Preset("adder".into())).unwrap(), r#""adder""#);
    }

    #[test]
    fn unknown_preset_is_a_parse_error() {
        let e = parse::<ExponentConfig>(r#"{"channel": "nope", "task": {"kind": "lh", "rates": [[0, 0]]}}"#).unwrap_err();
        assert!(e.contains("field `channel`") && e.contains("nope"), "{e}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = parse::<PackingConfig>(r#"{"n": 4, "tries": 3, "library": {"x": [], "y": []}}"#).unwrap_err();
        assert!(e.contains("tries"), "{e}");
    }

    #[test]
    fn codebook_sizes_become_rates() {
        let spec: LibrarySpec =
            parse(r#"{"x": [[[0.5, 0.5]]], "y": [[[0.5, 0.5]]], "n1": [4], "r2": [0.25]}"#).unwrap();
        let p = spec.params(8).unwrap();
        assert_eq!(p.n1(0), 4);
        assert_eq!(p.r2, vec![0.25]);
        let both: LibrarySpec =
            parse(r#"{"x": [[[0.5, 0.5]]], "y": [[[0.5, 0.5]]], "n1": [4], "r1": [0.1], "r2": [0.25]}"#).unwrap();
        assert!(both.params(8).is_err());
    }

    #[test]
    fn exponent_seed_reaches_the_solver() {
        let mut t: ExponentTask = parse(r#"{"kind": "lh", "rates": [[0.1, 0.1]]}"#).unwrap();
        t.set_seed(9);
        match t {
            ExponentTask::Lh { solver, .. } => assert_eq!(solver.seed, 9),
            _ => unreachable!(),
        }
    }
}

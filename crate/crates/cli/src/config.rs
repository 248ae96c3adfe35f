//! Experiment configuration files.
//!
//! Configs are TOML. Grid-valued keys accept a scalar or a list:
//!
//! ```toml
//! scenario = "sensitivity"
//! n = 400
//! layers = 50
//! rho = 0.1
//! c = [2.0, 3.0]
//! rho_input = [0.01, 0.033, 0.1, 0.2, 0.3]
//! replications = 100
//! seed = 7
//! methods = ["generic"]
//! params = ["true", "estimated"]
//! ```
//!
//! Keys left out take the scenario's defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use imlsbm::spectral::WeightScheme;
use imlsbm::Scaling;
use serde::{Deserialize, Serialize};

use crate::pipeline::{parse_weight_scheme, Method, ParamsSource};

pub const DESK_N: usize = 400;
pub const DESK_LAYERS: usize = 50;
pub const DESK_REPLICATIONS: usize = 100;
pub const FULL_N: usize = 1000;
pub const FULL_LAYERS: usize = 100;
pub const FULL_REPLICATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    CompareAlgs,
    SnrSweep,
    Sensitivity,
    Weights,
    BaselineCompare,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::CompareAlgs => "compare-algs",
            Scenario::SnrSweep => "snr-sweep",
            Scenario::Sensitivity => "sensitivity",
            Scenario::Weights => "weights",
            Scenario::BaselineCompare => "baseline-compare",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "compare-algs" => Ok(Scenario::CompareAlgs),
            "snr-sweep" => Ok(Scenario::SnrSweep),
            "sensitivity" => Ok(Scenario::Sensitivity),
            "weights" => Ok(Scenario::Weights),
            "baseline-compare" => Ok(Scenario::BaselineCompare),
            _ => Err(format!(
                "unknown scenario {s:?} (expected compare-algs, snr-sweep, sensitivity, weights or baseline-compare)"
            )),
        }
    }
}

pub fn parse_scaling(s: &str) -> std::result::Result<Scaling, String> {
    match s {
        "weak" => Ok(Scaling::Weak),
        "intermediate" => Ok(Scaling::Intermediate),
        "strong-mix" => Ok(Scaling::StrongMix),
        _ => Err(format!("unknown scaling {s:?} (expected weak, intermediate or strong-mix)")),
    }
}

pub fn scaling_name(s: Scaling) -> &'static str {
    match s {
        Scaling::Weak => "weak",
        Scaling::Intermediate => "intermediate",
        Scaling::StrongMix => "strong-mix",
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    Many(Vec<f64>),
}

impl Grid {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Grid::One(v) => vec![v],
            Grid::Many(v) => v,
        }
    }
}

/// The file as written; every key optional.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub layers: Option<usize>,
    pub rho: Option<Grid>,
    pub c: Option<Grid>,
    pub rho_input: Option<Grid>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub params: Option<Vec<String>>,
    pub weights: Option<Vec<String>>,
    pub scaling: Option<String>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub layers: usize,
    pub rho: Vec<f64>,
    pub c: Vec<f64>,
    /// `None` runs each `rho` with `rho_input = rho`.
    pub rho_input: Option<Vec<f64>>,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub params: Vec<ParamsSource>,
    pub weights: Vec<WeightScheme>,
    pub scaling: Scaling,
    pub out: PathBuf,
    /// `None` uses every available core.
    pub jobs: Option<usize>,
}

fn parse_list<T>(raw: Option<Vec<String>>, default: Vec<T>, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Vec<T>> {
    match raw {
        None => Ok(default),
        Some(items) => items.iter().map(|s| parse(s).map_err(anyhow::Error::msg)).collect(),
    }
}

impl ExperimentConfig {
    /// Fills unspecified keys with the scenario defaults and validates.
    pub fn resolve(raw: RawConfig) -> Result<Self> {
        let scenario = match raw.scenario.as_deref() {
            Some(s) => s.parse().map_err(anyhow::Error::msg)?,
            None => bail!("config must name a scenario"),
        };
        let (c_default, methods_default, params_default, weights_default, rho_input_default) = match scenario {
            Scenario::CompareAlgs => (vec![2.0, 5.0], vec![Method::Generic, Method::Provable], vec![ParamsSource::True], vec![WeightScheme::Uniform], None),
            Scenario::SnrSweep => (vec![1.5, 2.0, 3.0, 5.0], vec![Method::Generic], vec![ParamsSource::True], vec![WeightScheme::Uniform], None),
            Scenario::Sensitivity => (
                vec![2.0],
                vec![Method::Generic],
                vec![ParamsSource::True, ParamsSource::Estimated],
                vec![WeightScheme::Uniform],
                Some(vec![0.01, 0.033, 0.1, 0.2, 0.3]),
            ),
            Scenario::Weights => (
                vec![2.0, 3.0, 4.0, 5.0],
                vec![Method::Spectral],
                vec![ParamsSource::True, ParamsSource::Estimated],
                vec![WeightScheme::Uniform, WeightScheme::Variance, WeightScheme::Stdev],
                None,
            ),
            Scenario::BaselineCompare => (vec![1.5, 2.0, 3.0, 5.0], vec![Method::Generic, Method::Coreg], vec![ParamsSource::True], vec![WeightScheme::Uniform], None),
        };
        let config = ExperimentConfig {
            scenario,
            n: raw.n.unwrap_or(DESK_N),
            layers: raw.layers.unwrap_or(DESK_LAYERS),
            rho: raw.rho.map(Grid::into_vec).unwrap_or_else(|| vec![0.1]),
            c: raw.c.map(Grid::into_vec).unwrap_or(c_default),
            rho_input: raw.rho_input.map(Grid::into_vec).or(rho_input_default),
            replications: raw.replications.unwrap_or(DESK_REPLICATIONS),
            seed: raw.seed.unwrap_or(0),
            methods: parse_list(raw.methods, methods_default, |s| s.parse())?,
            params: parse_list(raw.params, params_default, |s| s.parse())?,
            weights: parse_list(raw.weights, weights_default, parse_weight_scheme)?,
            scaling: match raw.scaling.as_deref() {
                None => Scaling::StrongMix,
                Some(s) => parse_scaling(s).map_err(anyhow::Error::msg)?,
            },
            out: raw.out.unwrap_or_else(|| PathBuf::from(format!("results/{}", scenario.name()))),
            jobs: raw.jobs,
        };
        config.validate()?;
        Ok(config)
    }

    /// Switches to the full simulation scale.
    pub fn full_scale(&mut self) {
        self.n = FULL_N;
        self.layers = FULL_LAYERS;
        self.replications = FULL_REPLICATIONS;
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            bail!("replications must be at least 1");
        }
        if self.n < 4 || self.layers == 0 {
            bail!("need n >= 4 and at least one layer (got n = {}, layers = {})", self.n, self.layers);
        }
        for (name, empty) in [
            ("rho", self.rho.is_empty()),
            ("c", self.c.is_empty()),
            ("rho_input", self.rho_input.as_ref().is_some_and(Vec::is_empty)),
            ("methods", self.methods.is_empty()),
            ("params", self.params.is_empty()),
            ("weights", self.weights.is_empty()),
        ] {
            if empty {
                bail!("grid {name} is empty");
            }
        }
        if let Some(&r) = self.rho.iter().find(|r| !(0.0..=0.5).contains(*r)) {
            bail!("rho = {r} outside [0, 1/2]");
        }
        if let Some(&c) = self.c.iter().find(|c| !(**c > 1.0 && c.is_finite())) {
            bail!("c = {c} must exceed 1");
        }
        if let Some(&r) = self.rho_input.iter().flatten().find(|r| !(0.0..=0.5).contains(*r)) {
            bail!("rho_input = {r} outside [0, 1/2]");
        }
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        Ok(())
    }

    /// `(rho, c)` points in grid order.
    pub fn design_points(&self) -> Vec<(f64, f64)> {
        self.rho.iter().flat_map(|&r| self.c.iter().map(move |&c| (r, c))).collect()
    }

    pub fn rho_inputs(&self, rho: f64) -> Vec<f64> {
        self.rho_input.clone().unwrap_or_else(|| vec![rho])
    }

    /// The resolved config in file form, written next to the results.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            scenario: Some(self.scenario.name().into()),
            n: Some(self.n),
            layers: Some(self.layers),
            rho: Some(Grid::Many(self.rho.clone())),
            c: Some(Grid::Many(self.c.clone())),
            rho_input: self.rho_input.clone().map(Grid::Many),
            replications: Some(self.replications),
            seed: Some(self.seed),
            methods: Some(self.methods.iter().map(|m| m.name().into()).collect()),
            params: Some(self.params.iter().map(|p| p.name().into()).collect()),
            weights: Some(self.weights.iter().map(|w| w.name().into()).collect()),
            scaling: Some(scaling_name(self.scaling).into()),
            out: Some(self.out.clone()),
            jobs: self.jobs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }
}

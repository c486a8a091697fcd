//! Scenario files: a TOML document with a `[[scenario]]` array of flat
//! records. Parameter tables hold numbers or number lists only.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use conflab::geometry::{Param, Params};
use conflab::integrate::MAX_LEVEL;
use serde::Deserialize;

/// A configuration problem: parse failure, unknown key or bad value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<conflab::Error> for ConfigError {
    fn from(e: conflab::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    List(Vec<f64>),
}

pub type ParamTable = BTreeMap<String, ParamValue>;

pub fn to_params(table: &ParamTable) -> Params {
    Params(
        table
            .iter()
            .map(|(k, v)| {
                let p = match v {
                    ParamValue::Number(x) => Param::Number(*x),
                    ParamValue::List(xs) => Param::List(xs.clone()),
                };
                (k.clone(), p)
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    #[serde(alias = "json")]
    Machine,
}

impl std::str::FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "machine" | "json" => Ok(Format::Machine),
            _ => Err(ConfigError(format!("unknown format `{s}` (expected text or machine)"))),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format: Option<Format>,
    #[serde(default)]
    pub scenario: Vec<Scenario>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub identity: String,
    pub manifold: Option<String>,
    #[serde(default)]
    pub manifold_params: ParamTable,
    pub field: Option<String>,
    #[serde(default)]
    pub field_params: ParamTable,
    pub quantity: Option<String>,
    #[serde(default)]
    pub quantity_params: ParamTable,
    pub candidate: Option<String>,
    #[serde(default)]
    pub candidate_params: ParamTable,
    pub embedding: Option<String>,
    #[serde(default)]
    pub embedding_params: ParamTable,
    #[serde(default)]
    pub params: ParamTable,
    pub levels: Option<Vec<usize>>,
    pub tol: Option<f64>,
    pub gate_tol: Option<f64>,
    pub reduce: Option<bool>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

pub const DEFAULT_LEVELS: &[usize] = &[2, 3, 4];
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_GATE_TOL: f64 = 1e-6;

impl Scenario {
    pub fn levels(&self) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| DEFAULT_LEVELS.to_vec())
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn gate_tol(&self) -> f64 {
        self.gate_tol.unwrap_or(DEFAULT_GATE_TOL)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let levels = self.levels();
        if levels.is_empty() {
            return Err(self.error("`levels` must not be empty"));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(self.error("`levels` must be strictly increasing"));
        }
        if levels.iter().any(|&l| l > MAX_LEVEL) {
            return Err(self.error(&format!("grid levels above {MAX_LEVEL} are not supported")));
        }
        for (key, value) in [("tol", self.tol()), ("gate_tol", self.gate_tol())] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(self.error(&format!("`{key}` must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn error(&self, msg: &str) -> ConfigError {
        ConfigError(format!("scenario `{}`: {msg}", self.name))
    }
}

pub fn parse(text: &str) -> Result<ScenarioFile, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError(format!("parse error: {e}")))?;
    let mut seen = std::collections::BTreeSet::new();
    for s in &file.scenario {
        if !seen.insert(s.name.as_str()) {
            return Err(ConfigError(format!("duplicate scenario name `{}`", s.name)));
        }
        s.validate()?;
    }
    Ok(file)
}

pub fn load(path: &Path) -> Result<ScenarioFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

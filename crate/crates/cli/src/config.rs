//! Run configuration: a JSON file with frequencies in Hz, merged with
//! command-line flags (flags win).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use pulsed_epr::params::{hz, PhysicalParams};

use crate::CliError;

/// Physical parameter block. Rates are cyclic frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalBlock {
    pub f_m: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub g0: f64,
    pub g: f64,
    pub detuning: f64,
    /// Pulse length in seconds.
    pub tau: f64,
    pub n_bar: f64,
    pub n0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_l: Option<f64>,
}

impl PhysicalBlock {
    pub fn to_params(self) -> PhysicalParams {
        PhysicalParams {
            omega_m: hz(self.f_m),
            kappa: hz(self.kappa),
            gamma: hz(self.gamma),
            g0: hz(self.g0),
            g: hz(self.g),
            detuning: hz(self.detuning),
            tau: self.tau,
            n_bar: self.n_bar,
            n0: self.n0,
            lambda_l: self.lambda_l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessBlock {
    pub eta: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub n_bar: f64,
    pub n0: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamBlock {
    Physical(PhysicalBlock),
    Dimensionless(DimensionlessBlock),
}

/// Subcommand options that may come from the file. Every field is
/// optional; the matching flag overrides it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    pub r: Option<f64>,
    pub n_bar: Option<f64>,
    pub n0: Option<f64>,
    pub q: Option<f64>,
    pub detuning: Option<String>,
    pub f_m: Option<f64>,
    pub g0: Option<f64>,
    pub wavelength: Option<f64>,
    pub convention: Option<String>,
    pub n_bar_min: Option<f64>,
    pub n_bar_max: Option<f64>,
    pub count: Option<usize>,
    pub figure2: Option<bool>,
    pub ramp_fraction: Option<f64>,
    pub points: Option<usize>,
    pub shape: Option<String>,
    pub detuning_mode: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub params: Option<ParamBlock>,
    pub options: FileOptions,
    pub format: Option<String>,
    pub out_dir: Option<String>,
}

const TOP_KEYS: &[&str] = &["scenario", "physical", "dimensionless", "options", "format", "out_dir"];
const PHYSICAL_KEYS: &[&str] = &["f_m", "kappa", "gamma", "g0", "g", "detuning", "tau", "n_bar", "n0", "lambda_l"];
const DIMENSIONLESS_KEYS: &[&str] = &["eta", "xi", "epsilon", "n_bar", "n0", "q"];
const OPTION_KEYS: &[&str] = &[
    "r",
    "n_bar",
    "n0",
    "q",
    "detuning",
    "f_m",
    "g0",
    "wavelength",
    "convention",
    "n_bar_min",
    "n_bar_max",
    "count",
    "figure2",
    "ramp_fraction",
    "points",
    "shape",
    "detuning_mode",
];

fn unknown_keys(obj: &Map<String, Value>, prefix: &str, allowed: &[&str], out: &mut Vec<String>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            out.push(format!("{prefix}{key}"));
        }
    }
}

fn section<'a>(root: &'a Map<String, Value>, name: &str) -> Result<Option<&'a Map<String, Value>>, CliError> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(_) => Err(CliError::config(format!("`{name}` must be an object"))),
    }
}

fn typed<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::config(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let root: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        let Value::Object(root) = root else {
            return Err(CliError::config("configuration must be a JSON object"));
        };

        let mut unknown = Vec::new();
        unknown_keys(&root, "", TOP_KEYS, &mut unknown);
        let physical = section(&root, "physical")?;
        let dimensionless = section(&root, "dimensionless")?;
        let options = section(&root, "options")?;
        if let Some(m) = physical {
            unknown_keys(m, "physical.", PHYSICAL_KEYS, &mut unknown);
        }
        if let Some(m) = dimensionless {
            unknown_keys(m, "dimensionless.", DIMENSIONLESS_KEYS, &mut unknown);
        }
        if let Some(m) = options {
            unknown_keys(m, "options.", OPTION_KEYS, &mut unknown);
        }
        if !unknown.is_empty() {
            return Err(CliError::config(format!("unknown configuration keys: {}", unknown.join(", "))));
        }

        let params = match (root.get("physical"), root.get("dimensionless")) {
            (Some(_), Some(_)) => {
                return Err(CliError::config("give exactly one of `physical` and `dimensionless`, not both"))
            }
            (None, None) => return Err(CliError::config("give exactly one of `physical` and `dimensionless`")),
            (Some(v), None) => ParamBlock::Physical(typed(v, "physical")?),
            (None, Some(v)) => ParamBlock::Dimensionless(typed(v, "dimensionless")?),
        };
        Ok(RunConfig {
            scenario: root.get("scenario").map(|v| typed(v, "scenario")).transpose()?,
            params: Some(params),
            options: root.get("options").map(|v| typed(v, "options")).transpose()?.unwrap_or_default(),
            format: root.get("format").map(|v| typed(v, "format")).transpose()?,
            out_dir: root.get("out_dir").map(|v| typed(v, "out_dir")).transpose()?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn physical(&self) -> Option<&PhysicalBlock> {
        match &self.params {
            Some(ParamBlock::Physical(p)) => Some(p),
            _ => None,
        }
    }

    pub fn dimensionless(&self) -> Option<&DimensionlessBlock> {
        match &self.params {
            Some(ParamBlock::Dimensionless(d)) => Some(d),
            _ => None,
        }
    }
}

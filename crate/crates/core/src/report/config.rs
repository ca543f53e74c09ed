//! TOML configuration files. Each table mirrors the flags of one subcommand;
//! a flag given on the command line wins over the file, the file wins over
//! the built-in default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Engine, Mode};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    /// Worker threads for replica and grid parallelism.
    pub threads: Option<usize>,
    pub simulate: SimulateSection,
    pub taylor: TaylorSection,
    pub theta: ThetaSection,
    pub density: DensitySection,
    pub sigma: SigmaSection,
    pub julia: JuliaSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub mode: Option<Mode>,
    pub steps: Option<usize>,
    pub length: Option<u64>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub engine: Option<Engine>,
    pub compare_upto: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaylorSection {
    pub imax: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaSection {
    pub a: Option<f64>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub x_max: Option<f64>,
    pub points: Option<usize>,
    pub p: Option<f64>,
    pub radius: Option<f64>,
    pub step: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaSection {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
    pub radius: Option<f64>,
    pub step: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JuliaSection {
    pub bounds: Option<String>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub max_iter: Option<u32>,
    pub escape_radius: Option<f64>,
    pub r: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub quick: Option<bool>,
    pub seed: Option<u64>,
    pub tolerances: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
}

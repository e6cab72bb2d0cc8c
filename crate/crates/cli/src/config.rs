//! Pipeline configuration, read from TOML and overridden by flags.
//!
//! ```toml
//! schema_version = 1
//! seed = 42
//! out_dir = "out"
//! format = "csv"
//!
//! [adjust]
//! input = "timestamps.csv"
//! knot_spacing = 90.0
//!
//! [simulate]
//! arrivals = 10000000
//! models = ["static_exponential", "dynamic_gg"]
//!
//! [[arrival_models]]
//! name = "bursty"
//! c = -0.1
//! b = 0.9
//! a = 0.1
//! psi = 1.0
//! phi = 1.0
//! ```

use std::path::{Path, PathBuf};

use gasqueue::queue_sim::{CostModel, RateNormalization};
use gasqueue::seasonal::synthetic::SyntheticConfig;
use gasqueue::seasonal::DEFAULT_KNOT_SPACING;
use gasqueue::GasParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub sample: SyntheticConfig,
    pub adjust: AdjustConfig,
    pub fit: FitConfig,
    pub simulate: SimulateConfig,
    pub optimize: OptimizeConfig,
    /// Extra arrival models, referenced by name from `simulate` and `optimize`.
    pub arrival_models: Vec<ArrivalModel>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: None,
            out_dir: PathBuf::from("."),
            format: Format::Csv,
            sample: SyntheticConfig::default(),
            adjust: AdjustConfig::default(),
            fit: FitConfig::default(),
            simulate: SimulateConfig::default(),
            optimize: OptimizeConfig::default(),
            arrival_models: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjustConfig {
    pub input: Option<PathBuf>,
    pub timestamp_column: String,
    /// Read precomputed durations from this column instead of timestamps.
    pub duration_column: Option<String>,
    /// First timestamp when reading durations.
    pub start: Option<String>,
    pub knot_spacing: f64,
    /// Sort timestamps instead of rejecting unsorted input.
    pub sort: bool,
}

impl Default for AdjustConfig {
    fn default() -> Self {
        Self {
            input: None,
            timestamp_column: "timestamp".into(),
            duration_column: None,
            start: None,
            knot_spacing: DEFAULT_KNOT_SPACING,
            sort: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub column: String,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            column: "adjusted_duration".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Measured arrivals per scenario, summed over replications.
    pub arrivals: u64,
    pub replications: u32,
    pub warmup: u64,
    pub normalization: RateNormalization,
    pub models: Vec<String>,
    /// Service rates of the single-server grid.
    pub service_rates: Vec<f64>,
    /// Server counts of the multi-server grid.
    pub servers: Vec<usize>,
    /// Per-server service rate of the multi-server grid.
    pub multi_server_rate: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            arrivals: 10_000_000,
            replications: 4,
            warmup: 10_000,
            normalization: RateNormalization::UnitMean,
            models: builtin_models().into_iter().map(|m| m.name).collect(),
            service_rates: vec![1.1, 1.2, 1.3, 1.4, 1.5],
            servers: vec![11, 12, 13, 14, 15],
            multi_server_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub arrivals: u64,
    pub replications: u32,
    pub warmup: u64,
    pub normalization: RateNormalization,
    pub servers: Vec<usize>,
    pub service_rate: f64,
    pub static_model: String,
    pub dynamic_model: String,
    pub cost: CostModel,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            arrivals: 10_000_000,
            replications: 4,
            warmup: 10_000,
            normalization: RateNormalization::UnitMean,
            servers: vec![11, 12, 13, 14, 15],
            service_rate: 0.1,
            static_model: "static_gg".into(),
            dynamic_model: "dynamic_gg".into(),
            cost: CostModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalModel {
    pub name: String,
    pub c: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub a: f64,
    pub psi: f64,
    pub phi: f64,
}

impl ArrivalModel {
    fn new(name: &str, c: f64, b: f64, a: f64, psi: f64, phi: f64) -> Self {
        Self {
            name: name.into(),
            c,
            b,
            a,
            psi,
            phi,
        }
    }

    pub fn params(&self) -> Result<GasParams> {
        Ok(GasParams::new(self.c, self.b, self.a, self.psi, self.phi)?)
    }
}

/// Built-in arrival models, fitted to adjusted order inter-arrival times.
pub fn builtin_models() -> Vec<ArrivalModel> {
    vec![
        ArrivalModel::new("static_exponential", 0.0, 0.0, 0.0, 1.0, 1.0),
        ArrivalModel::new("static_gg", -0.12, 0.0, 0.0, 1.08, 0.93),
        ArrivalModel::new("dynamic_exponential", 0.0, 0.76, 0.06, 1.0, 1.0),
        ArrivalModel::new("dynamic_gg", -0.06, 0.72, 0.07, 1.15, 0.90),
    ]
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |message: String| CliError::Config {
            path: path.to_path_buf(),
            message,
        };
        let config: PipelineConfig = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        let mut names: Vec<&str> = config.arrival_models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad(format!("arrival model '{}' is defined twice", w[0])));
        }
        Ok(config)
    }

    pub fn require_seed(&self, command: &str) -> Result<u64> {
        self.seed
            .ok_or_else(|| CliError::Input(format!("{command} needs a seed (--seed or `seed` in the config)")))
    }

    /// Looks up an arrival model, user definitions first.
    pub fn arrival_model(&self, name: &str) -> Result<ArrivalModel> {
        self.arrival_models
            .iter()
            .cloned()
            .chain(builtin_models())
            .find(|m| m.name == name)
            .ok_or_else(|| CliError::Input(format!("unknown arrival model '{name}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = toml::to_string(&PipelineConfig {
            seed: Some(3),
            ..Default::default()
        })
        .unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.seed, Some(3));
        assert_eq!(back.simulate, SimulateConfig::default());
    }

    #[test]
    fn custom_models_shadow_builtins() {
        let config: PipelineConfig = toml::from_str(
            "schema_version = 1\n[[arrival_models]]\nname = \"static_gg\"\nc = 0.5\npsi = 1.0\nphi = 1.0\n",
        )
        .unwrap();
        assert_eq!(config.arrival_model("static_gg").unwrap().c, 0.5);
        assert_eq!(config.arrival_model("dynamic_gg").unwrap().b, 0.72);
        assert!(config.arrival_model("nope").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("schema_version = 1\nsede = 4\n").is_err());
    }
}

//! File formats: one-shot market/guardrail scenarios and experiment configs.
//! Both TOML and JSON are accepted, keyed off the file extension.

use crate::arrivals::{ArrivalError, ArrivalModel};
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported config extension {0:?} (expected .toml or .json)")]
    Extension(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Arrival(#[from] ArrivalError),
}

/// Arrival model as written in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArrivalConfig {
    Deterministic { count: u64 },
    Poisson { rate: f64 },
    Normal { mu: f64, sigma: f64 },
    Empirical { support: Vec<u64>, probabilities: Vec<f64> },
}

impl ArrivalConfig {
    pub fn build(&self) -> Result<ArrivalModel, ConfigError> {
        Ok(match self {
            ArrivalConfig::Deterministic { count } => ArrivalModel::deterministic(*count)?,
            ArrivalConfig::Poisson { rate } => ArrivalModel::poisson(*rate)?,
            ArrivalConfig::Normal { mu, sigma } => ArrivalModel::normal(*mu, *sigma)?,
            ArrivalConfig::Empirical { support, probabilities } => {
                if support.len() != probabilities.len() {
                    return Err(ConfigError::Invalid(
                        "empirical support and probabilities differ in length".into(),
                    ));
                }
                ArrivalModel::empirical(
                    support.iter().copied().zip(probabilities.iter().copied()).collect(),
                )?
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct TypeConfig {
    pub id: String,
    pub weights: Vec<f64>,
    /// Stationary model applied every round...
    pub arrival: Option<ArrivalConfig>,
    /// ...or an explicit per-round schedule, cycled if shorter than T.
    pub arrivals: Option<Vec<ArrivalConfig>>,
}

/// A complete scenario: horizon, budgets, and typed arrival processes.
#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioConfig {
    #[serde(rename = "T")]
    pub rounds: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub budgets: Vec<f64>,
    pub types: Vec<TypeConfig>,
}

fn default_delta() -> f64 {
    0.1
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        parse_file(path)
    }

    /// Per-round per-type models, with schedules cycled out to T rounds.
    pub fn arrival_models(&self) -> Result<Vec<Vec<ArrivalModel>>, ConfigError> {
        let mut per_round = vec![Vec::with_capacity(self.types.len()); self.rounds];
        for ty in &self.types {
            match (&ty.arrival, &ty.arrivals) {
                (Some(model), None) => {
                    let m = model.build()?;
                    for row in per_round.iter_mut() {
                        row.push(m.clone());
                    }
                }
                (None, Some(schedule)) if !schedule.is_empty() => {
                    let built: Vec<ArrivalModel> =
                        schedule.iter().map(|c| c.build()).collect::<Result<_, _>>()?;
                    for (t, row) in per_round.iter_mut().enumerate() {
                        row.push(built[t % built.len()].clone());
                    }
                }
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "type {:?} must set exactly one of `arrival` or a non-empty `arrivals`",
                        ty.id
                    )));
                }
            }
        }
        Ok(per_round)
    }

    pub fn weights(&self) -> Vec<Vec<f64>> {
        self.types.iter().map(|t| t.weights.clone()).collect()
    }
}

/// Per-round (mu, sigma) parameter schedule for file-driven demand settings;
/// cycled when shorter than the horizon.
#[derive(Debug, Clone, Deserialize)]
pub struct ParamsFile {
    pub rounds: Vec<RoundParams>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RoundParams {
    pub mu: f64,
    pub sigma: f64,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let parsed: ParamsFile = parse_file(path)?;
        if parsed.rounds.is_empty() {
            return Err(ConfigError::Invalid("params file has no rounds".into()));
        }
        Ok(parsed)
    }
}

/// Experiment config file mirroring the built-in experiment shape.
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentFile {
    pub setting: String,
    #[serde(rename = "T_values")]
    pub t_values: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub base_seed: Option<u64>,
    pub lt_coeff: Option<f64>,
    pub lt_exponents: Option<Vec<f64>>,
    pub params_file: Option<String>,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        parse_file(path)
    }
}

/// Parse any deserializable document from a .toml or .json file.
pub fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "toml" => toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        "json" => serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        other => Err(ConfigError::Extension(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(ext: &str, body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new()
            .suffix(&format!(".{ext}"))
            .tempfile()
            .unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn toml_scenario_roundtrip() {
        let f = write_temp(
            "toml",
            r#"
T = 4
delta = 0.05
budgets = [10.0, 20.0]

[[types]]
id = "a"
weights = [1.0, 2.0]
arrival = { kind = "poisson", rate = 1.5 }

[[types]]
id = "b"
weights = [2.0, 1.0]
arrival = { kind = "deterministic", count = 3 }
"#,
        );
        let sc = ScenarioConfig::load(f.path()).unwrap();
        assert_eq!(sc.rounds, 4);
        assert_eq!(sc.budgets, vec![10.0, 20.0]);
        let models = sc.arrival_models().unwrap();
        assert_eq!(models.len(), 4);
        assert_eq!(models[0].len(), 2);
    }

    #[test]
    fn json_scenario_with_schedule_cycles() {
        let f = write_temp(
            "json",
            r#"{
  "T": 5,
  "budgets": [6.0],
  "types": [
    {
      "id": "a",
      "weights": [1.0],
      "arrivals": [
        {"kind": "normal", "mu": 10.0, "sigma": 3.0},
        {"kind": "normal", "mu": 20.0, "sigma": 1.0}
      ]
    }
  ]
}"#,
        );
        let sc = ScenarioConfig::load(f.path()).unwrap();
        let models = sc.arrival_models().unwrap();
        // Schedule of length 2 cycled over 5 rounds: rounds 0,2,4 share model 0.
        assert_eq!(models[0][0].mean(), models[2][0].mean());
        assert_eq!(models[1][0].mean(), models[3][0].mean());
        assert_ne!(models[0][0].mean(), models[1][0].mean());
    }

    #[test]
    fn bad_extension_and_missing_arrival() {
        let f = write_temp("yaml", "T: 3");
        assert!(matches!(
            ScenarioConfig::load(f.path()),
            Err(ConfigError::Extension(_))
        ));

        let g = write_temp(
            "toml",
            r#"
T = 2
budgets = [1.0]
[[types]]
id = "a"
weights = [1.0]
"#,
        );
        let sc = ScenarioConfig::load(g.path()).unwrap();
        assert!(matches!(sc.arrival_models(), Err(ConfigError::Invalid(_))));
    }
}

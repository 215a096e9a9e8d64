//! Optional TOML config. Flags override it; built-in defaults fill the rest.
//!
//! ```toml
//! model_dir = "models"
//! jobs = 4
//!
//! [predict]
//! k = 10
//! mode = "hybrid"
//! k_sites = 5
//! adapters = ["python3 adapter.py --backend echo"]
//! deadline = "30s"
//!
//! [pathway]
//! branching = 10
//! max_depth = 7
//! time_budget = "2h"
//! selection = "max_min_step"
//! predictor = "twostep"
//!
//! [ptgen]
//! heteroatom_cutoff = 1e3
//! carbon_cutoff = 0.1
//! intrinsic_log_k0 = 2.0
//! smooth_eigen = false
//! shard_size = 100000
//!
//! [train]
//! seed = 0
//! epochs = 10
//! profile = "standard"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub pathway: PathwaySection,
    #[serde(default)]
    pub ptgen: PtgenSection,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictSection {
    pub k: Option<usize>,
    pub mode: Option<String>,
    pub k_sites: Option<usize>,
    #[serde(default)]
    pub adapters: Vec<String>,
    pub deadline: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwaySection {
    pub branching: Option<usize>,
    pub max_depth: Option<usize>,
    pub time_budget: Option<String>,
    pub selection: Option<String>,
    pub predictor: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtgenSection {
    pub heteroatom_cutoff: Option<f64>,
    pub carbon_cutoff: Option<f64>,
    pub intrinsic_log_k0: Option<f64>,
    pub smooth_eigen: Option<bool>,
    pub shard_size: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub profile: Option<String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let c: Config = toml::from_str(&doc).unwrap();
        assert_eq!(c.pathway.max_depth, Some(7));
        assert_eq!(c.predict.adapters.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("modeldir = 'x'").is_err());
    }
}

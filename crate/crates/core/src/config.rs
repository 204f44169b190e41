//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bias::{BiasPolicies, LabelPolicy, SamplePolicy};
use crate::datagen::PopulationSpec;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const EXPERIMENT_A_CFG: &str = include_str!("../configs/experiment_A.cfg");
pub const EXPERIMENT_B_CFG: &str = include_str!("../configs/experiment_B.cfg");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    /// Balanced base: reference-group records with groups reassigned at random.
    A,
    /// The generated population as is.
    B,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Experiment::A => f.write_str("A"),
            Experiment::B => f.write_str("B"),
        }
    }
}

/// Records the metrics are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    #[default]
    Test,
    Train,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub evaluate_on: EvalSplit,
    #[serde(default = "default_min_cell")]
    pub min_cell: usize,
    pub population: PopulationSpec,
    #[serde(default = "LabelPolicy::biased")]
    pub biased_label_policy: LabelPolicy,
    #[serde(default = "LabelPolicy::unbiased")]
    pub unbiased_label_policy: LabelPolicy,
    #[serde(default = "SamplePolicy::biased")]
    pub biased_sample_policy: SamplePolicy,
    #[serde(default = "SamplePolicy::unbiased")]
    pub unbiased_sample_policy: SamplePolicy,
    #[serde(default)]
    pub model: ModelParams,
}

fn default_trials() -> usize {
    20
}

fn default_min_cell() -> usize {
    10
}

impl ExperimentConfig {
    /// The bundled configuration for `experiment`.
    pub fn bundled(experiment: Experiment) -> Self {
        let text = match experiment {
            Experiment::A => EXPERIMENT_A_CFG,
            Experiment::B => EXPERIMENT_B_CFG,
        };
        Self::parse(text).expect("bundled config parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: "<inline>".into(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::validation("trials", "must be at least 1"));
        }
        self.population.validate()?;
        self.policies().validate()?;
        self.model.validate()
    }

    pub fn policies(&self) -> BiasPolicies {
        BiasPolicies {
            biased_label_policy: self.biased_label_policy,
            unbiased_label_policy: self.unbiased_label_policy,
            biased_sample_policy: self.biased_sample_policy,
            unbiased_sample_policy: self.unbiased_sample_policy,
            min_cell: self.min_cell,
        }
    }
}

//! The experiment configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::driver::ALConfig;
use crate::error::{Error, Result};
use crate::oracle::{generate_synthetic_task, SyntheticTask, TaskConfig};

/// Everything needed to reproduce a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: TaskConfig,
    /// Fixed task seed; when absent each run seed also seeds its task.
    #[serde(default)]
    pub task_seed: Option<u64>,
    #[serde(default)]
    pub experiment: ALConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskConfig::default(),
            task_seed: None,
            experiment: ALConfig::default(),
            seeds: default_seeds(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.experiment.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let needed = self.experiment.initial_labeled + self.experiment.cycles * self.experiment.budget;
        if needed > self.task.pool_size {
            return Err(Error::Config(format!(
                "initial_labeled + cycles * budget = {needed} exceeds pool_size {}",
                self.task.pool_size
            )));
        }
        Ok(())
    }

    pub fn task_for_seed(&self, seed: u64) -> Result<SyntheticTask> {
        generate_synthetic_task(&self.task, self.task_seed.unwrap_or(seed))
    }
}

//! Effective configuration: built-in defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use deft_core::config::{parse_value, render, ConfigFile, Configurable};
use deft_core::model::Aggregator;
use deft_core::tasks::TaskKind;
use deft_core::{DeftConfig, Error, Result, SbmConfig, TaskSpec, TrainConfig};

use crate::args::{AggregatorArg, ModelFlags, TaskArg};

/// Keys owned by the command line itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub runs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 0, runs: 1 }
    }
}

impl Configurable for RunOptions {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "runs" => self.runs = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(String, String)> {
        vec![
            ("seed".into(), self.seed.to_string()),
            ("runs".into(), self.runs.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub model: DeftConfig,
    pub task: TaskSpec,
    pub train: TrainConfig,
    pub data: SbmConfig,
    pub run: RunOptions,
}

impl Settings {
    /// Defaults overridden by `config` (if any).
    pub fn load(config: Option<&Path>, data: SbmConfig) -> Result<Self> {
        let mut s = Settings {
            data,
            ..Default::default()
        };
        if let Some(path) = config {
            let file = ConfigFile::load(path)?;
            file.apply(&mut [
                &mut s.model,
                &mut s.task,
                &mut s.train,
                &mut s.data,
                &mut s.run,
            ])?;
        }
        Ok(s)
    }

    pub fn apply_model_flags(&mut self, f: &ModelFlags) -> Result<()> {
        if let Some(t) = f.task {
            self.task.kind = match t {
                TaskArg::Lp => TaskKind::LinkPrediction,
                TaskArg::Ec => TaskKind::EdgeClassification,
                TaskArg::Nc => TaskKind::NodeClassification,
            };
        }
        if let Some(m) = f.filter_order {
            self.model.filter_order = m;
        }
        if let Some(s) = &f.scales {
            self.model.set("scales", s)?;
        }
        if let Some(a) = f.aggregator {
            self.model.aggregator = match a {
                AggregatorArg::Mlp => Aggregator::Mlp,
                AggregatorArg::Gat => Aggregator::GatStyle,
                AggregatorArg::Transformer => Aggregator::SparseTransformer,
            };
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.task.validate()?;
        self.train.validate()?;
        self.data.validate()?;
        if self.run.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e = self.run.entries();
        e.extend(self.model.entries());
        e.extend(self.task.entries());
        e.extend(self.train.entries());
        e.extend(self.data.entries());
        e
    }

    /// Writes `<out>/config.resolved`.
    pub fn write_resolved(&self, out: &Path) -> Result<()> {
        std::fs::write(out.join("config.resolved"), render(&self.entries()))?;
        Ok(())
    }
}

pub fn prepare_out(out: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    Ok(out.to_path_buf())
}

/// Worker threads from `DEFT_THREADS`, defaulting to the available cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var("DEFT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!(
                "DEFT_THREADS must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

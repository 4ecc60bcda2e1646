//! Experiment configuration: flat `key = value` files plus flag overrides.

use std::path::PathBuf;

use qnn_core::gradient::copies_per_component;
use qnn_core::qnn::{LossFunction, Network};
use qnn_core::trainer::{Mode, TrainerConfig, DEFAULT_ALPHA};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Architecture {
    /// The two-layer, three-perceptron discrimination network.
    Default,
    /// Layout taken from a checkpoint file; its coefficients are replaced by
    /// a fresh initialization.
    Checkpoint(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: String,
    pub seed: u64,
    pub total_samples: usize,
    pub batch_size: usize,
    pub alpha: f64,
    /// Only used in copy-approx mode; defaults to the Hoeffding count for
    /// ε = δ = 0.1.
    pub copies_per_component: Option<usize>,
    pub architecture: Architecture,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: "randomized-qsgd".to_string(),
            seed: 0,
            total_samples: 30_000,
            batch_size: 100,
            alpha: DEFAULT_ALPHA,
            copies_per_component: None,
            architecture: Architecture::Default,
            output: PathBuf::from("qsgd-out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value '{value}' for {key}")))
}

impl ExperimentConfig {
    /// Set one key; dashes and underscores in the key are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "mode" => self.mode = value.to_string(),
            "seed" => self.seed = parse(&key, value)?,
            "total_samples" => self.total_samples = parse(&key, value)?,
            "batch_size" => self.batch_size = parse(&key, value)?,
            "alpha" => self.alpha = parse(&key, value)?,
            "copies_per_component" => self.copies_per_component = Some(parse(&key, value)?),
            "architecture" => {
                self.architecture = if value == "default" {
                    Architecture::Default
                } else {
                    Architecture::Checkpoint(PathBuf::from(value))
                }
            }
            "output" => self.output = PathBuf::from(value),
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Apply a config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn network(&self) -> Result<Network, CliError> {
        match &self.architecture {
            Architecture::Default => Ok(Network::discrimination_default()),
            Architecture::Checkpoint(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                qnn_core::checkpoint::from_text(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn trainer(&self, net: &Network) -> Result<TrainerConfig, CliError> {
        let mode = match self.mode.as_str() {
            "randomized-qsgd" => Mode::RandomizedQsgd,
            "exact-gradient" => Mode::ExactGradient,
            "copy-approx" => Mode::CopyApprox {
                copies_per_component: match self.copies_per_component {
                    Some(n) => n,
                    None => copies_per_component(0.1, 0.1, 1.0, net.parameter_count())?,
                },
            },
            other => return Err(CliError::Config(format!(
                "unknown mode '{other}' (expected randomized-qsgd, exact-gradient or copy-approx)"
            ))),
        };
        let cfg = TrainerConfig {
            alpha: self.alpha,
            total_samples: self.total_samples,
            batch_size: self.batch_size,
            seed: self.seed,
            mode,
            loss: LossFunction::ZeroOne,
        };
        cfg.validate()?;
        if let Mode::CopyApprox {
            copies_per_component,
        } = cfg.mode
        {
            let per_step = copies_per_component * net.parameter_count();
            if cfg.total_samples < per_step {
                return Err(CliError::Config(format!(
                    "total_samples = {} is below the {per_step} copies one copy-approx step needs",
                    self.total_samples
                )));
            }
        }
        Ok(cfg)
    }
}

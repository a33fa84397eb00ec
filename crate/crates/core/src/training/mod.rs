//! Two training stages: correspondence learning, then adversarial-perceptual
//! generator training with a gradient-penalty critic.

mod amc;
mod gan;
mod losses;

pub use amc::{amc_backward, amc_forward_cache, pair_accuracy, train_amc, AmcCache};
pub use gan::{generator_loss, train_generator, GenLossParts, GenTrainReport};
pub use losses::{
    amc_loss, amc_loss_grads, batch_mean, critic_loss, gradient_penalty,
    gradient_penalty_backward, mse, perceptual_loss, perceptual_loss_with_grad,
    wasserstein_estimate,
};

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmcTrainConfig {
    /// Pairs per iteration, half positive half negative.
    pub batch: usize,
    pub lr: f64,
    pub iterations: u64,
    /// Clip window length in frames.
    pub window: usize,
    pub seed: u64,
}

impl Default for AmcTrainConfig {
    fn default() -> Self {
        AmcTrainConfig {
            batch: 32,
            lr: 1e-3,
            iterations: 2000,
            window: 60,
            seed: 7,
        }
    }
}

impl AmcTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch < 2 {
            return Err(Error::InvalidConfig(
                "batch must be >= 2 (one positive and one negative)".into(),
            ));
        }
        if self.window == 0 || self.lr <= 0.0 {
            return Err(Error::InvalidConfig("window and lr must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenTrainConfig {
    pub batch: usize,
    pub lambda_mse: f64,
    pub lambda_per: f64,
    pub lambda_adv: f64,
    /// Critic steps per generator step.
    pub n_critic: usize,
    pub gp_weight: f64,
    pub lr_g: f64,
    pub lr_d: f64,
    /// Generator steps.
    pub iterations: u64,
    pub window: usize,
    pub seed: u64,
    /// Fine-tune the transferred music encoder inside the generator.
    pub fine_tune_front: bool,
}

impl Default for GenTrainConfig {
    fn default() -> Self {
        GenTrainConfig {
            batch: 8,
            lambda_mse: 1.0,
            lambda_per: 0.1,
            lambda_adv: 0.01,
            n_critic: 5,
            gp_weight: 10.0,
            lr_g: 1e-4,
            lr_d: 1e-4,
            iterations: 1000,
            window: 60,
            seed: 11,
            fine_tune_front: true,
        }
    }
}

impl GenTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_mse < 0.0 || self.lambda_per < 0.0 || self.lambda_adv < 0.0 {
            return Err(Error::InvalidConfig("loss weights must be nonnegative".into()));
        }
        if self.n_critic < 1 {
            return Err(Error::InvalidConfig("n_critic must be >= 1".into()));
        }
        if self.batch == 0 || self.window == 0 {
            return Err(Error::InvalidConfig("batch and window must be positive".into()));
        }
        Ok(())
    }
}

/// One logged iteration, serialized as a JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainMetricsRecord {
    Amc {
        iter: u64,
        loss_amc: f64,
    },
    Gen {
        iter: u64,
        loss_mse: f64,
        loss_per: f64,
        loss_adv: f64,
        loss_g_total: f64,
        w_estimate: f64,
        gp: f64,
    },
}

impl TrainMetricsRecord {
    pub fn iter(&self) -> u64 {
        match self {
            TrainMetricsRecord::Amc { iter, .. } => *iter,
            TrainMetricsRecord::Gen { iter, .. } => *iter,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            TrainMetricsRecord::Amc { loss_amc, .. } => loss_amc.is_finite(),
            TrainMetricsRecord::Gen {
                loss_mse,
                loss_per,
                loss_adv,
                loss_g_total,
                w_estimate,
                gp,
                ..
            } => {
                loss_mse.is_finite()
                    && loss_per.is_finite()
                    && loss_adv.is_finite()
                    && loss_g_total.is_finite()
                    && w_estimate.is_finite()
                    && gp.is_finite()
            }
        }
    }
}

/// Append records to `metrics.jsonl` inside a run directory.
pub fn append_metrics(rundir: &Path, records: &[TrainMetricsRecord]) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(rundir.join("metrics.jsonl"))?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<TrainMetricsRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

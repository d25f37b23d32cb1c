//! Versioned model checkpoints: one JSON document holding the architecture
//! descriptor, the flat parameter vector, the normalization statistics the
//! model was trained under, and the training seed.

use crate::dataio::NormStats;
use crate::models::{Model, ModelSpec};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "platebench-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub spec: ModelSpec,
    pub theta: Vec<f64>,
    pub norm_stats: Option<NormStats>,
    pub train_seed: u64,
}

impl Checkpoint {
    pub fn from_model(model: &Model, norm_stats: Option<NormStats>, train_seed: u64) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            spec: model.spec().clone(),
            theta: model.store().theta().to_vec(),
            norm_stats,
            train_seed,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!(
                "{} is not a model checkpoint (format `{}`)",
                path.display(),
                ckpt.format
            )));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        if ckpt.theta.len() != ckpt.spec.param_count() {
            return Err(Error::Data(format!(
                "checkpoint carries {} parameters but the architecture needs {}",
                ckpt.theta.len(),
                ckpt.spec.param_count()
            )));
        }
        Ok(ckpt)
    }

    /// Reconstructs the exact model: architecture from the spec, parameters
    /// from the stored vector.
    pub fn into_model(self) -> Result<Model> {
        let mut model = Model::new(self.spec)?;
        model.store_mut().theta_mut().copy_from_slice(&self.theta);
        Ok(model)
    }
}

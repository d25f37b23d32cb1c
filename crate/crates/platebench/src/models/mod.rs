//! The three surrogate families — linear regression, ELU multilayer
//! perceptron, and stacked GRU — as forward/backward maps from an input
//! window to a scalar prediction.
//!
//! Windows arrive newest-first: entry `j` of a window for target index `k`
//! is `u(t_k - j Δt)`. The MLP consumes that vector directly; the GRU
//! reverses it internally so that the final hidden state has seen the newest
//! sample last.

mod gru;
mod lr;
mod mlp;

pub use lr::lr_fit_closed_form;

use crate::nn_core::{Mat, ParamStore};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Surrogate model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lr,
    Mlp,
    Gru,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Lr => "lr",
            Family::Mlp => "mlp",
            Family::Gru => "gru",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(Family::Lr),
            "mlp" => Ok(Family::Mlp),
            "gru" => Ok(Family::Gru),
            other => Err(Error::InvalidInput(format!("unknown model family `{other}`"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Architecture description: family, window length `s`, hidden-layer count
/// `h`, per-layer widths, and the seed that drives initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub s: usize,
    pub h: usize,
    pub widths: Vec<usize>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn lr(s: usize, seed: u64) -> Self {
        ModelSpec {
            family: Family::Lr,
            s,
            h: 0,
            widths: Vec::new(),
            seed,
        }
    }

    /// MLP hidden widths are fixed to `s` by construction.
    pub fn mlp(s: usize, h: usize, seed: u64) -> Self {
        ModelSpec {
            family: Family::Mlp,
            s,
            h,
            widths: vec![s; h],
            seed,
        }
    }

    pub fn gru(s: usize, h: usize, width: usize, seed: u64) -> Self {
        ModelSpec {
            family: Family::Gru,
            s,
            h,
            widths: vec![width; h],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::InvalidInput("window length s must be >= 1".into()));
        }
        match self.family {
            Family::Lr => {
                if self.h != 0 || !self.widths.is_empty() {
                    return Err(Error::InvalidInput(
                        "LR has no hidden layers; use family=lr with h=0".into(),
                    ));
                }
            }
            Family::Mlp => {
                if self.h == 0 {
                    // An MLP with zero hidden layers would silently be an LR;
                    // reject it so the two architectures stay distinct.
                    return Err(Error::InvalidInput(
                        "MLP requires h >= 1; a zero-depth MLP must be declared as LR".into(),
                    ));
                }
                if self.widths.len() != self.h || self.widths.iter().any(|&w| w != self.s) {
                    return Err(Error::InvalidInput(
                        "MLP hidden widths are fixed to the window length s".into(),
                    ));
                }
            }
            Family::Gru => {
                if self.h == 0 {
                    return Err(Error::InvalidInput("GRU requires h >= 1".into()));
                }
                if self.widths.len() != self.h || self.widths.iter().any(|&w| w == 0) {
                    return Err(Error::InvalidInput(
                        "GRU needs one positive width per hidden layer".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of trainable parameters implied by the architecture.
    pub fn param_count(&self) -> usize {
        match self.family {
            Family::Lr => self.s + 1,
            Family::Mlp => self.h * (self.s * self.s + self.s) + self.s + 1,
            Family::Gru => {
                let mut p = 0;
                let mut prev = 1; // SISO input: n_0 = 1
                for &n in &self.widths {
                    p += 3 * (n * n + n * prev + n);
                    prev = n;
                }
                p + prev + 1
            }
        }
    }
}

/// A surrogate model instance: spec, parameters and scratch buffers.
pub enum Model {
    Lr(lr::LrModel),
    Mlp(mlp::MlpModel),
    Gru(gru::GruModel),
}

impl Model {
    /// Builds a model with seeded initialization per the spec.
    pub fn new(spec: ModelSpec) -> Result<Model> {
        spec.validate()?;
        let model = match spec.family {
            Family::Lr => Model::Lr(lr::LrModel::new(spec)),
            Family::Mlp => Model::Mlp(mlp::MlpModel::new(spec)),
            Family::Gru => Model::Gru(gru::GruModel::new(spec)),
        };
        debug_assert_eq!(
            model.store().layout().total(),
            model.spec().param_count(),
            "parameter layout must tile the spec's count exactly"
        );
        Ok(model)
    }

    pub fn spec(&self) -> &ModelSpec {
        match self {
            Model::Lr(m) => m.spec(),
            Model::Mlp(m) => m.spec(),
            Model::Gru(m) => m.spec(),
        }
    }

    pub fn store(&self) -> &ParamStore {
        match self {
            Model::Lr(m) => m.store(),
            Model::Mlp(m) => m.store(),
            Model::Gru(m) => m.store(),
        }
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        match self {
            Model::Lr(m) => m.store_mut(),
            Model::Mlp(m) => m.store_mut(),
            Model::Gru(m) => m.store_mut(),
        }
    }

    /// Prediction for one window (newest sample first). Pure in the
    /// parameters, safe to call from multiple threads on a frozen model.
    pub fn predict(&self, window: &[f64]) -> f64 {
        match self {
            Model::Lr(m) => m.predict(window),
            Model::Mlp(m) => m.predict(window),
            Model::Gru(m) => m.predict(window),
        }
    }

    /// Batched prediction; `x` holds one newest-first window per row.
    pub fn predict_batch(&mut self, x: &Mat, out: &mut Vec<f64>) {
        match self {
            Model::Lr(m) => m.predict_batch(x, out),
            Model::Mlp(m) => m.predict_batch(x, out),
            Model::Gru(m) => m.predict_batch(x, out),
        }
    }

    /// Mean-squared-error loss of the batch plus its gradient, accumulated
    /// into the store's gradient buffer (scaled by `1/B`, matching the mean).
    pub fn loss_grad_batch(&mut self, x: &Mat, y: &[f64]) -> f64 {
        match self {
            Model::Lr(m) => m.loss_grad_batch(x, y),
            Model::Mlp(m) => m.loss_grad_batch(x, y),
            Model::Gru(m) => m.loss_grad_batch(x, y),
        }
    }
}

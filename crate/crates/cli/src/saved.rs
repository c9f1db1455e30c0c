use anyhow::Result;
use serde::{Deserialize, Serialize};

use demu_core::double_emulator::{DoubleEmulator, PredictiveMixture, MIN_VARLOG};
use demu_core::GpModel;

/// A fitted model as stored in `model.json`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SavedModel {
    /// Log-scale GP on every run, read as a mixture with no point mass.
    Gpe { gp: GpModel, g: f64, gamma: f64 },
    Double(DoubleEmulator),
}

impl SavedModel {
    pub fn dim(&self) -> usize {
        match self {
            SavedModel::Gpe { gp, .. } => gp.dim(),
            SavedModel::Double(de) => de.dim(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<PredictiveMixture> {
        Ok(match self {
            SavedModel::Gpe { gp, g, gamma } => {
                let (m, v) = gp.predict(x)?;
                PredictiveMixture::new(1.0, m, v.max(MIN_VARLOG), *g, *gamma)?
            }
            SavedModel::Double(de) => de.predict_mixture(x)?,
        })
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::label;
use crate::error::{check_dim, Error, Result};
use crate::simulators::SimulatorSpec;

/// Where the omniscient classifier gets the true class from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTruth {
    /// Evaluate the simulator itself.
    Simulator(SimulatorSpec),
    /// Known outputs at a fixed set of inputs (e.g. a stored run ensemble).
    Table { inputs: DMatrix<f64>, outputs: Vec<f64> },
}

/// Always returns the correct class: exactly 0 or 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleClassifier {
    pub truth: OracleTruth,
    pub g: f64,
}

impl OracleClassifier {
    pub fn from_simulator(sim: SimulatorSpec, g: f64) -> Self {
        Self {
            truth: OracleTruth::Simulator(sim),
            g,
        }
    }

    pub fn from_table(inputs: DMatrix<f64>, outputs: Vec<f64>, g: f64) -> Result<Self> {
        check_dim(inputs.nrows(), outputs.len())?;
        Ok(Self {
            truth: OracleTruth::Table { inputs, outputs },
            g,
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        let y = match &self.truth {
            OracleTruth::Simulator(sim) => sim.eval(x)?,
            OracleTruth::Table { inputs, outputs } => {
                check_dim(inputs.ncols(), x.len())?;
                let i = (0..inputs.nrows())
                    .find(|&i| inputs.row(i).iter().zip(x).all(|(a, b)| a == b))
                    .ok_or_else(|| Error::InvalidInput("oracle has no record of this input".into()))?;
                outputs[i]
            }
        };
        Ok(if label(y, self.g) { 1.0 } else { 0.0 })
    }
}

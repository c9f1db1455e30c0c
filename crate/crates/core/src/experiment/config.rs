use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierKind;
use crate::double_emulator::DEFAULT_GAMMA;
use crate::error::{Error, Result};
use crate::gpe::{BasisSpec, Method};
use crate::kernels::KernelFamily;
use crate::simulators::{calibrate_offset, estimate_scale, BananaVariant, SimulatorSpec, TestFunction};

fn default_reps() -> usize {
    10
}
fn default_candidates() -> usize {
    crate::design::DEFAULT_CANDIDATES
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_classifiers() -> Vec<ClassifierKind> {
    vec![ClassifierKind::RandomForest, ClassifierKind::Svm, ClassifierKind::Oracle]
}
fn default_n_mc() -> usize {
    100_000
}

/// A Monte-Carlo comparison, read from TOML. Unknown keys are rejected.
///
/// Exactly one of `[synthetic]`, `[simulator]` or `[dataset]` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub master_seed: u64,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Random LHDs scored per maximin design.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// Defaults to Matérn-5/2 for simulators and Matérn-3/2 for datasets.
    #[serde(default)]
    pub kernel: Option<KernelFamily>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Keep per-point score records in the table and report.
    #[serde(default)]
    pub keep_points: bool,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub simulator: Option<SimulatorSpec>,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFunction {
    Banana,
    DpCurved,
}

/// A grounded test function whose offset is calibrated to a grounded volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub function: BaseFunction,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub variant: BananaVariant,
    /// Target fraction of the input cube where the simulator sits at `g`.
    pub grounded_volume: f64,
    /// Exponent `b` of the grounded transform.
    pub exponent: f64,
    #[serde(default)]
    pub g: f64,
    /// Uniform samples used to calibrate the offset and the scale.
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    /// Seed for calibration; derived from `master_seed` when absent.
    #[serde(default)]
    pub calibration_seed: Option<u64>,
}

/// Pre-extracted runs in `x1..xd,y` format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub g: f64,
}

/// Where a replicate's runs come from once the config is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simulator(SimulatorSpec),
    Dataset { path: PathBuf, g: f64 },
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative dataset path is taken relative to the file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(ds) = cfg.dataset.as_mut() {
            if ds.path.is_relative() {
                if let Some(dir) = path.parent() {
                    ds.path = dir.join(&ds.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let sources = [
            self.synthetic.is_some(),
            self.simulator.is_some(),
            self.dataset.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::Config(
                "exactly one of [synthetic], [simulator] or [dataset] is required".into(),
            ));
        }
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be at least 1".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be at least 1".into()));
        }
        if self.candidates == 0 {
            return Err(Error::Config("candidates must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if let Some(d) = self.input_dim() {
            let q = self.basis.q(d);
            if self.n_train <= q + 2 {
                return Err(Error::Config(format!(
                    "n_train = {} must exceed q + 2 = {}",
                    self.n_train,
                    q + 2
                )));
            }
        }
        if let Some(s) = &self.synthetic {
            if !(s.grounded_volume > 0.0 && s.grounded_volume < 1.0) {
                return Err(Error::Config("grounded_volume must lie in (0, 1)".into()));
            }
            if !(s.exponent > 0.0) {
                return Err(Error::Config("exponent must be positive".into()));
            }
            if s.n_mc == 0 {
                return Err(Error::Config("n_mc must be positive".into()));
            }
            if s.function == BaseFunction::Banana && s.dim.unwrap_or(2) < 2 {
                return Err(Error::Config("banana needs dim >= 2".into()));
            }
            if s.function == BaseFunction::DpCurved && s.dim.is_some_and(|d| d != 3) {
                return Err(Error::Config("dp_curved has exactly 3 inputs".into()));
            }
        }
        let mut seen = Vec::new();
        for k in &self.classifiers {
            if seen.contains(k) {
                return Err(Error::Config(format!("classifier {k:?} listed twice")));
            }
            seen.push(*k);
        }
        Ok(())
    }

    /// Input dimension, when known without reading data.
    pub fn input_dim(&self) -> Option<usize> {
        if let Some(s) = &self.synthetic {
            return Some(match s.function {
                BaseFunction::Banana => s.dim.unwrap_or(2),
                BaseFunction::DpCurved => 3,
            });
        }
        self.simulator.as_ref().map(SimulatorSpec::dim)
    }

    pub fn kernel_family(&self) -> KernelFamily {
        self.kernel.unwrap_or(if self.dataset.is_some() {
            KernelFamily::Matern32
        } else {
            KernelFamily::Matern52
        })
    }

    /// Calibrates a synthetic simulator (offset and scale) or passes the
    /// explicit simulator or dataset through.
    pub fn resolve_source(&self) -> Result<Source> {
        if let Some(spec) = &self.simulator {
            return Ok(Source::Simulator(spec.clone()));
        }
        if let Some(ds) = &self.dataset {
            return Ok(Source::Dataset {
                path: ds.path.clone(),
                g: ds.g,
            });
        }
        let s = self
            .synthetic
            .as_ref()
            .ok_or_else(|| Error::Config("no data source".into()))?;
        let base = match s.function {
            BaseFunction::Banana => TestFunction::Banana {
                dim: s.dim.unwrap_or(2),
                variant: s.variant,
            },
            BaseFunction::DpCurved => TestFunction::DpCurved,
        };
        let seed = s
            .calibration_seed
            .unwrap_or_else(|| super::replicate_seed(self.master_seed, u64::MAX));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = calibrate_offset(&base, s.grounded_volume, s.n_mc, &mut rng)?;
        let f_max = estimate_scale(&base, s.n_mc, &mut rng)?;
        let m_scale = f_max - a;
        if !(m_scale > 0.0) {
            return Err(Error::Config("calibrated offset leaves no range above ground".into()));
        }
        Ok(Source::Simulator(SimulatorSpec::grounded(
            base, a, s.exponent, m_scale, s.g,
        )?))
    }
}

//! Emulators for deterministic simulators that ground at a known minimum.
//!
//! The crate provides a universal-kriging Gaussian process emulator, the double
//! emulator (a probabilistic classifier for "above ground" combined with a
//! log-scale GP, giving a point mass at the grounding value plus a shifted
//! lognormal), closed-form CRPS scoring for that mixture, grounded test
//! simulators, Latin hypercube designs, and a Monte-Carlo experiment harness.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod design;
pub mod double_emulator;
pub mod error;
pub mod experiment;
pub mod gpe;
pub mod ingest;
pub mod kernels;
pub mod optim;
pub mod quadrature;
pub mod scoring;
pub mod simulators;
pub mod special;

pub use classifiers::{ClassifierKind, ProbClassifier};
pub use design::{Design, maximin_lhd};
pub use double_emulator::{DoubleEmulator, DoubleOptions, PredictiveMixture};
pub use error::{Error, Result};
pub use experiment::{run_experiment, emit_report, ExperimentConfig, ScoreTable};
pub use gpe::{fit_gp, BasisSpec, GpModel, Method};
pub use kernels::{KernelFamily, KernelSpec};
pub use scoring::{crps_exact, rmse, ScoreRecord};
pub use simulators::SimulatorSpec;

//! Monte-Carlo comparison of the GPE against double emulators.

mod config;
mod report;

pub use config::{BaseFunction, DatasetConfig, ExperimentConfig, Source, SyntheticConfig};
pub use report::{emit_report, quantile_type7, summarize, write_scores_csv, MetricSummary, ModelSummary};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, OracleClassifier};
use crate::design::maximin_lhd;
use crate::double_emulator::{
    fit_classifier, fit_log_gp, grounding_labels, DoubleEmulator, DoubleOptions, PredictiveMixture,
    MIN_VARLOG,
};
use crate::error::{Error, Result};
use crate::gpe::{fit_gp_with, GpModel};
use crate::ingest::read_dataset;
use crate::scoring::{rmse, score_mixtures, ScoreRecord};
use crate::simulators::SimulatorSpec;

pub const GPE_NAME: &str = "GPE";

/// Seed for replicate `rep`: SplitMix64 finalizer applied to the master seed
/// advanced by `rep + 1` golden-ratio steps. Stable across versions.
pub fn replicate_seed(master_seed: u64, rep: u64) -> u64 {
    let mut z = master_seed.wrapping_add(rep.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed(String),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Status::Ok)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Ok => write!(f, "ok"),
            Status::Failed(reason) => write!(f, "failed: {reason}"),
        }
    }
}

/// One model on one replicate. Failed rows carry NaN scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub model: String,
    pub replicate: usize,
    pub mean_crps: f64,
    pub rmse: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<ScoreRecord>,
}

impl ScoreRow {
    fn failed(model: &str, replicate: usize, err: &Error) -> Self {
        Self {
            model: model.to_owned(),
            replicate,
            mean_crps: f64::NAN,
            rmse: f64::NAN,
            status: Status::Failed(err.to_string()),
            points: Vec::new(),
        }
    }

    fn from_records(model: &str, replicate: usize, records: Vec<ScoreRecord>, keep: bool) -> Result<Self> {
        let n = records.len() as f64;
        let mean_crps = records.iter().map(|r| r.crps).sum::<f64>() / n;
        let means: Vec<f64> = records.iter().map(|r| r.mean).collect();
        let obs: Vec<f64> = records.iter().map(|r| r.observed).collect();
        Ok(Self {
            model: model.to_owned(),
            replicate,
            mean_crps,
            rmse: rmse(&means, &obs)?,
            status: Status::Ok,
            points: if keep { records } else { Vec::new() },
        })
    }
}

/// All rows of an experiment, ordered by replicate and then by model.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// Model names in first-appearance order.
    pub fn models(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.model) {
                names.push(r.model.clone());
            }
        }
        names
    }

    /// Mean CRPS of the successful replicates of `model`.
    pub fn crps_column(&self, model: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.status.is_ok())
            .map(|r| r.mean_crps)
            .collect()
    }

    pub fn rmse_column(&self, model: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.status.is_ok())
            .map(|r| r.rmse)
            .collect()
    }

    pub fn median_crps(&self, model: &str) -> Option<f64> {
        let mut v = self.crps_column(model);
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(quantile_type7(&v, 0.5))
    }
}

/// One replicate's training and test runs, plus the oracle for them.
struct Split {
    x_train: DMatrix<f64>,
    y_train: Vec<f64>,
    x_test: DMatrix<f64>,
    y_test: Vec<f64>,
    oracle: OracleClassifier,
    g: f64,
}

enum Data {
    Simulator(SimulatorSpec),
    Table { x: DMatrix<f64>, y: Vec<f64>, g: f64 },
}

fn evaluate(sim: &SimulatorSpec, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    (0..x.nrows())
        .map(|i| sim.eval(&x.row(i).iter().copied().collect::<Vec<_>>()))
        .collect()
}

fn select_rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

impl Data {
    fn split(&self, cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Split> {
        match self {
            Data::Simulator(sim) => {
                let d = sim.dim();
                let train_seed: u64 = rng.random();
                let test_seed: u64 = rng.random();
                let x_train = maximin_lhd(cfg.n_train, d, cfg.candidates, train_seed)?.points;
                let x_test = maximin_lhd(cfg.n_test, d, cfg.candidates, test_seed)?.points;
                let g = sim.grounding_value();
                Ok(Split {
                    y_train: evaluate(sim, &x_train)?,
                    y_test: evaluate(sim, &x_test)?,
                    x_train,
                    x_test,
                    oracle: OracleClassifier::from_simulator(sim.clone(), g),
                    g,
                })
            }
            Data::Table { x, y, g } => {
                if cfg.n_train + cfg.n_test > y.len() {
                    return Err(Error::Config(format!(
                        "dataset has {} runs, fewer than n_train + n_test = {}",
                        y.len(),
                        cfg.n_train + cfg.n_test
                    )));
                }
                let mut idx: Vec<usize> = (0..y.len()).collect();
                idx.shuffle(rng);
                let (test, rest) = idx.split_at(cfg.n_test);
                let train = &rest[..cfg.n_train];
                Ok(Split {
                    x_train: select_rows(x, train),
                    y_train: train.iter().map(|&i| y[i]).collect(),
                    x_test: select_rows(x, test),
                    y_test: test.iter().map(|&i| y[i]).collect(),
                    oracle: OracleClassifier::from_table(x.clone(), y.clone(), *g)?,
                    g: *g,
                })
            }
        }
    }
}

fn model_names(cfg: &ExperimentConfig) -> Vec<&'static str> {
    std::iter::once(GPE_NAME)
        .chain(cfg.classifiers.iter().map(|k| k.model_name()))
        .collect()
}

/// `(m, v)` of the log-scale GP at every test row, `v` clamped.
fn log_predictions(gp: &GpModel, x: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    (0..x.nrows())
        .map(|i| {
            let (m, v) = gp.predict(&x.row(i).iter().copied().collect::<Vec<_>>())?;
            Ok((m, v.max(MIN_VARLOG)))
        })
        .collect()
}

fn score_with(
    preds: &[(f64, f64)],
    probs: impl Fn(usize) -> Result<f64>,
    split: &Split,
    gamma: f64,
) -> Result<Vec<ScoreRecord>> {
    let mixtures = preds
        .iter()
        .enumerate()
        .map(|(i, &(m, v))| PredictiveMixture::new(probs(i)?.clamp(0.0, 1.0), m, v, split.g, gamma))
        .collect::<Result<Vec<_>>>()?;
    score_mixtures(&mixtures, &split.y_test)
}

fn run_replicate(cfg: &ExperimentConfig, data: &Data, rep: usize) -> Vec<ScoreRow> {
    let names = model_names(cfg);
    let seed = replicate_seed(cfg.master_seed, rep as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = match data.split(cfg, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            log::error!("replicate {rep}: data generation failed: {e}");
            return names.iter().map(|m| ScoreRow::failed(m, rep, &e)).collect();
        }
    };
    let mut opts = DoubleOptions::new(split.g);
    opts.gamma = cfg.gamma;
    opts.basis = cfg.basis;
    opts.family = cfg.kernel_family();
    opts.method = cfg.method;
    opts.gp.seed = rng.random();
    let keep = cfg.keep_points;
    let mut rows = Vec::with_capacity(names.len());

    // GPE: log-scale GP on every training run, no point mass.
    let gpe = (|| {
        grounding_labels(&split.y_train, split.g)?;
        let ylog: Vec<f64> = split
            .y_train
            .iter()
            .map(|y| (y - split.g + cfg.gamma).ln())
            .collect();
        let gp = fit_gp_with(&split.x_train, &ylog, opts.basis, opts.family, opts.method, &opts.gp)?;
        let preds = log_predictions(&gp, &split.x_test)?;
        let recs = score_with(&preds, |_| Ok(1.0), &split, cfg.gamma)?;
        ScoreRow::from_records(GPE_NAME, rep, recs, keep)
    })();
    rows.push(gpe.unwrap_or_else(|e| {
        log::warn!("replicate {rep}: {GPE_NAME} failed: {e}");
        ScoreRow::failed(GPE_NAME, rep, &e)
    }));
    if cfg.classifiers.is_empty() {
        return rows;
    }

    let shared = grounding_labels(&split.y_train, split.g).and_then(|labels| {
        let gp = fit_log_gp(&split.x_train, &split.y_train, &opts)?;
        let preds = log_predictions(&gp, &split.x_test)?;
        Ok((labels, gp, preds))
    });
    let (labels, gp, preds) = match shared {
        Ok(s) => s,
        Err(e) => {
            log::warn!("replicate {rep}: double emulators skipped: {e}");
            rows.extend(names[1..].iter().map(|m| ScoreRow::failed(m, rep, &e)));
            return rows;
        }
    };
    for (k, kind) in cfg.classifiers.iter().enumerate() {
        let name = kind.model_name();
        let mut model_rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, k as u64));
        let row = (|| {
            let oracle = (*kind == ClassifierKind::Oracle).then(|| split.oracle.clone());
            let clf = fit_classifier(*kind, &split.x_train, &labels, &opts, oracle, &mut model_rng)?;
            let de = DoubleEmulator::from_parts(clf, gp.clone(), split.g, cfg.gamma)?;
            let recs = score_with(
                &preds,
                |i| {
                    de.classifier
                        .predict_proba(&split.x_test.row(i).iter().copied().collect::<Vec<_>>())
                },
                &split,
                cfg.gamma,
            )?;
            ScoreRow::from_records(name, rep, recs, keep)
        })();
        rows.push(row.unwrap_or_else(|e| {
            log::warn!("replicate {rep}: {name} failed: {e}");
            ScoreRow::failed(name, rep, &e)
        }));
    }
    rows
}

/// Runs every replicate (concurrently) and collects the rows in replicate order.
/// The result depends only on the config, not on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ScoreTable> {
    cfg.validate()?;
    let data = match cfg.resolve_source()? {
        Source::Simulator(sim) => Data::Simulator(sim),
        Source::Dataset { path, g } => {
            let (x, y) = read_dataset(&path)?;
            let q = cfg.basis.q(x.ncols());
            if cfg.n_train <= q + 2 {
                return Err(Error::Config(format!("n_train must exceed q + 2 = {}", q + 2)));
            }
            Data::Table { x, y, g }
        }
    };
    let per_rep: Vec<Vec<ScoreRow>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| run_replicate(cfg, &data, rep))
        .collect();
    Ok(ScoreTable {
        rows: per_rep.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    const SMOOTH: &str = r#"
        master_seed = 11
        n_reps = 1
        n_train = 20
        n_test = 40
        classifiers = ["oracle"]
        [synthetic]
        function = "banana"
        grounded_volume = 0.05
        exponent = 2.0
        n_mc = 5000
    "#;

    #[test]
    fn replicate_seeds_differ_and_are_stable() {
        let a: Vec<u64> = (0..5).map(|r| replicate_seed(42, r)).collect();
        let mut b = a.clone();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_eq!(replicate_seed(42, 3), a[3]);
        assert_ne!(replicate_seed(42, 0), replicate_seed(43, 0));
    }

    #[test]
    fn oracle_only_yields_two_rows() {
        let t = run_experiment(&cfg(SMOOTH)).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.models(), vec!["GPE".to_string(), "DE-Perf".to_string()]);
        assert!(t.rows.iter().all(|r| r.status.is_ok()), "{:?}", t.rows);
    }

    #[test]
    fn mean_crps_is_mean_of_points() {
        let c = cfg(&SMOOTH.replace("n_reps = 1", "n_reps = 1\nkeep_points = true"));
        let t = run_experiment(&c).unwrap();
        for r in &t.rows {
            let m = r.points.iter().map(|p| p.crps).sum::<f64>() / r.points.len() as f64;
            assert!((m - r.mean_crps).abs() <= 1e-12);
            assert_eq!(r.points.len(), 40);
        }
    }

    #[test]
    fn svm_failure_is_recorded_and_run_continues() {
        // nearly everything grounded: SVM sees a tiny minority class
        let text = SMOOTH
            .replace("classifiers = [\"oracle\"]", "classifiers = [\"svm\", \"oracle\"]")
            .replace("grounded_volume = 0.05", "grounded_volume = 0.97");
        let t = run_experiment(&cfg(&text)).unwrap();
        assert_eq!(t.rows.len(), 3);
        let svm = t.rows.iter().find(|r| r.model == "DE-SVM").unwrap();
        assert!(!svm.status.is_ok());
        assert!(svm.mean_crps.is_nan());
    }

    #[test]
    fn dataset_source() {
        let dir = tempfile::tempdir().unwrap();
        let sim = SimulatorSpec::Gamma {
            s: 2.5,
            alpha: 2.0,
            sigma: 1.0,
            g: 0.0,
            x_max: 10.0,
        };
        let x = DMatrix::from_fn(80, 1, |i, _| (i as f64 + 0.5) / 80.0);
        let y = evaluate(&sim, &x).unwrap();
        let path = dir.path().join("runs.csv");
        crate::ingest::write_dataset(&path, &x, &y).unwrap();
        let text = format!(
            "master_seed = 3\nn_reps = 2\nn_train = 30\nn_test = 40\nclassifiers = [\"rf\", \"oracle\"]\n\
             [dataset]\npath = {:?}\ng = 0.0\n",
            path.to_str().unwrap()
        );
        let c = cfg(&text);
        assert_eq!(c.kernel_family(), crate::kernels::KernelFamily::Matern32);
        let t = run_experiment(&c).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert!(t.rows.iter().all(|r| r.status.is_ok()), "{:?}", t.rows);
    }
}

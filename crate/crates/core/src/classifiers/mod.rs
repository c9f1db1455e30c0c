//! Probabilistic classifiers for `p(x) = P(S(x) > g)`.

mod forest;
mod oracle;
mod svm;

pub use forest::{fit_rf, RandomForestModel, RfParams};
pub use oracle::{OracleClassifier, OracleTruth};
pub use svm::{fit_svm, SvmModel, SvmParams};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Grounding indicator: `true` (class 1) when `y > g`.
#[inline]
pub fn label(y: f64, g: f64) -> bool {
    y > g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[serde(alias = "rf")]
    RandomForest,
    Svm,
    #[serde(alias = "perfect")]
    Oracle,
}

impl ClassifierKind {
    /// Name used for the double emulator built on this classifier.
    pub fn model_name(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "DE-RF",
            ClassifierKind::Svm => "DE-SVM",
            ClassifierKind::Oracle => "DE-Perf",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "random_forest" => Ok(ClassifierKind::RandomForest),
            "svm" => Ok(ClassifierKind::Svm),
            "oracle" | "perfect" => Ok(ClassifierKind::Oracle),
            other => Err(crate::error::invalid("classifier", format!("unknown kind `{other}`"))),
        }
    }
}

/// A fitted probabilistic classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbClassifier {
    RandomForest(RandomForestModel),
    Svm(SvmModel),
    Oracle(OracleClassifier),
}

impl ProbClassifier {
    /// Probability that `x` is above ground, always in `[0, 1]`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            ProbClassifier::RandomForest(m) => m.predict_proba(x),
            ProbClassifier::Svm(m) => m.predict_proba(x),
            ProbClassifier::Oracle(m) => m.predict_proba(x),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ProbClassifier::RandomForest(_) => ClassifierKind::RandomForest,
            ProbClassifier::Svm(_) => ClassifierKind::Svm,
            ProbClassifier::Oracle(_) => ClassifierKind::Oracle,
        }
    }
}

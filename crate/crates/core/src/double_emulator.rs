//! Point mass at the grounding value mixed with a shifted lognormal.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    fit_rf, fit_svm, label, ClassifierKind, OracleClassifier, ProbClassifier, RfParams, SvmParams,
};
use crate::error::{check_dim, invalid, Error, Result};
use crate::gpe::{fit_gp_with, BasisSpec, GpModel, GpOptions, Method};
use crate::kernels::KernelFamily;
use crate::special::norm_cdf;

pub const DEFAULT_GAMMA: f64 = 1e-6;
/// Lower clamp on the log-scale predictive variance.
pub const MIN_VARLOG: f64 = 1e-12;

/// Predictive distribution at one input: mass `1 - p` at `g`, and with weight `p`
/// the law of `g - gamma + Z` where `ln Z ~ N(m, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMixture {
    pub p: f64,
    pub m: f64,
    pub v: f64,
    pub g: f64,
    pub gamma: f64,
}

impl PredictiveMixture {
    pub fn new(p: f64, m: f64, v: f64, g: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("{p} is not a probability")));
        }
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid("v", format!("{v} must be finite and nonnegative")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("{gamma} must be positive")));
        }
        if !m.is_finite() || !g.is_finite() {
            return Err(invalid("m", "location parameters must be finite"));
        }
        Ok(Self { p, m, v, g, gamma })
    }

    /// Mean of the shifted lognormal component.
    pub fn lognormal_mean(&self) -> f64 {
        (self.m + 0.5 * self.v).exp() + self.g - self.gamma
    }

    /// Variance of the lognormal component.
    pub fn lognormal_var(&self) -> f64 {
        (2.0 * self.m + self.v).exp() * self.v.exp_m1()
    }

    pub fn mean(&self) -> f64 {
        (1.0 - self.p) * self.g + self.p * self.lognormal_mean()
    }

    pub fn var(&self) -> f64 {
        let d = self.g - self.lognormal_mean();
        let v = self.p * (1.0 - self.p) * d * d + self.p * self.lognormal_var();
        v.max(0.0)
    }

    /// Lognormal distribution function `L(z)` of the continuous component.
    pub fn lognormal_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if self.v == 0.0 {
            return if z.ln() >= self.m { 1.0 } else { 0.0 };
        }
        norm_cdf((z.ln() - self.m) / self.v.sqrt())
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y < self.g {
            0.0
        } else if y == self.g {
            1.0 - self.p
        } else {
            1.0 - self.p + self.p * self.lognormal_cdf(y - self.g + self.gamma)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.p < 1.0 && rng.random::<f64>() >= self.p {
            return self.g;
        }
        let z: f64 = rng.sample(StandardNormal);
        self.g - self.gamma + (self.m + self.v.sqrt() * z).exp()
    }
}

pub fn mixture_mean(pm: &PredictiveMixture) -> f64 {
    pm.mean()
}

pub fn mixture_var(pm: &PredictiveMixture) -> f64 {
    pm.var()
}

pub fn mixture_cdf(pm: &PredictiveMixture, y: f64) -> f64 {
    pm.cdf(y)
}

pub fn sample_mixture<R: Rng + ?Sized>(pm: &PredictiveMixture, rng: &mut R) -> f64 {
    pm.sample(rng)
}

/// Settings shared by the classifier and the log-scale GP.
#[derive(Debug, Clone)]
pub struct DoubleOptions {
    pub g: f64,
    pub gamma: f64,
    pub basis: BasisSpec,
    pub family: KernelFamily,
    pub method: Method,
    pub gp: GpOptions,
    pub rf: RfParams,
    pub svm: SvmParams,
}

impl DoubleOptions {
    pub fn new(g: f64) -> Self {
        Self {
            g,
            gamma: DEFAULT_GAMMA,
            basis: BasisSpec::default(),
            family: KernelFamily::Matern52,
            method: Method::default(),
            gp: GpOptions::default(),
            rf: RfParams::default(),
            svm: SvmParams::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoubleEmulator {
    pub classifier: ProbClassifier,
    pub gp: GpModel,
    pub g: f64,
    pub gamma: f64,
}

/// Rejects outputs below `g` and returns the above-ground indicator per run.
pub fn grounding_labels(y: &[f64], g: f64) -> Result<Vec<bool>> {
    y.iter()
        .map(|&v| {
            if v < g || v.is_nan() {
                Err(Error::BelowGround { value: v, g })
            } else {
                Ok(label(v, g))
            }
        })
        .collect()
}

/// Rows above ground with outputs mapped to `ln(y - g + gamma)`.
pub fn log_scale_subset(
    x: &DMatrix<f64>,
    y: &[f64],
    g: f64,
    gamma: f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_dim(x.nrows(), y.len())?;
    let labels = grounding_labels(y, g)?;
    let keep: Vec<usize> = (0..y.len()).filter(|&i| labels[i]).collect();
    let xs = DMatrix::from_fn(keep.len(), x.ncols(), |i, j| x[(keep[i], j)]);
    let ys = keep.iter().map(|&i| (y[i] - g + gamma).ln()).collect();
    Ok((xs, ys))
}

pub fn fit_classifier<R: Rng + ?Sized>(
    kind: ClassifierKind,
    x: &DMatrix<f64>,
    labels: &[bool],
    opts: &DoubleOptions,
    oracle: Option<OracleClassifier>,
    rng: &mut R,
) -> Result<ProbClassifier> {
    Ok(match kind {
        ClassifierKind::RandomForest => ProbClassifier::RandomForest(fit_rf(x, labels, opts.rf, rng)?),
        ClassifierKind::Svm => ProbClassifier::Svm(fit_svm(x, labels, opts.svm, rng)?),
        ClassifierKind::Oracle => ProbClassifier::Oracle(oracle.ok_or_else(|| {
            invalid("oracle", "the oracle classifier needs access to the true simulator")
        })?),
    })
}

/// Fits the log-scale GP on the runs above ground.
pub fn fit_log_gp(x: &DMatrix<f64>, y: &[f64], opts: &DoubleOptions) -> Result<GpModel> {
    let (xs, ys) = log_scale_subset(x, y, opts.g, opts.gamma)?;
    let needed = opts.basis.q(x.ncols()) + 2;
    if xs.nrows() < needed {
        return Err(Error::TooFewNonGrounded {
            needed,
            found: xs.nrows(),
        });
    }
    fit_gp_with(&xs, &ys, opts.basis, opts.family, opts.method, &opts.gp)
}

pub fn fit_double<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &[f64],
    kind: ClassifierKind,
    opts: &DoubleOptions,
    oracle: Option<OracleClassifier>,
    rng: &mut R,
) -> Result<DoubleEmulator> {
    if !(opts.gamma > 0.0 && opts.gamma.is_finite()) {
        return Err(invalid("gamma", "must be positive"));
    }
    check_dim(x.nrows(), y.len())?;
    let labels = grounding_labels(y, opts.g)?;
    let gp = fit_log_gp(x, y, opts)?;
    let classifier = fit_classifier(kind, x, &labels, opts, oracle, rng)?;
    DoubleEmulator::from_parts(classifier, gp, opts.g, opts.gamma)
}

impl DoubleEmulator {
    pub fn from_parts(classifier: ProbClassifier, gp: GpModel, g: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive"));
        }
        Ok(Self {
            classifier,
            gp,
            g,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.gp.dim()
    }

    pub fn predict_mixture(&self, xstar: &[f64]) -> Result<PredictiveMixture> {
        check_dim(self.dim(), xstar.len())?;
        let p = self.classifier.predict_proba(xstar)?.clamp(0.0, 1.0);
        let (m, v) = self.gp.predict(xstar)?;
        Ok(PredictiveMixture {
            p,
            m,
            v: v.max(MIN_VARLOG),
            g: self.g,
            gamma: self.gamma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::SimulatorSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pm(p: f64, m: f64, v: f64, g: f64, gamma: f64) -> PredictiveMixture {
        PredictiveMixture::new(p, m, v, g, gamma).unwrap()
    }

    #[test]
    fn moment_examples() {
        let a = pm(0.0, 0.3, 0.2, 1.5, 1e-6);
        assert_eq!((a.mean(), a.var()), (1.5, 0.0));
        let b = pm(1.0, 0.0, 0.0, 0.5, 0.5);
        assert_eq!(b.mean(), 1.0);
        assert_eq!(b.var(), 0.0);
        // gamma must be positive, so approach the g = gamma = 0 case from above
        let c = pm(0.5, 0.0, 0.0, 0.0, 1e-300);
        assert!((c.mean() - 0.5).abs() < 1e-15);
        assert!((c.var() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn variance_zero_only_at_degenerate_points() {
        assert_eq!(pm(0.0, 1.0, 1.0, 0.0, 1e-6).var(), 0.0);
        assert_eq!(pm(1.0, 1.0, 0.0, 0.0, 1e-6).var(), 0.0);
        assert!(pm(1.0, 1.0, 1e-6, 0.0, 1e-6).var() > 0.0);
        assert!(pm(0.5, 1.0, 0.0, 0.0, 1e-6).var() > 0.0);
    }

    #[test]
    fn cdf_branches() {
        let a = pm(0.7, 0.2, 0.5, 1.0, 1e-6);
        assert_eq!(a.cdf(0.0), 0.0);
        assert!((a.cdf(1.0) - 0.3).abs() < 1e-15);
        let b = pm(1.0, 0.4, 0.3, 2.0, 1e-3);
        assert!((b.cdf(2.0 - 1e-3 + 0.4f64.exp()) - 0.5).abs() < 1e-12);
        assert!(a.cdf(1e6) > 0.999_999);
        let mut prev = 0.0;
        for k in 0..400 {
            let y = 0.9 + k as f64 * 0.01;
            let f = a.cdf(y);
            assert!(f >= prev);
            prev = f;
        }
    }

    #[test]
    fn jump_above_ground_includes_sliver() {
        let a = pm(0.6, -14.0, 1.0, 0.0, 1e-6);
        let right = a.cdf(1e-15);
        let expected = 0.4 + 0.6 * a.lognormal_cdf(1e-6);
        assert!((right - expected).abs() < 1e-9);
        assert!(right > 0.4 + 0.1);
    }

    #[test]
    fn sampling_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = pm(0.0, 0.0, 1.0, 3.0, 1e-6);
        assert!((0..100).all(|_| a.sample(&mut rng) == 3.0));
        let b = pm(1.0, 0.5, 0.0, 3.0, 1e-6);
        let expected = 3.0 - 1e-6 + 0.5f64.exp();
        assert!((0..100).all(|_| b.sample(&mut rng) == expected));
    }

    #[test]
    fn monte_carlo_moments_single_case() {
        let a = pm(0.7, 0.2, 0.5, 0.0, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| a.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (a.var() / n as f64).sqrt();
        assert!((mean - a.mean()).abs() < 3.0 * se, "{mean} vs {}", a.mean());
        assert!((var - a.var()).abs() / a.var() < 0.05);
    }

    fn gamma_data(n: usize) -> (DMatrix<f64>, Vec<f64>, SimulatorSpec) {
        let sim = SimulatorSpec::Gamma {
            s: 2.5,
            alpha: 2.0,
            sigma: 1.0,
            g: 0.0,
            x_max: 10.0,
        };
        let x = DMatrix::from_fn(n, 1, |i, _| (i as f64 + 0.5) / n as f64);
        let y = (0..n).map(|i| sim.eval(&[x[(i, 0)]]).unwrap()).collect();
        (x, y, sim)
    }

    #[test]
    fn oracle_double_emulator_on_gamma_simulator() {
        let (x, y, sim) = gamma_data(20);
        let opts = DoubleOptions::new(0.0);
        let oracle = OracleClassifier::from_simulator(sim, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let de = fit_double(&x, &y, ClassifierKind::Oracle, &opts, Some(oracle), &mut rng).unwrap();
        assert_eq!(de.gp.n(), y.iter().filter(|&&v| v > 0.0).count());
        let grounded = de.predict_mixture(&[0.1]).unwrap();
        assert_eq!(grounded.p, 0.0);
        let i = 15;
        let at = de.predict_mixture(&[x[(i, 0)]]).unwrap();
        assert_eq!(at.p, 1.0);
        assert!((at.m - (y[i] + opts.gamma).ln()).abs() < 1e-8);
        assert!(at.v < 1e-8);
    }

    #[test]
    fn all_above_ground_reduces_to_log_gp() {
        let n = 15;
        let x = DMatrix::from_fn(n, 1, |i, _| i as f64 / (n - 1) as f64);
        let y: Vec<f64> = x.iter().map(|t| 1.0 + t * t).collect();
        let opts = DoubleOptions::new(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let de = fit_double(&x, &y, ClassifierKind::RandomForest, &opts, None, &mut rng).unwrap();
        let pmix = de.predict_mixture(&[0.37]).unwrap();
        assert_eq!(pmix.p, 1.0);
        let (m, v) = de.gp.predict(&[0.37]).unwrap();
        let expected = (m + 0.5 * v.max(MIN_VARLOG)).exp() - opts.gamma;
        assert!((pmix.mean() - expected).abs() < 1e-12);
    }

    #[test]
    fn rf_probability_passes_through() {
        let (x, y, _) = gamma_data(40);
        let opts = DoubleOptions::new(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let de = fit_double(&x, &y, ClassifierKind::RandomForest, &opts, None, &mut rng).unwrap();
        let xs = [0.26];
        assert_eq!(
            de.predict_mixture(&xs).unwrap().p,
            de.classifier.predict_proba(&xs).unwrap()
        );
    }

    #[test]
    fn rejects_below_ground_and_sparse_data() {
        let (x, mut y, _) = gamma_data(20);
        let opts = DoubleOptions::new(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        y[0] = -0.1;
        assert!(matches!(
            fit_double(&x, &y, ClassifierKind::RandomForest, &opts, None, &mut rng),
            Err(Error::BelowGround { .. })
        ));
        let y: Vec<f64> = (0..20).map(|i| if i < 3 { 1.0 + i as f64 } else { 0.0 }).collect();
        assert!(matches!(
            fit_double(&x, &y, ClassifierKind::RandomForest, &opts, None, &mut rng),
            Err(Error::TooFewNonGrounded { needed: 4, found: 3 })
        ));
        assert!(fit_double(&x, &gamma_data(20).1, ClassifierKind::Oracle, &opts, None, &mut rng).is_err());
    }
}

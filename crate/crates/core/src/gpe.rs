//! Universal-kriging Gaussian process emulator.
//!
//! The model is `y(x) = g(x)ᵀβ + Z(x)` with `Z` a zero-mean GP of variance `σ²`
//! and separable correlation `r`. Given lengthscales, `β` and `σ²` have closed
//! GLS forms; lengthscales are found by minimizing the profiled MLE or REML
//! objective with multistart Nelder-Mead on the log scale.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::design;
use crate::error::{check_dim, invalid, Error, Result};
use crate::kernels::{KernelFamily, KernelSpec, JITTER};
use crate::optim::NelderMead;

/// Floor applied to variance estimates inside logarithms and for prediction.
pub const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpec {
    /// `g(x) = (1, x_1, ..., x_d)`, so `q = d + 1`.
    #[default]
    ConstantLinear,
    /// Intercept only, `q = 1`.
    Constant,
}

impl BasisSpec {
    pub fn q(self, d: usize) -> usize {
        match self {
            BasisSpec::ConstantLinear => d + 1,
            BasisSpec::Constant => 1,
        }
    }

    pub fn row(self, x: &[f64]) -> DVector<f64> {
        match self {
            BasisSpec::ConstantLinear => {
                DVector::from_iterator(x.len() + 1, std::iter::once(1.0).chain(x.iter().copied()))
            }
            BasisSpec::Constant => DVector::from_element(1, 1.0),
        }
    }
}

/// The `n × q` regression matrix `G` with `G_ij = g_j(x_i)`.
pub fn basis_matrix(basis: BasisSpec, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let q = basis.q(d);
    DMatrix::from_fn(n, q, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    #[default]
    Reml,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(Method::Mle),
            "reml" => Ok(Method::Reml),
            other => Err(invalid("method", format!("unknown estimation method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlsEstimates {
    pub beta: DVector<f64>,
    pub sigma2_mle: f64,
    pub sigma2_reml: f64,
}

/// Everything derived from one factorization of `R(λ) + δI`.
#[derive(Debug, Clone)]
struct Factored {
    chol: Cholesky<f64, Dyn>,
    /// `L⁻¹ G`
    lg: DMatrix<f64>,
    /// Cholesky of `Gᵀ R⁻¹ G`
    gram_g: Cholesky<f64, Dyn>,
    beta: DVector<f64>,
    /// `R⁻¹ (y - Gβ)`
    weights: DVector<f64>,
    /// `(y - Gβ)ᵀ R⁻¹ (y - Gβ)`
    quad: f64,
    logdet_r: f64,
    logdet_g: f64,
}

fn validate(x: &DMatrix<f64>, y: &[f64], basis: BasisSpec) -> Result<()> {
    let (n, d) = x.shape();
    check_dim(n, y.len())?;
    let q = basis.q(d);
    if n <= q {
        return Err(invalid("n", format!("need more runs than regressors (n = {n}, q = {q})")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in training data".into()));
    }
    Ok(())
}

fn factor(x: &DMatrix<f64>, y: &[f64], basis: BasisSpec, kernel: &KernelSpec) -> Result<Factored> {
    let n = x.nrows();
    let mut r = kernel.gram(x)?;
    for i in 0..n {
        r[(i, i)] += JITTER;
    }
    let chol = r
        .cholesky()
        .ok_or_else(|| Error::Factorization("R(λ) + δI is not positive definite".into()))?;
    let l = chol.l_dirty();
    let logdet_r = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();

    let g = basis_matrix(basis, x);
    let lg = l
        .solve_lower_triangular(&g)
        .ok_or_else(|| Error::Factorization("singular triangular factor".into()))?;
    let ly = l
        .solve_lower_triangular(&DVector::from_column_slice(y))
        .ok_or_else(|| Error::Factorization("singular triangular factor".into()))?;

    let gtg = lg.tr_mul(&lg);
    let gram_g = gtg.clone().cholesky().ok_or_else(|| {
        Error::RankDeficient(format!("GᵀR⁻¹G ({0}×{0}) is singular", gtg.nrows()))
    })?;
    let gl = gram_g.l_dirty();
    let diag: Vec<f64> = (0..gtg.nrows()).map(|i| gl[(i, i)]).collect();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || (lo / hi).powi(2) < 1e-13 {
        return Err(Error::RankDeficient(format!(
            "GᵀR⁻¹G is numerically rank deficient (pivot ratio {:.2e}); check for duplicated or collinear design rows",
            lo / hi
        )));
    }
    let logdet_g = 2.0 * diag.iter().map(|v| v.ln()).sum::<f64>();

    let beta = gram_g.solve(&lg.tr_mul(&ly));
    let resid_l = &ly - &lg * &beta;
    let quad = resid_l.norm_squared();
    let weights = chol.solve(&(DVector::from_column_slice(y) - &g * &beta));

    Ok(Factored {
        chol,
        lg,
        gram_g,
        beta,
        weights,
        quad,
        logdet_r,
        logdet_g,
    })
}

/// Closed-form GLS estimates of `β`, `σ̂²` (MLE) and `σ̃²` (REML) at fixed lengthscales.
pub fn gls_estimates(
    x: &DMatrix<f64>,
    y: &[f64],
    basis: BasisSpec,
    kernel: &KernelSpec,
) -> Result<GlsEstimates> {
    validate(x, y, basis)?;
    let f = factor(x, y, basis, kernel)?;
    let n = x.nrows() as f64;
    let q = basis.q(x.ncols()) as f64;
    Ok(GlsEstimates {
        beta: f.beta,
        sigma2_mle: f.quad / n,
        sigma2_reml: f.quad / (n - q),
    })
}

fn objective_from(f: &Factored, n: usize, q: usize, method: Method) -> f64 {
    let (n, q) = (n as f64, q as f64);
    match method {
        Method::Mle => n * (f.quad / n).max(SIGMA2_FLOOR).ln() + f.logdet_r,
        Method::Reml => {
            (n - q) * (f.quad / (n - q)).max(SIGMA2_FLOOR).ln() + f.logdet_r + f.logdet_g
        }
    }
}

/// Profiled objective to be minimized over `λ` (MLE or REML form). Rows are put
/// in canonical order first, so the value does not depend on how they were listed.
pub fn neg_objective(
    x: &DMatrix<f64>,
    y: &[f64],
    basis: BasisSpec,
    family: KernelFamily,
    lengthscales: &[f64],
    method: Method,
) -> Result<f64> {
    validate(x, y, basis)?;
    let kernel = KernelSpec::new(family, lengthscales.to_vec())?;
    let (x, y) = canonical_order(x, y);
    let f = factor(&x, &y, basis, &kernel)?;
    Ok(objective_from(&f, x.nrows(), basis.q(x.ncols()), method))
}

/// Tuning for the lengthscale search.
#[derive(Debug, Clone, Copy)]
pub struct GpOptions {
    pub starts: usize,
    pub nelder_mead: NelderMead,
    /// Starting lengthscales are spread over `[lo, hi] × range_j` on the log scale.
    pub start_box: (f64, f64),
    /// Hard bounds on the search, also relative to each column's range.
    pub search_box: (f64, f64),
    pub seed: u64,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            nelder_mead: NelderMead::default(),
            start_box: (0.05, 5.0),
            search_box: (1e-3, 1e2),
            seed: 0x5eed,
        }
    }
}

/// A fitted emulator. Immutable once built; safe to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GpModelData", into = "GpModelData")]
pub struct GpModel {
    x: DMatrix<f64>,
    y: Vec<f64>,
    basis: BasisSpec,
    kernel: KernelSpec,
    method: Method,
    sigma2: f64,
    degenerate: bool,
    objective: f64,
    fac: Factored,
}

#[derive(Serialize, Deserialize)]
struct GpModelData {
    x: DMatrix<f64>,
    y: Vec<f64>,
    basis: BasisSpec,
    kernel: KernelSpec,
    method: Method,
}

impl From<GpModel> for GpModelData {
    fn from(m: GpModel) -> Self {
        Self {
            x: m.x,
            y: m.y,
            basis: m.basis,
            kernel: m.kernel,
            method: m.method,
        }
    }
}

impl TryFrom<GpModelData> for GpModel {
    type Error = Error;
    fn try_from(d: GpModelData) -> Result<Self> {
        GpModel::with_kernel(&d.x, &d.y, d.basis, d.kernel, d.method)
    }
}

/// Rows of `x` (with their `y`) in lexicographic order, so that fitting does not
/// depend on the order in which runs were supplied.
fn canonical_order(x: &DMatrix<f64>, y: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b).iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a].total_cmp(&y[b]))
    });
    let xs = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(idx[i], j)]);
    let ys = idx.iter().map(|&i| y[i]).collect();
    (xs, ys)
}

fn column_ranges(x: &DMatrix<f64>) -> Vec<f64> {
    x.column_iter()
        .map(|c| {
            let r = c.max() - c.min();
            if r > 0.0 {
                r
            } else {
                1.0
            }
        })
        .collect()
}

/// Fits with default options (5 starts, Nelder-Mead on log-lengthscales).
pub fn fit_gp(
    x: &DMatrix<f64>,
    y: &[f64],
    basis: BasisSpec,
    family: KernelFamily,
    method: Method,
) -> Result<GpModel> {
    fit_gp_with(x, y, basis, family, method, &GpOptions::default())
}

pub fn fit_gp_with(
    x: &DMatrix<f64>,
    y: &[f64],
    basis: BasisSpec,
    family: KernelFamily,
    method: Method,
    opts: &GpOptions,
) -> Result<GpModel> {
    validate(x, y, basis)?;
    let (x, y) = canonical_order(x, y);
    let d = x.ncols();
    let q = basis.q(d);
    let ranges = column_ranges(&x);
    let lo: Vec<f64> = ranges.iter().map(|r| (opts.search_box.0 * r).ln()).collect();
    let hi: Vec<f64> = ranges.iter().map(|r| (opts.search_box.1 * r).ln()).collect();

    let objective = |theta: &[f64]| -> f64 {
        if theta.iter().zip(lo.iter().zip(&hi)).any(|(t, (a, b))| t < a || t > b) {
            return f64::INFINITY;
        }
        let ls: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
        KernelSpec::new(family, ls)
            .and_then(|k| factor(&x, &y, basis, &k))
            .map(|f| objective_from(&f, x.nrows(), q, method))
            .unwrap_or(f64::INFINITY)
    };

    let starts = opts.starts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let unit = design::lhd(starts, d, &mut rng)?;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..starts {
        let start: Vec<f64> = (0..d)
            .map(|j| {
                let a = (opts.start_box.0 * ranges[j]).ln();
                let b = (opts.start_box.1 * ranges[j]).ln();
                a + unit[(s, j)] * (b - a)
            })
            .collect();
        let m = opts.nelder_mead.minimize(objective, &start, 0.5);
        if m.value.is_finite() && best.as_ref().is_none_or(|(_, v)| m.value < *v) {
            best = Some((m.x, m.value));
        }
    }
    let (theta, _) = best.ok_or_else(|| {
        Error::Optimization(format!("no start of {starts} reached a finite objective"))
    })?;
    let kernel = KernelSpec::new(family, theta.iter().map(|t| t.exp()).collect())?;
    GpModel::from_sorted(x, y, basis, kernel, method)
}

impl GpModel {
    /// Builds a model at fixed lengthscales (no optimization).
    pub fn with_kernel(
        x: &DMatrix<f64>,
        y: &[f64],
        basis: BasisSpec,
        kernel: KernelSpec,
        method: Method,
    ) -> Result<Self> {
        validate(x, y, basis)?;
        check_dim(kernel.dim(), x.ncols())?;
        let (x, y) = canonical_order(x, y);
        Self::from_sorted(x, y, basis, kernel, method)
    }

    fn from_sorted(
        x: DMatrix<f64>,
        y: Vec<f64>,
        basis: BasisSpec,
        kernel: KernelSpec,
        method: Method,
    ) -> Result<Self> {
        let fac = factor(&x, &y, basis, &kernel)?;
        let n = x.nrows();
        let q = basis.q(x.ncols());
        let raw = match method {
            Method::Mle => fac.quad / n as f64,
            Method::Reml => fac.quad / (n - q) as f64,
        };
        let objective = objective_from(&fac, n, q, method);
        Ok(Self {
            x,
            y,
            basis,
            kernel,
            method,
            sigma2: raw.max(SIGMA2_FLOOR),
            degenerate: raw < SIGMA2_FLOOR,
            objective,
            fac,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.fac.beta
    }

    /// `σ̂²` for MLE fits, `σ̃²` for REML fits (floored at [`SIGMA2_FLOOR`]).
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// True when the residual quadratic form vanished (data exactly in the regression span).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Training inputs, in the canonical (sorted) row order used internally.
    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn outputs(&self) -> &[f64] {
        &self.y
    }

    /// Cross-correlations with the training set. A training input gets the same
    /// jitter as the Gram diagonal, keeping the predictor an exact interpolator.
    fn cross_corr(&self, xstar: &[f64]) -> (DVector<f64>, f64) {
        let mut prior = 1.0;
        let r = DVector::from_iterator(
            self.n(),
            (0..self.n()).map(|i| {
                let row = self.x.row(i);
                let c = self
                    .kernel
                    .corr_unchecked(xstar, row.clone_owned().as_slice());
                if row.iter().zip(xstar).all(|(a, b)| a == b) {
                    prior = 1.0 + JITTER;
                    c + JITTER
                } else {
                    c
                }
            }),
        );
        (r, prior)
    }

    /// Predictive mean and variance at `xstar`.
    pub fn predict(&self, xstar: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.dim(), xstar.len())?;
        let (r, prior) = self.cross_corr(xstar);
        let g = self.basis.row(xstar);
        let mean = g.dot(&self.fac.beta) + r.dot(&self.fac.weights);

        let a = self
            .fac
            .chol
            .l_dirty()
            .solve_lower_triangular(&r)
            .ok_or_else(|| Error::Factorization("singular triangular factor".into()))?;
        let h = &g - self.fac.lg.tr_mul(&a);
        let gls = h.dot(&self.fac.gram_g.solve(&h));
        let var = self.sigma2 * (prior - a.norm_squared() + gls);
        Ok((mean, var.max(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn far_apart() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 1, &[0.0, 100.0])
    }

    #[test]
    fn basis_rows() {
        let g = basis_matrix(BasisSpec::ConstantLinear, &DMatrix::from_row_slice(1, 2, &[0.2, 0.7]));
        assert_eq!(g, DMatrix::from_row_slice(1, 3, &[1.0, 0.2, 0.7]));
        let g = basis_matrix(BasisSpec::ConstantLinear, &DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 1.0]));
        assert_eq!(g.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0; 3]);
        assert_eq!(g.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(basis_matrix(BasisSpec::Constant, &far_apart()).shape(), (2, 1));
    }

    #[test]
    fn identity_gram_hand_gls() {
        let k = KernelSpec::new(KernelFamily::Matern52, vec![1.0]).unwrap();
        let est = gls_estimates(&far_apart(), &[1.0, -1.0], BasisSpec::Constant, &k).unwrap();
        assert!(est.beta[0].abs() < 1e-12);
        assert!((est.sigma2_mle - 1.0).abs() < 1e-7);
        assert!((est.sigma2_reml - 2.0).abs() < 1e-7);

        let obj = neg_objective(
            &far_apart(),
            &[1.0, -1.0],
            BasisSpec::Constant,
            KernelFamily::Matern52,
            &[1.0],
            Method::Mle,
        )
        .unwrap();
        assert!(obj.abs() < 1e-6, "{obj}");
    }

    #[test]
    fn exact_linear_data_is_degenerate() {
        let x = DMatrix::from_row_slice(5, 1, &[0.0, 0.2, 0.5, 0.7, 1.0]);
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let k = KernelSpec::new(KernelFamily::Matern32, vec![0.3]).unwrap();
        let est = gls_estimates(&x, &y, BasisSpec::ConstantLinear, &k).unwrap();
        assert!((est.beta[0] - 2.0).abs() < 1e-8 && (est.beta[1] + 3.0).abs() < 1e-8);
        assert!(est.sigma2_mle < 1e-15);
        let m = GpModel::with_kernel(&x, &y, BasisSpec::ConstantLinear, k, Method::Reml).unwrap();
        assert!(m.is_degenerate());
    }

    #[test]
    fn duplicated_rows_are_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 1, &[0.4, 0.4, 0.4]);
        let k = KernelSpec::new(KernelFamily::Matern52, vec![0.3]).unwrap();
        let err = gls_estimates(&x, &[1.0, 2.0, 3.0], BasisSpec::ConstantLinear, &k).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)), "{err}");
    }

    #[test]
    fn too_few_runs_rejected() {
        let x = DMatrix::from_row_slice(2, 1, &[0.1, 0.9]);
        assert!(fit_gp(&x, &[1.0, 2.0], BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).is_err());
    }

    #[test]
    fn constant_response_predicts_constant() {
        let x = design::lhd_seeded(12, 2, 1).unwrap().points;
        let y = vec![3.25; 12];
        let m = fit_gp(&x, &y, BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).unwrap();
        assert!(m.is_degenerate());
        for p in [[0.1, 0.2], [0.9, 0.5], [0.5, 0.5]] {
            let (mean, var) = m.predict(&p).unwrap();
            assert!((mean - 3.25).abs() < 1e-8, "{mean}");
            assert!(var < 1e-10);
        }
    }

    #[test]
    fn far_prediction_reverts_to_regression() {
        let x = design::lhd_seeded(10, 1, 2).unwrap().points;
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v).sin()).collect();
        let k = KernelSpec::new(KernelFamily::SqExp, vec![0.2]).unwrap();
        let m = GpModel::with_kernel(&x, &y, BasisSpec::ConstantLinear, k, Method::Reml).unwrap();
        let xs = 50.0;
        let (mean, _) = m.predict(&[xs]).unwrap();
        let trend = m.beta()[0] + m.beta()[1] * xs;
        assert!((mean - trend).abs() < 1e-10);
    }

    #[test]
    fn interpolates_training_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = design::lhd(25, 2, &mut rng).unwrap();
        let y: Vec<f64> = (0..25).map(|i| (3.0 * x[(i, 0)]).exp() * (5.0 * x[(i, 1)]).cos() + rng.random::<f64>() * 0.01).collect();
        let m = fit_gp(&x, &y, BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).unwrap();
        let span = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
        for i in 0..25 {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            let (mean, var) = m.predict(&xi).unwrap();
            assert!((mean - y[i]).abs() <= 1e-6 * span, "{} vs {}", mean, y[i]);
            assert!(var <= 1e-6 * m.sigma2());
        }
    }

    #[test]
    fn permuted_rows_give_identical_fit() {
        let x = design::lhd_seeded(15, 2, 3).unwrap().points;
        let y: Vec<f64> = (0..15).map(|i| x[(i, 0)].powi(2) - x[(i, 1)]).collect();
        let m1 = fit_gp(&x, &y, BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).unwrap();
        let perm: Vec<usize> = (0..15).rev().collect();
        let xp = DMatrix::from_fn(15, 2, |i, j| x[(perm[i], j)]);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let m2 = fit_gp(&xp, &yp, BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).unwrap();
        for p in [[0.3, 0.3], [0.77, 0.1]] {
            let (a, va) = m1.predict(&p).unwrap();
            let (b, vb) = m2.predict(&p).unwrap();
            assert!((a - b).abs() < 1e-8 && (va - vb).abs() < 1e-8);
        }
        let obj = |xx: &DMatrix<f64>, yy: &[f64]| {
            neg_objective(xx, yy, BasisSpec::ConstantLinear, KernelFamily::Matern52, &[0.4, 0.6], Method::Reml).unwrap()
        };
        assert!((obj(&x, &y) - obj(&xp, &yp)).abs() < 1e-9);
    }

    #[test]
    fn translation_shifts_mean_only() {
        let x = design::lhd_seeded(14, 2, 4).unwrap().points;
        let y: Vec<f64> = (0..14).map(|i| (4.0 * x[(i, 0)]).sin() + x[(i, 1)]).collect();
        let k = KernelSpec::new(KernelFamily::Matern52, vec![0.3, 0.5]).unwrap();
        let m1 = GpModel::with_kernel(&x, &y, BasisSpec::ConstantLinear, k.clone(), Method::Reml).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let m2 = GpModel::with_kernel(&x, &ys, BasisSpec::ConstantLinear, k, Method::Reml).unwrap();
        let (a, va) = m1.predict(&[0.42, 0.13]).unwrap();
        let (b, vb) = m2.predict(&[0.42, 0.13]).unwrap();
        assert!((b - a - 10.0).abs() < 1e-8);
        assert!((va - vb).abs() < 1e-10 * va.max(1.0));
    }

    #[test]
    fn serde_round_trip_predicts_identically() {
        let x = design::lhd_seeded(10, 1, 5).unwrap().points;
        let y: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        let m = fit_gp(&x, &y, BasisSpec::ConstantLinear, KernelFamily::Matern32, Method::Mle).unwrap();
        let back: GpModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m.predict(&[0.33]).unwrap(), back.predict(&[0.33]).unwrap());
    }
}

//! C-SVC with a Gaussian kernel, trained by SMO, with Platt-scaled probabilities.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};

const TAU: f64 = 1e-12;
const MEDIAN_SUBSAMPLE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// Inverse kernel width; `None` selects it by the median heuristic.
    pub gamma: Option<f64>,
    /// KKT violation tolerance for SMO.
    pub tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    dim: usize,
    /// Support vectors stored row after row.
    support: Vec<f64>,
    /// `alpha_i * y_i` for each support vector.
    coef: Vec<f64>,
    rho: f64,
    gamma: f64,
    platt_a: f64,
    platt_b: f64,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

fn sigmoid_prob(f: f64, a: f64, b: f64) -> f64 {
    let t = a * f + b;
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

impl SvmModel {
    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn platt(&self) -> (f64, f64) {
        (self.platt_a, self.platt_b)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Signed distance-like score; positive means class 1.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let s: f64 = self
            .support
            .chunks_exact(self.dim.max(1))
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(sv, x, self.gamma))
            .sum();
        Ok(s - self.rho)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        let f = self.decision_value(x)?;
        Ok(sigmoid_prob(f, self.platt_a, self.platt_b))
    }
}

/// Inverse median of squared pairwise distances over at most 100 rows.
pub fn median_gamma<R: Rng + ?Sized>(x: &DMatrix<f64>, rng: &mut R) -> Result<f64> {
    let n = x.nrows();
    let rows: Vec<usize> = if n > MEDIAN_SUBSAMPLE {
        let mut v = sample(rng, n, MEDIAN_SUBSAMPLE).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    let mut d2 = Vec::with_capacity(rows.len() * rows.len() / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            d2.push((x.row(i) - x.row(j)).norm_squared());
        }
    }
    if d2.is_empty() {
        return Err(invalid("gamma", "need at least two rows for the median heuristic"));
    }
    d2.sort_by(f64::total_cmp);
    let k = d2.len();
    let med = if k % 2 == 1 {
        d2[k / 2]
    } else {
        0.5 * (d2[k / 2 - 1] + d2[k / 2])
    };
    if med <= 0.0 {
        return Err(invalid("gamma", "median squared distance is zero"));
    }
    Ok(1.0 / med)
}

pub fn fit_svm<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    labels: &[bool],
    params: SvmParams,
    rng: &mut R,
) -> Result<SvmModel> {
    let (n, d) = x.shape();
    check_dim(n, labels.len())?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = n - n_pos;
    if n_pos < 2 || n_neg < 2 {
        return Err(Error::Classifier(format!(
            "SVM needs at least two examples of each class, got {n_pos} positive and {n_neg} negative"
        )));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(invalid("c", "must be positive and finite"));
    }
    let gamma = match params.gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(_) => return Err(invalid("gamma", "must be positive and finite")),
        None => median_gamma(x, rng)?,
    };

    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(&rows[i], &rows[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    let alpha = smo(&k, &y, params.c, params.tol)?;
    let grad = gradient(&k, &y, &alpha);
    let rho = compute_rho(&y, &alpha, &grad, params.c);

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for i in 0..n {
        if alpha[i] > 0.0 {
            support.extend_from_slice(&rows[i]);
            coef.push(alpha[i] * y[i]);
        }
    }
    let mut model = SvmModel {
        dim: d,
        support,
        coef,
        rho,
        gamma,
        platt_a: 0.0,
        platt_b: 0.0,
    };
    let dec: Vec<f64> = rows
        .iter()
        .map(|r| model.decision_value(r))
        .collect::<Result<_>>()?;
    let (a, b) = platt_fit(&dec, labels);
    model.platt_a = a;
    model.platt_b = b;
    Ok(model)
}

fn gradient(k: &[f64], y: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let s: f64 = (0..n)
                .filter(|&j| alpha[j] != 0.0)
                .map(|j| y[i] * y[j] * k[i * n + j] * alpha[j])
                .sum();
            s - 1.0
        })
        .collect()
}

/// Solves the C-SVC dual with second-order working-set selection.
fn smo(k: &[f64], y: &[f64], c: f64, eps: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let max_iter = (100 * n).max(1_000_000);
    let up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    for _ in 0..max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let ygt = y[t] * g[t];
            gmax2 = gmax2.max(ygt);
            if i_sel == usize::MAX {
                continue;
            }
            let bdiff = gmax + ygt;
            if bdiff > 0.0 {
                let mut a = q(i_sel, i_sel) + q(t, t) - 2.0 * y[i_sel] * y[t] * q(i_sel, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -bdiff * bdiff / a;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = t;
                }
            }
        }
        if gmax + gmax2 < eps || i_sel == usize::MAX || j_sel == usize::MAX {
            return Ok(alpha);
        }
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    Err(Error::Classifier(format!(
        "SMO did not converge in {max_iter} iterations"
    )))
}

fn compute_rho(y: &[f64], alpha: &[f64], g: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..y.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    }
}

/// Newton fit of the sigmoid `1 / (1 + exp(A f + B))` with smoothed targets.
fn platt_fit(dec: &[f64], labels: &[bool]) -> (f64, f64) {
    let prior1 = labels.iter().filter(|&&l| l).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            log::debug!("Platt line search stalled");
            break;
        }
    }
    (a, b)
}

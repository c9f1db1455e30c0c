//! RMSE and the continuous ranked probability score.

use serde::{Deserialize, Serialize};

use crate::double_emulator::{PredictiveMixture, MIN_VARLOG};
use crate::error::{check_dim, invalid, Error, Result};
use crate::quadrature::integrate_with_breaks;
use crate::special::{bvn_cdf, norm_cdf, norm_interval, norm_sf};

/// Per-point score for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub index: usize,
    pub observed: f64,
    pub mean: f64,
    pub var: f64,
    pub crps: f64,
    pub squared_error: f64,
}

pub fn rmse(predicted: &[f64], observed: &[f64]) -> Result<f64> {
    check_dim(predicted.len(), observed.len())?;
    if predicted.is_empty() {
        return Err(Error::InvalidInput("rmse of an empty vector".into()));
    }
    let sse: f64 = predicted
        .iter()
        .zip(observed)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

/// CRPS of the lognormal with log-mean `m` and log-variance `v` at `x > 0`.
pub fn crps_lognormal(m: f64, v: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(invalid("x", format!("lognormal CRPS needs x > 0, got {x}")));
    }
    if !(v >= 0.0) {
        return Err(invalid("v", format!("{v} must be nonnegative")));
    }
    if v == 0.0 {
        return Ok((x - m.exp()).abs());
    }
    Ok(lognormal_crps_raw(m, v, x).max(0.0))
}

fn lognormal_crps_raw(m: f64, v: f64, x: f64) -> f64 {
    let s = v.sqrt();
    let w = (x.ln() - m) / s;
    let em = (m + 0.5 * v).exp();
    x * (norm_cdf(w) - norm_sf(w)) - 2.0 * em * (norm_cdf(w - s) - norm_sf((0.5 * v).sqrt()))
}

/// `∫_γ^∞ (1 - L(z))² dz` for the lognormal component of `pm` (requires `v > 0`).
pub fn upper_tail_term(pm: &PredictiveMixture) -> f64 {
    let (m, v, gamma) = (pm.m, pm.v, pm.gamma);
    let s = v.sqrt();
    let lg = gamma.ln();
    let l_gamma = norm_cdf((lg - m) / s);
    let c = (lg - m - v) / s;
    let below = gamma * l_gamma * l_gamma
        - 2.0 * (m + 0.5 * v).exp() * bvn_cdf(c, (0.5 * v).sqrt(), -std::f64::consts::FRAC_1_SQRT_2);
    (lognormal_crps_raw(m, v, gamma) - below).max(0.0)
}

/// `∫_γ^b (L(z) - 1) dz`, by parts.
fn lower_term(pm: &PredictiveMixture, b: f64) -> f64 {
    let (m, v, gamma) = (pm.m, pm.v, pm.gamma);
    let s = v.sqrt();
    let (lb, lg) = (b.ln(), gamma.ln());
    let first = -b * norm_sf((lb - m) / s) + gamma * norm_sf((lg - m) / s);
    first - (m + 0.5 * v).exp() * norm_interval((lg - m - v) / s, (lb - m - v) / s)
}

/// Closed-form CRPS of the mixture at an observation `u >= g`.
pub fn crps_exact(pm: &PredictiveMixture, u: f64) -> Result<f64> {
    if u < pm.g || u.is_nan() {
        return Err(Error::BelowGround { value: u, g: pm.g });
    }
    let PredictiveMixture { p, m, v, g, gamma } = *pm;
    let du = u - g;
    if p == 0.0 {
        return Ok(du);
    }
    if v <= MIN_VARLOG {
        let a = g.max(g - gamma + m.exp());
        let score = (1.0 - p) * du + p * (a - u).abs() - p * (1.0 - p) * (a - g);
        return Ok(score.max(0.0));
    }
    let b = du + gamma;
    let score = du + 2.0 * p * lower_term(pm, b) + p * p * upper_tail_term(pm);
    Ok(score.max(0.0))
}

/// CRPS of the mixture by adaptive quadrature of `∫ (F(y) - 1{y >= u})² dy`.
/// Used to cross-check [`crps_exact`].
pub fn crps_numeric(pm: &PredictiveMixture, u: f64) -> Result<f64> {
    if u < pm.g || u.is_nan() {
        return Err(Error::BelowGround { value: u, g: pm.g });
    }
    let PredictiveMixture { p, m, v, g, gamma } = *pm;
    if p == 0.0 {
        return Ok(u - g);
    }
    let sd = v.max(MIN_VARLOG).sqrt();
    let sf = |s: f64| {
        if v <= MIN_VARLOG {
            if s >= m {
                0.0
            } else {
                1.0
            }
        } else {
            norm_sf((s - m) / sd)
        }
    };
    // substitute y = g - gamma + e^s, so s runs from ln(gamma) upwards
    let s_lo = gamma.ln();
    let s_u = (u - g + gamma).ln();
    let integrand = |s: f64| {
        let tail = p * sf(s);
        let val = if s < s_u { 1.0 - tail } else { tail };
        s.exp() * val * val
    };
    let s_hi = s_u.max(m + v + 12.0 * sd).max(s_lo) + 1.0;
    let mut breaks = vec![s_lo, s_u, s_hi];
    for k in [-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0] {
        breaks.push(m + k * sd);
    }
    breaks.retain(|&b| b >= s_lo && b <= s_hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = integrate_with_breaks(integrand, &breaks, 1e-10);
    Ok(q.value.max(0.0))
}

/// Scores a batch of predictive mixtures against observations.
pub fn score_mixtures(mixtures: &[PredictiveMixture], observed: &[f64]) -> Result<Vec<ScoreRecord>> {
    check_dim(mixtures.len(), observed.len())?;
    mixtures
        .iter()
        .zip(observed)
        .enumerate()
        .map(|(index, (pm, &u))| {
            let mean = pm.mean();
            Ok(ScoreRecord {
                index,
                observed: u,
                mean,
                var: pm.var(),
                crps: crps_exact(pm, u)?,
                squared_error: (mean - u) * (mean - u),
            })
        })
        .collect()
}

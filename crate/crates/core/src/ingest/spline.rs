//! Natural cubic spline interpolation.

use crate::error::{check_dim, invalid, Result};

#[derive(Debug, Clone)]
pub struct NaturalSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(t: &[f64], y: &[f64]) -> Result<Self> {
        check_dim(t.len(), y.len())?;
        let n = t.len();
        if n < 2 {
            return Err(invalid("t", "a spline needs at least two points"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("t", "sample times must be strictly increasing"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = t[i + 1] - t[i];
                let h1 = t[i + 2] - t[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = t[i + 1] - t[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            t: t.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn covers(&self, t: f64) -> bool {
        let (a, b) = self.range();
        t >= a && t <= b
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.covers(t) {
            let (a, b) = self.range();
            return Err(invalid("t", format!("{t} outside the sampled range [{a}, {b}]")));
        }
        let n = self.t.len();
        let i = (self.t.partition_point(|&s| s <= t).max(1) - 1).min(n - 2);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - t) / h;
        let b = (t - self.t[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}

/// Values of the natural cubic spline through `(t, y)` at each knot.
/// Knots outside the sampled range are an error.
pub fn spline_interp(t: &[f64], y: &[f64], knots: &[f64]) -> Result<Vec<f64>> {
    let s = NaturalSpline::new(t, y)?;
    knots.iter().map(|&k| s.eval(k)).collect()
}

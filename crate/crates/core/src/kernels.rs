//! Separable stationary correlation functions and Gram matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Diagonal inflation applied to every Gram matrix before factorization.
pub const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    SqExp,
    Matern32,
    Matern52,
}

impl KernelFamily {
    /// Univariate correlation at distance `h >= 0` with lengthscale `lambda`.
    #[inline]
    pub fn corr_1d(self, h: f64, lambda: f64) -> f64 {
        let t = h / lambda;
        match self {
            KernelFamily::SqExp => (-t * t).exp(),
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * t;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * t;
                (1.0 + s + 5.0 * t * t / 3.0) * (-s).exp()
            }
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '/'], "_").as_str() {
            "sqexp" | "sq_exp" | "gaussian" => Ok(KernelFamily::SqExp),
            "matern32" | "matern_32" | "matern3_2" => Ok(KernelFamily::Matern32),
            "matern52" | "matern_52" | "matern5_2" => Ok(KernelFamily::Matern52),
            other => Err(invalid("kernel", format!("unknown family `{other}`"))),
        }
    }
}

/// A correlation family together with one positive lengthscale per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    lengthscales: Vec<f64>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(invalid("lengthscales", "need at least one dimension"));
        }
        if let Some(bad) = lengthscales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(invalid("lengthscales", format!("{bad} is not a positive finite value")));
        }
        Ok(Self {
            family,
            lengthscales,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Product correlation between two inputs.
    pub fn corr(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), xp.len())?;
        Ok(self.corr_unchecked(x, xp))
    }

    #[inline]
    pub(crate) fn corr_unchecked(&self, x: &[f64], xp: &[f64]) -> f64 {
        x.iter()
            .zip(xp)
            .zip(&self.lengthscales)
            .map(|((a, b), &l)| self.family.corr_1d((a - b).abs(), l))
            .product()
    }

    /// Gram matrix `R_ij = r(x_i, x_j)` over the rows of `x` (no jitter).
    pub fn gram(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x.ncols())?;
        let n = x.nrows();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
        let mut r = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..i {
                let c = self.corr_unchecked(&rows[i], &rows[j]);
                r[(i, j)] = c;
                r[(j, i)] = c;
            }
        }
        Ok(r)
    }
}

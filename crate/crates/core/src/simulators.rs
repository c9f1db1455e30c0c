//! Synthetic simulators that ground at a known minimum.
//!
//! Smooth test functions (Dette-Pepelyshev "curved" and the Rosenbrock banana)
//! are turned into grounding simulators by the clamp-then-power transform
//! `S = g + (max{0, (f - a)/m})^b`: the offset `a` sets the grounded volume and
//! the exponent `b` the hardness of the landing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::special::gamma_cdf;

/// Shifted Gamma-CDF simulator: `g` below `s`, `F(x - s; α, σ) + g` above.
pub fn gamma_sim(x: f64, s: f64, alpha: f64, sigma: f64, g: f64) -> f64 {
    if x < s {
        g
    } else {
        gamma_cdf(x - s, alpha, sigma) + g
    }
}

/// `max{sin²(x³ t), 0.05}`.
pub fn sine_cube(x: f64, t: f64) -> f64 {
    (x.powi(3) * t).sin().powi(2).max(0.05)
}

/// Dette-Pepelyshev curved function on three inputs.
pub fn dp_curved(x: &[f64]) -> Result<f64> {
    check_dim(3, x.len())?;
    if x[2] < -1.0 {
        return Err(invalid("x3", format!("{} < -1 leaves the square-root domain", x[2])));
    }
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    Ok(4.0 * (x1 - 2.0 + 8.0 * x2 - 8.0 * x2 * x2).powi(2)
        + (3.0 - 4.0 * x2).powi(2)
        + 16.0 * (x3 + 1.0).sqrt() * (2.0 * x3 - 1.0).powi(2))
}

/// Which penalty term the banana uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BananaVariant {
    /// `100 (x_{i+1} - x_i²)²`
    #[default]
    Squared,
    /// `100 (x_{i+1} - x_i)²`
    Linear,
}

impl std::str::FromStr for BananaVariant {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(BananaVariant::Squared),
            "linear" => Ok(BananaVariant::Linear),
            other => Err(invalid("banana_variant", format!("unknown variant `{other}`"))),
        }
    }
}

/// Rosenbrock banana, variant B: `Σ_{i<d} (1 - x_i)² + 100 (x_{i+1} - φ(x_i))²`.
pub fn banana(x: &[f64], variant: BananaVariant) -> Result<f64> {
    if x.len() < 2 {
        return Err(invalid("d", format!("banana needs d >= 2, got {}", x.len())));
    }
    Ok(x.windows(2)
        .map(|w| {
            let inner = match variant {
                BananaVariant::Squared => w[0] * w[0],
                BananaVariant::Linear => w[0],
            };
            (1.0 - w[0]).powi(2) + 100.0 * (w[1] - inner).powi(2)
        })
        .sum())
}

/// `(max{0, (f - a)/m})^b`; zero exactly where `f <= a`.
pub fn grounded_transform(f_value: f64, a: f64, b: f64, m_scale: f64) -> f64 {
    let t = ((f_value - a) / m_scale).max(0.0);
    if t == 0.0 {
        0.0
    } else {
        t.powf(b)
    }
}

/// Smooth base functions on `[0,1]^d` that can be grounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function", rename_all = "snake_case")]
pub enum TestFunction {
    DpCurved,
    Banana {
        dim: usize,
        #[serde(default)]
        variant: BananaVariant,
    },
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::DpCurved => 3,
            TestFunction::Banana { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            TestFunction::DpCurved => dp_curved(x),
            TestFunction::Banana { dim, variant } => {
                check_dim(*dim, x.len())?;
                banana(x, *variant)
            }
        }
    }

    /// Values of the function at `n_mc` uniform draws from `[0,1]^d`.
    pub fn sample_values<R: Rng + ?Sized>(&self, n_mc: usize, rng: &mut R) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut x = vec![0.0; d];
        (0..n_mc)
            .map(|_| {
                x.iter_mut().for_each(|v| *v = rng.random());
                self.eval(&x)
            })
            .collect()
    }
}

/// Offset `a` such that a fraction `target_volume` of `[0,1]^d` has `f <= a`,
/// taken as the empirical quantile over `n_mc` uniform samples.
pub fn calibrate_offset<R: Rng + ?Sized>(
    base: &TestFunction,
    target_volume: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<f64> {
    if !(target_volume > 0.0 && target_volume < 1.0) {
        return Err(invalid("target_volume", format!("{target_volume} is not in (0, 1)")));
    }
    if n_mc == 0 {
        return Err(invalid("n_mc", "need at least one sample"));
    }
    let mut values = base.sample_values(n_mc, rng)?;
    values.sort_by(f64::total_cmp);
    Ok(offset_from_sorted(&values, target_volume))
}

/// Empirical quantile used by [`calibrate_offset`]: the `⌈t·n⌉`-th order statistic.
pub fn offset_from_sorted(sorted: &[f64], target_volume: f64) -> f64 {
    let n = sorted.len();
    let k = ((target_volume * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Maximum of `f` over `[0,1]^d`: running max over `n_mc` uniform samples and,
/// for `d <= 12`, all `2^d` corners.
pub fn estimate_scale<R: Rng + ?Sized>(base: &TestFunction, n_mc: usize, rng: &mut R) -> Result<f64> {
    let d = base.dim();
    let mut best = f64::NEG_INFINITY;
    if d <= 12 {
        let mut corner = vec![0.0; d];
        for mask in 0u32..(1 << d) {
            for (j, c) in corner.iter_mut().enumerate() {
                *c = f64::from((mask >> j) & 1);
            }
            best = best.max(base.eval(&corner)?);
        }
    }
    for v in base.sample_values(n_mc, rng)? {
        best = best.max(v);
    }
    Ok(best)
}

/// A fully specified simulator with its declared grounding value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulatorSpec {
    /// One input in `[0,1]`, mapped to `[0, x_max]` before evaluating [`gamma_sim`].
    Gamma {
        s: f64,
        alpha: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        g: f64,
        #[serde(default = "ten")]
        x_max: f64,
    },
    /// One input in `[0,1]`, mapped to `[0, x_max]`; grounds at 0.05.
    SineCube {
        t: f64,
        #[serde(default = "two")]
        x_max: f64,
    },
    DpCurved {
        a: f64,
        b: f64,
        m_scale: f64,
        #[serde(default)]
        g: f64,
    },
    Banana {
        dim: usize,
        #[serde(default)]
        variant: BananaVariant,
        a: f64,
        b: f64,
        m_scale: f64,
        #[serde(default)]
        g: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}

impl SimulatorSpec {
    /// Grounded version of a smooth base function.
    pub fn grounded(base: TestFunction, a: f64, b: f64, m_scale: f64, g: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(invalid("b", "exponent must be positive"));
        }
        if !(m_scale > 0.0) {
            return Err(invalid("m_scale", "scale must be positive"));
        }
        Ok(match base {
            TestFunction::DpCurved => SimulatorSpec::DpCurved { a, b, m_scale, g },
            TestFunction::Banana { dim, variant } => {
                if dim < 2 {
                    return Err(invalid("dim", "banana needs d >= 2"));
                }
                SimulatorSpec::Banana {
                    dim,
                    variant,
                    a,
                    b,
                    m_scale,
                    g,
                }
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            SimulatorSpec::Gamma { .. } | SimulatorSpec::SineCube { .. } => 1,
            SimulatorSpec::DpCurved { .. } => 3,
            SimulatorSpec::Banana { dim, .. } => *dim,
        }
    }

    pub fn grounding_value(&self) -> f64 {
        match self {
            SimulatorSpec::SineCube { .. } => 0.05,
            SimulatorSpec::Gamma { g, .. }
            | SimulatorSpec::DpCurved { g, .. }
            | SimulatorSpec::Banana { g, .. } => *g,
        }
    }

    pub fn test_function(&self) -> Option<TestFunction> {
        match self {
            SimulatorSpec::DpCurved { .. } => Some(TestFunction::DpCurved),
            SimulatorSpec::Banana { dim, variant, .. } => Some(TestFunction::Banana {
                dim: *dim,
                variant: *variant,
            }),
            _ => None,
        }
    }

    /// Evaluates the simulator at a point of `[0,1]^d`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        match *self {
            SimulatorSpec::Gamma {
                s,
                alpha,
                sigma,
                g,
                x_max,
            } => {
                if !(alpha > 0.0 && sigma > 0.0) {
                    return Err(invalid("alpha/sigma", "Gamma shape and scale must be positive"));
                }
                Ok(gamma_sim(x[0] * x_max, s, alpha, sigma, g))
            }
            SimulatorSpec::SineCube { t, x_max } => Ok(sine_cube(x[0] * x_max, t)),
            SimulatorSpec::DpCurved { a, b, m_scale, g } => {
                Ok(g + grounded_transform(dp_curved(x)?, a, b, m_scale))
            }
            SimulatorSpec::Banana {
                variant,
                a,
                b,
                m_scale,
                g,
                ..
            } => Ok(g + grounded_transform(banana(x, variant)?, a, b, m_scale)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_branches() {
        assert_eq!(gamma_sim(1.0, 2.5, 2.0, 1.0, 0.3), 0.3);
        assert_eq!(gamma_sim(2.5, 2.5, 2.0, 1.0, 0.0), 0.0);
        let want = 1.0 - 3.0 * (-2.0f64).exp();
        assert!((gamma_sim(4.5, 2.5, 2.0, 1.0, 0.0) - want).abs() < 1e-12);
        assert!((want - 0.593_99).abs() < 1e-5);
    }

    #[test]
    fn sine_cube_values() {
        assert_eq!(sine_cube(0.0, 0.7), 0.05);
        assert_eq!(sine_cube(1.3, 0.0), 0.05);
        let x = (std::f64::consts::FRAC_PI_2).cbrt();
        assert!((sine_cube(x, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dp_values() {
        assert!((dp_curved(&[0.5, 0.5, 0.5]).unwrap() - 2.0).abs() < 1e-14);
        let third = |x3: f64| dp_curved(&[0.5, 0.5, x3]).unwrap() - 2.0;
        assert!((third(0.0) - 16.0).abs() < 1e-13);
        for x3 in [0.0, 0.2, 0.49, 0.51, 0.9] {
            assert!(third(x3) >= third(0.5));
        }
        assert!(dp_curved(&[0.5, 0.5, -2.0]).is_err());
        assert!(dp_curved(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn banana_values() {
        for v in [BananaVariant::Squared, BananaVariant::Linear] {
            assert_eq!(banana(&[1.0, 1.0], v).unwrap(), 0.0);
            assert_eq!(banana(&[0.0, 0.0], v).unwrap(), 1.0);
            assert_eq!(banana(&[1.0; 8], v).unwrap(), 0.0);
        }
        assert!(banana(&[0.3], BananaVariant::Squared).is_err());
        assert_eq!(banana(&[0.5, 0.0], BananaVariant::Squared).unwrap(), 0.25 + 100.0 * 0.0625);
        assert_eq!(banana(&[0.5, 0.0], BananaVariant::Linear).unwrap(), 0.25 + 25.0);
    }

    #[test]
    fn transform_values() {
        assert_eq!(grounded_transform(0.2, 0.3, 0.5, 2.0), 0.0);
        assert_eq!(grounded_transform(0.3, 0.3, 0.5, 2.0), 0.0);
        assert!((grounded_transform(5.0, 1.0, 1.0, 4.0) - 1.0).abs() < 1e-15);
        assert!((grounded_transform(1.0 + 0.25 * 4.0, 1.0, 0.5, 4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn banana_corner_scale() {
        let base = TestFunction::Banana {
            dim: 2,
            variant: BananaVariant::Linear,
        };
        let corners = [[0.0, 1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        let vals: Vec<f64> = corners.iter().map(|c| base.eval(c).unwrap()).collect();
        assert_eq!(vals, vec![101.0, 100.0, 1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(estimate_scale(&base, 1000, &mut rng).unwrap(), 101.0);
        let sq = TestFunction::Banana {
            dim: 2,
            variant: BananaVariant::Squared,
        };
        assert_eq!(estimate_scale(&sq, 1000, &mut rng).unwrap(), 101.0);
    }

    #[test]
    fn scale_includes_dp_corners() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = estimate_scale(&TestFunction::DpCurved, 10, &mut rng).unwrap();
        for mask in 0..8u32 {
            let c: Vec<f64> = (0..3).map(|j| f64::from((mask >> j) & 1)).collect();
            assert!(m >= dp_curved(&c).unwrap());
        }
    }

    #[test]
    fn scale_nondecreasing_on_nested_samples() {
        let base = TestFunction::DpCurved;
        let mut prev = f64::NEG_INFINITY;
        for n in [10, 100, 1000] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let m = estimate_scale(&base, n, &mut rng).unwrap();
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn offsets_are_monotone_in_target() {
        let base = TestFunction::Banana {
            dim: 2,
            variant: BananaVariant::Squared,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut vals = base.sample_values(20_000, &mut rng).unwrap();
        vals.sort_by(f64::total_cmp);
        let a: Vec<f64> = [0.2, 0.5, 0.8]
            .iter()
            .map(|t| offset_from_sorted(&vals, *t))
            .collect();
        assert!(a[0] <= a[1] && a[1] <= a[2]);
        // a near-zero target sits at the sample minimum
        assert_eq!(offset_from_sorted(&vals, 1e-9), vals[0]);
        assert!(calibrate_offset(&base, 0.0, 10, &mut rng).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = SimulatorSpec::Banana {
            dim: 2,
            variant: BananaVariant::Squared,
            a: 3.0,
            b: 0.5,
            m_scale: 101.0,
            g: 0.0,
        };
        let text = toml::to_string(&spec).unwrap();
        let back: SimulatorSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let bogus = "kind = \"banana\"\ndim = 2\na = 1.0\nb = 1.0\nm_scale = 1.0\nbogus = 1";
        assert!(toml::from_str::<SimulatorSpec>(bogus).is_err());
    }

    proptest! {
        #[test]
        fn outputs_never_below_ground(
            x in prop::collection::vec(0.0..=1.0f64, 3),
            b in 0.1..3.0f64,
            a in 0.0..50.0f64,
        ) {
            let sims = [
                SimulatorSpec::DpCurved { a, b, m_scale: 60.0, g: -0.5 },
                SimulatorSpec::Banana { dim: 3, variant: BananaVariant::Squared, a, b, m_scale: 200.0, g: 0.25 },
            ];
            for s in sims {
                prop_assert!(s.eval(&x).unwrap() >= s.grounding_value());
            }
            let gs = SimulatorSpec::Gamma { s: 2.5, alpha: 0.1 + b, sigma: 1.0, g: 0.1, x_max: 10.0 };
            prop_assert!(gs.eval(&x[..1]).unwrap() >= 0.1);
            let sc = SimulatorSpec::SineCube { t: x[1], x_max: 2.0 };
            let v = sc.eval(&x[..1]).unwrap();
            prop_assert!((0.05..=1.0).contains(&v));
        }

        #[test]
        fn transform_monotone_and_continuous(f in -5.0..5.0f64, df in 0.0..1.0f64, b in 0.05..4.0f64) {
            let lo = grounded_transform(f, 0.5, b, 3.0);
            let hi = grounded_transform(f + df, 0.5, b, 3.0);
            prop_assert!(hi >= lo);
            if (f - 0.5).abs() > 1e-2 {
                let near = grounded_transform(f + 1e-12, 0.5, b, 3.0);
                prop_assert!((near - lo).abs() < 1e-9);
            }
            // approach to the grounding kink from above
            let h = 1e-200;
            prop_assert_eq!(grounded_transform(h, 0.0, b, 3.0), (h / 3.0f64).powf(b));
            prop_assert!(grounded_transform(h, 0.0, b, 3.0) < 1e-3);
        }

        #[test]
        fn gamma_nondecreasing(x in 0.0..10.0f64, dx in 0.0..2.0f64, alpha in 0.05..5.0f64) {
            prop_assert!(gamma_sim(x + dx, 2.5, alpha, 1.0, 0.0) >= gamma_sim(x, 2.5, alpha, 1.0, 0.0));
        }
    }
}

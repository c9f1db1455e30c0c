//! Latin hypercube designs and maximin selection among candidates.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Number of random candidates scored by [`maximin_lhd`] unless told otherwise.
pub const DEFAULT_CANDIDATES: usize = 30;

/// `n` points in `[0,1]^d`, one per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub points: DMatrix<f64>,
    pub seed: u64,
}

impl Design {
    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    /// Writes the design as CSV with header `x1,...,xd`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n() {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV whose columns are all inputs (`x1..xd`); a trailing `y` column is ignored.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let d = headers.iter().take_while(|h| h.starts_with('x')).count();
        if d == 0 {
            return Err(Error::Format {
                path: path.to_owned(),
                reason: "expected columns x1..xd".into(),
            });
        }
        let mut data = Vec::new();
        let mut n = 0;
        for rec in rdr.records() {
            let rec = rec?;
            for j in 0..d {
                data.push(parse_field(path, &rec[j])?);
            }
            n += 1;
        }
        Ok(Self {
            points: DMatrix::from_row_slice(n, d, &data),
            seed: 0,
        })
    }
}

pub(crate) fn parse_field(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Format {
        path: path.to_owned(),
        reason: format!("`{s}` is not a number"),
    })
}

/// Random Latin hypercube: one point per stratum `[k/n, (k+1)/n)` in every dimension,
/// placed uniformly within its stratum.
pub fn lhd<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if n == 0 || d == 0 {
        return Err(invalid("n/d", "a design needs n >= 1 and d >= 1"));
    }
    let mut points = DMatrix::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, &k) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            // guard against rounding up into the next stratum
            let v = (k as f64 + u) / n as f64;
            points[(i, j)] = v.min(((k + 1) as f64 / n as f64).next_down()).max(k as f64 / n as f64);
        }
    }
    Ok(points)
}

/// Seeded convenience wrapper around [`lhd`].
pub fn lhd_seeded(n: usize, d: usize, seed: u64) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Design {
        points: lhd(n, d, &mut rng)?,
        seed,
    })
}

/// Smallest Euclidean distance between any two rows.
pub fn min_pairwise_dist(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(invalid("design", "min_pairwise_dist needs at least two points"));
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for k in 0..i {
            let d2: f64 = (0..x.ncols()).map(|j| (x[(i, j)] - x[(k, j)]).powi(2)).sum();
            best = best.min(d2);
        }
    }
    Ok(best.sqrt())
}

/// Index of the candidate with the largest minimum pairwise distance; ties go to the lowest index.
pub fn maximin_index(designs: &[DMatrix<f64>]) -> Result<usize> {
    if designs.is_empty() {
        return Err(invalid("designs", "no candidates to select from"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in designs.iter().enumerate() {
        let c = if x.nrows() < 2 {
            f64::INFINITY
        } else {
            min_pairwise_dist(x)?
        };
        if c > best.1 {
            best = (i, c);
        }
    }
    Ok(best.0)
}

pub fn maximin_select(designs: &[Design]) -> Result<Design> {
    let mats: Vec<DMatrix<f64>> = designs.iter().map(|d| d.points.clone()).collect();
    Ok(designs[maximin_index(&mats)?].clone())
}

/// Best of `candidates` random LHDs by the maximin criterion.
pub fn maximin_lhd(n: usize, d: usize, candidates: usize, seed: u64) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cands = (0..candidates.max(1))
        .map(|_| lhd(n, d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let best = maximin_index(&cands)?;
    Ok(Design {
        points: cands[best].clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stratified(x: &DMatrix<f64>) -> bool {
        let n = x.nrows();
        (0..x.ncols()).all(|j| {
            let mut cells: Vec<usize> = (0..n).map(|i| (x[(i, j)] * n as f64).floor() as usize).collect();
            cells.sort_unstable();
            cells == (0..n).collect::<Vec<_>>()
        })
    }

    #[test]
    fn single_point_in_unit_cube() {
        let d = lhd_seeded(1, 4, 3).unwrap();
        assert!(d.points.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn quartiles_in_one_dim() {
        let d = lhd_seeded(4, 1, 9).unwrap();
        let mut v: Vec<f64> = d.points.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        for (k, x) in v.iter().enumerate() {
            assert!(*x >= k as f64 / 4.0 && *x < (k + 1) as f64 / 4.0);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        assert_eq!(lhd_seeded(17, 3, 5).unwrap(), lhd_seeded(17, 3, 5).unwrap());
        assert_eq!(maximin_lhd(10, 2, 30, 1).unwrap(), maximin_lhd(10, 2, 30, 1).unwrap());
    }

    #[test]
    fn many_designs_stay_stratified() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..500 {
            let x = lhd(1 + i % 37, 1 + i % 5, &mut rng).unwrap();
            assert!(stratified(&x));
        }
    }

    #[test]
    fn min_distance_cases() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 4.0]);
        assert_eq!(min_pairwise_dist(&x).unwrap(), 5.0);
        let dup = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, 0.5, 0.5, 0.1, 0.2]);
        assert_eq!(min_pairwise_dist(&dup).unwrap(), 0.0);
        assert!(min_pairwise_dist(&DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn one_dim_matches_sorted_adjacent_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DMatrix::from_fn(10, 1, |_, _| rng.random::<f64>());
        let mut v: Vec<f64> = x.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        let oracle = v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        assert!((min_pairwise_dist(&x).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn selection_rules() {
        assert!(maximin_select(&[]).is_err());
        let only = lhd_seeded(5, 2, 1).unwrap();
        assert_eq!(maximin_select(std::slice::from_ref(&only)).unwrap(), only);

        let mut degenerate = lhd_seeded(5, 2, 2).unwrap();
        let first = degenerate.points.row(0).clone_owned();
        degenerate.points.set_row(1, &first);
        let fine = lhd_seeded(5, 2, 3).unwrap();
        assert_eq!(maximin_select(&[degenerate.clone(), fine.clone()]).unwrap(), fine);
        assert_eq!(maximin_select(&[fine.clone(), degenerate]).unwrap(), fine);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = lhd_seeded(6, 3, 8).unwrap();
        d.write_csv(&p).unwrap();
        let back = Design::read_csv(&p).unwrap();
        assert_eq!(back.points, d.points);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x1,x2,x3\n"));
    }
}

//! Loading externally produced run ensembles and reducing them to a scalar output.

mod spline;

pub use spline::{spline_interp, NaturalSpline};

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::parse_field;
use crate::error::{check_dim, Error, Result};

/// Input columns of the oxidation ensembles, in file order.
pub const OXIDATION_INPUTS: [&str; 8] = ["k1", "k2", "DhH", "DhM", "DhO", "DcH", "DcM", "DcO"];

pub const INPUTS_FILE: &str = "inputs.csv";
pub const TRACES_FILE: &str = "traces.csv";

/// One run's output over time. Times are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
}

impl Trace {
    pub fn new(run: &str, t: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        let err = |reason: String| Error::Trace {
            run: run.to_owned(),
            reason,
        };
        if t.len() != value.len() {
            return Err(err("times and values differ in length".into()));
        }
        if t.len() < 2 {
            return Err(err(format!("needs at least 2 samples, has {}", t.len())));
        }
        if let Some(k) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(err(format!(
                "times not strictly increasing at sample {} ({} then {})",
                k + 1,
                t[k],
                t[k + 1]
            )));
        }
        Ok(Self { t, value })
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.t[0] && t <= self.t[self.t.len() - 1]
    }

    pub fn interp(&self, knots: &[f64]) -> Result<Vec<f64>> {
        spline_interp(&self.t, &self.value, knots)
    }
}

/// Runs with their inputs rescaled to the unit cube and their output traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEnsemble {
    pub run_ids: Vec<String>,
    pub names: Vec<String>,
    /// Inputs on `[0,1]^d`.
    pub inputs: DMatrix<f64>,
    pub input_min: Vec<f64>,
    pub input_max: Vec<f64>,
    /// Inputs exactly as supplied.
    pub raw_inputs: DMatrix<f64>,
    pub traces: Vec<Trace>,
}

impl RunEnsemble {
    /// Builds an ensemble from inputs in original units.
    pub fn new(
        run_ids: Vec<String>,
        names: Vec<String>,
        raw_inputs: &DMatrix<f64>,
        traces: Vec<Trace>,
    ) -> Result<Self> {
        let (n, d) = raw_inputs.shape();
        check_dim(n, run_ids.len())?;
        check_dim(n, traces.len())?;
        check_dim(d, names.len())?;
        let input_min: Vec<f64> = raw_inputs.column_iter().map(|c| c.min()).collect();
        let input_max: Vec<f64> = raw_inputs.column_iter().map(|c| c.max()).collect();
        let inputs = DMatrix::from_fn(n, d, |i, j| {
            let span = input_max[j] - input_min[j];
            if span > 0.0 {
                (raw_inputs[(i, j)] - input_min[j]) / span
            } else {
                0.0
            }
        });
        Ok(Self {
            run_ids,
            names,
            inputs,
            input_min,
            input_max,
            raw_inputs: raw_inputs.clone(),
            traces,
        })
    }

    pub fn n(&self) -> usize {
        self.run_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Unit-cube inputs mapped back to original units.
    pub fn original_inputs(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.dim(), |i, j| {
            self.input_min[j] + self.inputs[(i, j)] * (self.input_max[j] - self.input_min[j])
        })
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

/// Loads `inputs.csv` and `traces.csv` from `dir`.
pub fn load_ensemble(dir: &Path) -> Result<RunEnsemble> {
    load_ensemble_files(&dir.join(INPUTS_FILE), &dir.join(TRACES_FILE))
}

/// Inputs file: `run_id` followed by one column per input.
/// Traces file: `run_id,t,value`, rows grouped by run with increasing `t`.
pub fn load_ensemble_files(inputs_path: &Path, traces_path: &Path) -> Result<RunEnsemble> {
    let mut rdr = csv::Reader::from_path(inputs_path)?;
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("run_id") {
        return Err(format_err(inputs_path, "first column must be `run_id`"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if names.is_empty() {
        return Err(format_err(inputs_path, "no input columns"));
    }
    let mut run_ids = Vec::new();
    let mut raw = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        run_ids.push(rec[0].to_owned());
        for j in 1..=names.len() {
            raw.push(parse_field(inputs_path, &rec[j])?);
        }
    }
    if run_ids.is_empty() {
        return Err(format_err(inputs_path, "no runs"));
    }
    let mut index = HashMap::new();
    for (i, id) in run_ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(format_err(inputs_path, format!("duplicate run_id `{id}`")));
        }
    }
    let raw = DMatrix::from_row_slice(run_ids.len(), names.len(), &raw);

    let mut rdr = csv::Reader::from_path(traces_path)?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format_err(traces_path, format!("missing column `{name}`")))
    };
    let (c_id, c_t, c_v) = (col("run_id")?, col("t")?, col("value")?);
    let mut blocks: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; run_ids.len()];
    let mut current: Option<usize> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let id = &rec[c_id];
        let i = *index
            .get(id)
            .ok_or_else(|| format_err(traces_path, format!("run `{id}` has no inputs row")))?;
        if current != Some(i) {
            if blocks[i].is_some() {
                return Err(Error::Trace {
                    run: id.to_owned(),
                    reason: "rows are not grouped by run".into(),
                });
            }
            blocks[i] = Some((Vec::new(), Vec::new()));
            current = Some(i);
        }
        let (t, v) = blocks[i].as_mut().expect("block just created");
        t.push(parse_field(traces_path, &rec[c_t])?);
        v.push(parse_field(traces_path, &rec[c_v])?);
    }
    let traces = blocks
        .into_iter()
        .zip(&run_ids)
        .map(|(b, id)| {
            let (t, v) = b.ok_or_else(|| Error::Trace {
                run: id.clone(),
                reason: "no trace rows".into(),
            })?;
            Trace::new(id, t, v)
        })
        .collect::<Result<Vec<_>>>()?;
    RunEnsemble::new(run_ids, names, &raw, traces)
}

/// Writes the ensemble in original units to `inputs.csv` and `traces.csv` under `dir`.
pub fn write_ensemble(ens: &RunEnsemble, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let inputs_path = dir.join(INPUTS_FILE);
    let traces_path = dir.join(TRACES_FILE);
    let raw = &ens.raw_inputs;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&inputs_path)?);
    writeln!(w, "run_id,{}", ens.names.join(","))?;
    for (i, id) in ens.run_ids.iter().enumerate() {
        let row: Vec<String> = raw.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{id},{}", row.join(","))?;
    }
    w.flush()?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&traces_path)?);
    writeln!(w, "run_id,t,value")?;
    for (id, tr) in ens.run_ids.iter().zip(&ens.traces) {
        for (t, v) in tr.t.iter().zip(&tr.value) {
            writeln!(w, "{id},{t:?},{v:?}")?;
        }
    }
    w.flush()?;
    Ok((inputs_path, traces_path))
}

/// Values within this distance of the grounding value are set to it.
pub fn grounding_tolerance() -> f64 {
    f64::EPSILON.sqrt()
}

/// Output of every run whose trace covers `t_star`, interpolated there.
/// With `g` given, values within [`grounding_tolerance`] of `g` (or within
/// 1e-12 below it) are set to `g`.
pub fn extract_qoi(ens: &RunEnsemble, t_star: f64, g: Option<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if !(t_star >= 0.0) {
        return Err(Error::InvalidInput(format!("t_star must be nonnegative, got {t_star}")));
    }
    let mut keep = Vec::new();
    let mut y = Vec::new();
    for (i, tr) in ens.traces.iter().enumerate() {
        if !tr.covers(t_star) {
            log::warn!("run `{}` does not reach t = {t_star}; dropped", ens.run_ids[i]);
            continue;
        }
        let mut v = tr.interp(&[t_star])?[0];
        if let Some(g) = g {
            if (v - g).abs() <= grounding_tolerance() || (v < g && g - v <= 1e-12) {
                v = g;
            }
        }
        keep.push(i);
        y.push(v);
    }
    if keep.is_empty() {
        return Err(Error::InvalidInput(format!("no run covers t = {t_star}")));
    }
    let x = DMatrix::from_fn(keep.len(), ens.dim(), |i, j| ens.inputs[(keep[i], j)]);
    Ok((x, y))
}

/// Writes `x1..xd,y`.
pub fn write_dataset(path: &Path, x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    check_dim(x.nrows(), y.len())?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    writeln!(w, "{}", header.join(","))?;
    for (i, yi) in y.iter().enumerate() {
        let mut row: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        row.push(format!("{yi:?}"));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset with header `x1..xd,y`.
pub fn read_dataset(path: &Path) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let d = header.len().saturating_sub(1);
    let expected = (1..=d).map(|j| format!("x{j}")).chain(std::iter::once("y".into()));
    if d == 0 || !header.iter().zip(expected).all(|(h, e): (&str, String)| h == e) {
        return Err(format_err(path, "expected header x1,...,xd,y"));
    }
    let mut data = Vec::new();
    let mut y = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        for j in 0..d {
            data.push(parse_field(path, &rec[j])?);
        }
        y.push(parse_field(path, &rec[d])?);
    }
    Ok((DMatrix::from_row_slice(y.len(), d, &data), y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(dir: &Path, traces: &str) {
        std::fs::write(
            dir.join(INPUTS_FILE),
            "run_id,k1,k2,DhH,DhM,DhO,DcH,DcM,DcO\n\
             a,1,2,3,4,5,6,7,8\n\
             b,2,4,6,8,10,12,14,16\n",
        )
        .unwrap();
        std::fs::write(dir.join(TRACES_FILE), traces).unwrap();
    }

    #[test]
    fn loads_toy_ensemble() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path(), "run_id,t,value\na,0,0\na,1,1\na,2,4\nb,0,1\nb,1.5,2\n");
        let ens = load_ensemble(dir.path()).unwrap();
        assert_eq!(ens.n(), 2);
        assert_eq!(ens.names, OXIDATION_INPUTS.map(String::from).to_vec());
        assert_eq!(ens.inputs.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0; 8]);
        assert_eq!(ens.inputs.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0; 8]);
        let (x, y) = extract_qoi(&ens, 1.0, None).unwrap();
        assert_eq!(y, vec![1.0, 1.0 + 1.0 / 1.5]);
        assert_eq!(x.nrows(), 2);
        let (x, y) = extract_qoi(&ens, 1.8, None).unwrap();
        assert_eq!((x.nrows(), y.len()), (1, 1));
        assert!(extract_qoi(&ens, 3.0, None).is_err());
    }

    #[test]
    fn shuffled_trace_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path(), "run_id,t,value\na,1,1\na,0,0\nb,0,1\nb,1,2\n");
        match load_ensemble(dir.path()) {
            Err(Error::Trace { run, .. }) => assert_eq!(run, "a"),
            other => panic!("{other:?}"),
        }
        toy(dir.path(), "run_id,t,value\na,0,1\nb,0,1\nb,1,2\na,1,1\n");
        assert!(load_ensemble(dir.path()).is_err());
    }

    #[test]
    fn missing_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path(), "run_id,t\na,0\na,1\n");
        assert!(matches!(load_ensemble(dir.path()), Err(Error::Format { .. })));
        toy(dir.path(), "run_id,t,value\na,0,0\na,1,1\n");
        assert!(matches!(load_ensemble(dir.path()), Err(Error::Trace { .. })));
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path(), "run_id,t,value\na,0,0.1\na,1,0.30000000000000004\nb,0,1e-300\nb,1.5,2\n");
        let ens = load_ensemble(dir.path()).unwrap();
        let out = dir.path().join("copy");
        write_ensemble(&ens, &out).unwrap();
        let back = load_ensemble(&out).unwrap();
        assert_eq!(ens, back);
    }

    #[test]
    fn rescaling_is_invertible() {
        let raw = DMatrix::from_row_slice(3, 2, &[1e-5, 300.0, 3e-5, 310.5, 2.2e-5, 299.0]);
        let tr = || Trace::new("r", vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let ens = RunEnsemble::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["u".into(), "w".into()],
            &raw,
            vec![tr(), tr(), tr()],
        )
        .unwrap();
        let back = ens.original_inputs();
        for (a, b) in raw.iter().zip(back.iter()) {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn grounding_snap() {
        let dir = tempfile::tempdir().unwrap();
        toy(dir.path(), "run_id,t,value\na,0,1e-9\na,1,1\nb,0,-1e-13\nb,1,2\n");
        let ens = load_ensemble(dir.path()).unwrap();
        let (_, y) = extract_qoi(&ens, 0.0, Some(0.0)).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        let (_, y) = extract_qoi(&ens, 0.0, None).unwrap();
        assert_eq!(y, vec![1e-9, -1e-13]);
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let x = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        write_dataset(&p, &x, &[1.0, 2.5]).unwrap();
        let (x2, y2) = read_dataset(&p).unwrap();
        assert_eq!(x, x2);
        assert_eq!(y2, vec![1.0, 2.5]);
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_dataset(&p).is_err());
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ScoreTable;
use crate::error::{Error, Result};

/// Quantile by linear interpolation between order statistics
/// (`h = (n-1)p`, the default in R and NumPy). `sorted` must be ascending and nonempty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile_type7(&v, 0.25),
            median: quantile_type7(&v, 0.5),
            q3: quantile_type7(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_crps: Option<MetricSummary>,
    pub rmse: Option<MetricSummary>,
}

pub fn summarize(table: &ScoreTable) -> Vec<ModelSummary> {
    table
        .models()
        .into_iter()
        .map(|model| {
            let crps = table.crps_column(&model);
            let total = table.rows.iter().filter(|r| r.model == model).count();
            ModelSummary {
                n_ok: crps.len(),
                n_failed: total - crps.len(),
                mean_crps: MetricSummary::from_values(&crps),
                rmse: MetricSummary::from_values(&table.rmse_column(&model)),
                model,
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// `model,replicate,mean_crps,rmse,status`; failed rows leave the scores empty.
pub fn write_scores_csv<W: Write>(table: &ScoreTable, mut w: W) -> Result<()> {
    writeln!(w, "model,replicate,mean_crps,rmse,status")?;
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            csv_text(&r.model),
            r.replicate,
            num(r.mean_crps),
            num(r.rmse),
            csv_text(&r.status.to_string())
        )?;
    }
    Ok(())
}

fn file_stem(model: &str) -> String {
    model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `scores.csv`, `summary.json`, one `boxplot_<model>.csv` per model and,
/// when per-point records were kept, `points.csv`. Returns the paths written.
pub fn emit_report(table: &ScoreTable, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::InvalidInput("empty score table".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let path = out_dir.join("scores.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_scores_csv(table, &mut w)?;
    w.flush()?;
    written.push(path);

    let path = out_dir.join("summary.json");
    let summary = serde_json::json!({ "models": summarize(table) });
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(path);

    for model in table.models() {
        let path = out_dir.join(format!("boxplot_{}.csv", file_stem(&model)));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(w, "model,replicate,metric,value")?;
        for r in table.rows.iter().filter(|r| r.model == model && r.status.is_ok()) {
            writeln!(w, "{},{},mean_crps,{}", csv_text(&model), r.replicate, num(r.mean_crps))?;
            writeln!(w, "{},{},rmse,{}", csv_text(&model), r.replicate, num(r.rmse))?;
        }
        w.flush()?;
        written.push(path);
    }

    if table.rows.iter().any(|r| !r.points.is_empty()) {
        let path = out_dir.join("points.csv");
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(w, "model,replicate,index,observed,mean,var,crps,squared_error")?;
        for r in &table.rows {
            for p in &r.points {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    csv_text(&r.model),
                    r.replicate,
                    p.index,
                    num(p.observed),
                    num(p.mean),
                    num(p.var),
                    num(p.crps),
                    num(p.squared_error)
                )?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

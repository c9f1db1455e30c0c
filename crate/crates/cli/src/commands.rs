use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use demu_core::classifiers::{ClassifierKind, OracleClassifier};
use demu_core::design::{maximin_lhd, Design, DEFAULT_CANDIDATES};
use demu_core::double_emulator::{fit_double, DoubleOptions, DEFAULT_GAMMA};
use demu_core::experiment::{emit_report, run_experiment, summarize, ExperimentConfig};
use demu_core::gpe::{fit_gp_with, GpOptions};
use demu_core::ingest::{extract_qoi, load_ensemble_files, read_dataset, write_dataset, INPUTS_FILE, TRACES_FILE};
use demu_core::scoring::{crps_exact, rmse};
use demu_core::{BasisSpec, KernelFamily, Method, PredictiveMixture, SimulatorSpec};

use crate::saved::SavedModel;
use crate::Common;

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Number of points.
    #[arg(long)]
    pub n: usize,
    /// Input dimension.
    #[arg(long)]
    pub d: usize,
    /// Random LHDs to choose the maximin design from.
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    pub candidates: usize,
}

pub fn design(a: &DesignArgs, c: &Common) -> Result<()> {
    let d = maximin_lhd(a.n, a.d, a.candidates, c.seed.unwrap_or(0))?;
    let path = c.out_dir()?.join("design.csv");
    d.write_csv(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn read_simulator(path: &Path) -> Result<SimulatorSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing simulator spec {}", path.display()))
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Design CSV with columns x1..xd.
    #[arg(long)]
    pub design: PathBuf,
}

pub fn simulate(a: &SimulateArgs, c: &Common) -> Result<()> {
    let sim = read_simulator(c.require_config()?)?;
    let design = Design::read_csv(&a.design)?;
    if design.dim() != sim.dim() {
        bail!("design has {} columns but the simulator takes {} inputs", design.dim(), sim.dim());
    }
    let y = design
        .rows()
        .iter()
        .map(|x| sim.eval(x))
        .collect::<demu_core::Result<Vec<_>>>()?;
    let path = c.out_dir()?.join("dataset.csv");
    write_dataset(&path, &design.points, &y)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelChoice {
    Gpe,
    Double,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Training data with header x1..xd,y.
    #[arg(long)]
    pub data: PathBuf,
    /// Grounding value; taken from the --config simulator when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModelChoice::Double)]
    pub model: ModelChoice,
    /// rf, svm or oracle (oracle needs the simulator in --config).
    #[arg(long, default_value = "rf")]
    pub classifier: String,
    #[arg(long, default_value = "matern52")]
    pub kernel: String,
    #[arg(long, default_value = "reml")]
    pub method: String,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
}

pub fn fit(a: &FitArgs, c: &Common) -> Result<()> {
    let (x, y) = read_dataset(&a.data)?;
    let sim = c.config.as_deref().map(read_simulator).transpose()?;
    let g = match (a.g, &sim) {
        (Some(g), _) => g,
        (None, Some(s)) => s.grounding_value(),
        (None, None) => bail!("--g is required unless --config names the simulator"),
    };
    let seed = c.seed.unwrap_or(0);
    let mut opts = DoubleOptions::new(g);
    opts.gamma = a.gamma;
    opts.family = a.kernel.parse::<KernelFamily>()?;
    opts.method = a.method.parse::<Method>()?;
    opts.basis = BasisSpec::ConstantLinear;
    opts.gp = GpOptions {
        seed,
        ..GpOptions::default()
    };
    let model = match a.model {
        ModelChoice::Gpe => {
            let ylog = y
                .iter()
                .map(|&v| {
                    if v < g {
                        bail!("observation {v} lies below the grounding value {g}");
                    }
                    Ok((v - g + a.gamma).ln())
                })
                .collect::<Result<Vec<_>>>()?;
            let gp = fit_gp_with(&x, &ylog, opts.basis, opts.family, opts.method, &opts.gp)?;
            SavedModel::Gpe { gp, g, gamma: a.gamma }
        }
        ModelChoice::Double => {
            let kind = a.classifier.parse::<ClassifierKind>()?;
            let oracle = match (kind, sim) {
                (ClassifierKind::Oracle, Some(s)) => Some(OracleClassifier::from_simulator(s, g)),
                (ClassifierKind::Oracle, None) => bail!("the oracle classifier needs --config <simulator.toml>"),
                _ => None,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            SavedModel::Double(fit_double(&x, &y, kind, &opts, oracle, &mut rng)?)
        }
    };
    let path = c.out_dir()?.join("model.json");
    std::fs::write(&path, serde_json::to_string_pretty(&model)?)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Saved model from `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// Inputs (x1..xd), optionally with a trailing y column to score against.
    #[arg(long)]
    pub data: PathBuf,
}

fn has_y_column(path: &Path) -> Result<bool> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.headers()?.iter().next_back() == Some("y"))
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn predict(a: &PredictArgs, c: &Common) -> Result<()> {
    let text = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model: SavedModel = serde_json::from_str(&text).context("parsing model file")?;
    let (x, y) = if has_y_column(&a.data)? {
        let (x, y) = read_dataset(&a.data)?;
        (x, Some(y))
    } else {
        (Design::read_csv(&a.data)?.points, None)
    };
    if x.ncols() != model.dim() {
        bail!("data has {} inputs but the model expects {}", x.ncols(), model.dim());
    }
    let path = c.out_dir()?.join("predictions.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.extend(["p", "m", "v", "g", "gamma", "mean", "var"].map(String::from));
    if y.is_some() {
        header.extend(["y", "crps"].map(String::from));
    }
    writeln!(w, "{}", header.join(","))?;
    let mut crps_sum = 0.0;
    let mut means = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let xi: Vec<f64> = x.row(i).iter().copied().collect();
        let pm = model.predict(&xi)?;
        let mut row: Vec<String> = xi.iter().map(|v| fmt(*v)).collect();
        row.extend([pm.p, pm.m, pm.v, pm.g, pm.gamma, pm.mean(), pm.var()].map(fmt));
        if let Some(y) = &y {
            let s = crps_exact(&pm, y[i])?;
            crps_sum += s;
            row.extend([y[i], s].map(fmt));
        }
        means.push(pm.mean());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    println!("{}", path.display());
    if let Some(y) = &y {
        println!(
            "mean_crps={} rmse={}",
            crps_sum / y.len() as f64,
            rmse(&means, y)?
        );
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// CSV with columns `mean` and `y`, plus `p,m,v,g,gamma` for CRPS and an
    /// optional `model` column to score several models at once.
    #[arg(long)]
    pub predictions: PathBuf,
}

struct Group {
    name: String,
    means: Vec<f64>,
    obs: Vec<f64>,
    crps: Vec<f64>,
}

pub fn score(a: &ScoreArgs, c: &Common) -> Result<()> {
    let mut rdr = csv::Reader::from_path(&a.predictions)
        .with_context(|| format!("reading {}", a.predictions.display()))?;
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(c_mean), Some(c_y)) = (col("mean"), col("y")) else {
        bail!("{} needs columns `mean` and `y`", a.predictions.display());
    };
    let c_model = col("model");
    let mix_cols: Option<Vec<usize>> = ["p", "m", "v", "g", "gamma"].iter().map(|n| col(n)).collect();
    let mut groups: Vec<Group> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}: `{}` is not a number", line + 2, &rec[j]))
        };
        let name = c_model.map_or("all", |j| &rec[j]).to_owned();
        let gi = match groups.iter().position(|g| g.name == name) {
            Some(i) => i,
            None => {
                groups.push(Group {
                    name,
                    means: Vec::new(),
                    obs: Vec::new(),
                    crps: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let (mean, y) = (num(c_mean)?, num(c_y)?);
        if let Some(mc) = &mix_cols {
            let pm = PredictiveMixture::new(num(mc[0])?, num(mc[1])?, num(mc[2])?, num(mc[3])?, num(mc[4])?)?;
            groups[gi].crps.push(crps_exact(&pm, y)?);
        }
        groups[gi].means.push(mean);
        groups[gi].obs.push(y);
    }
    if groups.is_empty() {
        bail!("{} has no rows", a.predictions.display());
    }
    let path = c.out_dir()?.join("score.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(w, "model,n,mean_crps,rmse")?;
    for g in &groups {
        let crps = if g.crps.is_empty() {
            String::new()
        } else {
            fmt(g.crps.iter().sum::<f64>() / g.crps.len() as f64)
        };
        let r = rmse(&g.means, &g.obs)?;
        writeln!(w, "{},{},{},{}", g.name, g.obs.len(), crps, fmt(r))?;
        println!("{}: n={} mean_crps={} rmse={}", g.name, g.obs.len(), crps, r);
    }
    w.flush()?;
    Ok(())
}

pub fn experiment(c: &Common) -> Result<()> {
    let path = c.require_config()?;
    let mut cfg = ExperimentConfig::from_path(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    let table = run_experiment(&cfg)?;
    let out = c.out_dir()?;
    emit_report(&table, &out)?;
    for s in summarize(&table) {
        let med = s.mean_crps.map_or("NA".to_string(), |m| format!("{:.6}", m.median));
        println!("{:<8} ok={:<3} failed={:<3} median_mean_crps={med}", s.model, s.n_ok, s.n_failed);
    }
    println!("report written to {}", out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Directory holding inputs.csv and traces.csv.
    #[arg(long, conflicts_with_all = ["inputs", "traces"])]
    pub dir: Option<PathBuf>,
    #[arg(long, requires = "traces")]
    pub inputs: Option<PathBuf>,
    #[arg(long, requires = "inputs")]
    pub traces: Option<PathBuf>,
    /// Output time at which each trace is read off.
    #[arg(long)]
    pub t_star: f64,
    /// Grounding value; outputs within sqrt(machine epsilon) of it are set to it.
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
}

pub fn ingest(a: &IngestArgs, c: &Common) -> Result<()> {
    let (inputs, traces) = match (&a.dir, &a.inputs, &a.traces) {
        (Some(d), _, _) => (d.join(INPUTS_FILE), d.join(TRACES_FILE)),
        (None, Some(i), Some(t)) => (i.clone(), t.clone()),
        _ => bail!("give either --dir or both --inputs and --traces"),
    };
    let ens = load_ensemble_files(&inputs, &traces)?;
    let (x, y) = extract_qoi(&ens, a.t_star, a.g)?;
    let path = c.out_dir()?.join("dataset.csv");
    write_dataset(&path, &x, &y)?;
    println!("{} ({} of {} runs)", path.display(), y.len(), ens.n());
    Ok(())
}

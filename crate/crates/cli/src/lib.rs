//! Command-line front end: synth, extract, train, predict, eval, report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use lfiqa::lfio::{load_lightfield, load_manifest, ManifestEntry};
use lfiqa::pipeline::{extract, ExtractConfig, Extraction};
use lfiqa::regress::table::{
    select_columns, write_orientation_csv, ChannelTag, FeatureGroup, FeatureRow, OrientationRow,
};
use lfiqa::regress::{
    cross_validate, logistic_fit, metrics, out_of_fold, svr_predict_batch, svr_train, CvConfig,
    FeatureTable, QualityModel, Sidecar, SplitMode, SvrGrid,
};
use lfiqa::synth::{write_dataset, DatasetPlan, DistortionKind, SynthSpec, MAX_SEVERITY};
use lfiqa::viewstack::{Orientation, DEFAULT_MIN_LEN};

/// Bad flags or missing inputs; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Whether every entry was processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Partial => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lfiqa",
    version,
    about = "No-reference light-field image quality assessment"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic distorted dataset with a manifest.
    Synth(SynthArgs),
    /// Extract 59-dimensional features for every manifest entry.
    Extract(ExtractArgs),
    /// Train a quality model on a feature table.
    Train(TrainArgs),
    /// Score a feature table with a trained model.
    Predict(PredictArgs),
    /// Repeated train/test evaluation on a labelled feature table.
    Eval(EvalArgs),
    /// Out-of-fold predictions against labels, for scatter plots.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Scene,
    Item,
}

impl From<SplitArg> for SplitMode {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Scene => SplitMode::Scene,
            SplitArg::Item => SplitMode::Item,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives one folder per item and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub scenes: usize,
    /// Distortion kinds (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub kinds: Vec<DistortionKind>,
    /// Severity levels to generate, 1..5.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub severities: Vec<u8>,
    /// Also write each undistorted scene.
    #[arg(long)]
    pub pristine: bool,
    /// Angular grid, SxT.
    #[arg(long, default_value = "9x9", value_parser = parse_dims)]
    pub angular: (usize, usize),
    /// View size, XxY.
    #[arg(long, default_value = "64x64", value_parser = parse_dims)]
    pub spatial: (usize, usize),
    /// Pixel shift between adjacent views.
    #[arg(long, default_value_t = 1.0)]
    pub disparity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pooled feature CSV. The per-orientation CSV and the column sidecar
    /// are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Orientation weights for 0°, 45°, 90° and 135°.
    #[arg(long, value_parser = parse_weights, default_value = "0.25,0.25,0.25,0.25")]
    pub weights: [f64; 4],
    #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
    pub min_stack_len: usize,
}

#[derive(Debug, Args, Clone)]
pub struct Selection {
    /// Colour channels to keep.
    #[arg(long, value_delimiter = ',', value_parser = parse_channel)]
    pub channels: Vec<ChannelTag>,
    /// Feature groups to keep.
    #[arg(long, value_delimiter = ',', value_parser = parse_group)]
    pub features: Vec<FeatureGroup>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labelled feature CSV from `extract`.
    #[arg(long)]
    pub table: PathBuf,
    /// Model file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    /// Scores CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Summary JSON. The per-iteration log goes to `<stem>.iterations.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, value_enum, default_value_t = SplitArg::Scene)]
    pub split: SplitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub selection: Selection,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Scatter CSV: id, scene, label, prediction, mapped prediction.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = SplitArg::Scene)]
    pub split: SplitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub selection: Selection,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AxB, got {s:?}"))?;
    let p = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("not a size: {v:?}"))
    };
    Ok((p(a)?, p(b)?))
}

fn parse_weights(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected four comma-separated weights, got {}",
            parts.len()
        ));
    }
    let mut w = [0.0; 4];
    for (slot, p) in w.iter_mut().zip(parts) {
        let v: f64 = p
            .trim()
            .parse()
            .map_err(|_| format!("not a number: {p:?}"))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("weights must be non-negative, got {v}"));
        }
        *slot = v;
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err("at least one weight must be positive".into());
    }
    Ok(w)
}

fn parse_channel(s: &str) -> Result<ChannelTag, String> {
    s.parse().map_err(|e: lfiqa::Error| e.to_string())
}

fn parse_group(s: &str) -> Result<FeatureGroup, String> {
    s.parse().map_err(|e: lfiqa::Error| e.to_string())
}

fn require_file(path: &Path) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(usage(format!("input file not found: {}", path.display())));
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// `features.csv` → `features.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn sidecar_path(table: &Path) -> PathBuf {
    sibling(table, "sidecar.json")
}

pub fn orientation_path(table: &Path) -> PathBuf {
    sibling(table, "orient.csv")
}

pub fn iterations_path(summary: &Path) -> PathBuf {
    sibling(summary, "iterations.csv")
}

/// Runs a parsed command line inside a pool of the requested size.
pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building thread pool")?;
    pool.install(|| match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Report(a) => cmd_report(&a),
    })
}

pub fn cmd_synth(a: &SynthArgs) -> anyhow::Result<Outcome> {
    if let Some(&s) = a
        .severities
        .iter()
        .find(|s| !(1..=MAX_SEVERITY).contains(*s))
    {
        return Err(usage(format!("severity {s} outside 1..{MAX_SEVERITY}")));
    }
    let base = SynthSpec {
        seed: a.seed,
        angular: a.angular,
        spatial: a.spatial,
        disparity: a.disparity,
        ..SynthSpec::default()
    };
    base.validate().map_err(|e| usage(e.to_string()))?;
    let plan = DatasetPlan {
        scenes: a.scenes,
        kinds: if a.kinds.is_empty() {
            DistortionKind::ALL.to_vec()
        } else {
            a.kinds.clone()
        },
        severities: a.severities.clone(),
        include_pristine: a.pristine,
        base,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let (path, manifest) = write_dataset(&plan, &a.out)?;
    log::info!(
        "wrote {} items and {}",
        manifest.entries.len(),
        path.display()
    );
    Ok(Outcome::Success)
}

fn extract_entry(entry: &ManifestEntry, cfg: &ExtractConfig) -> lfiqa::Result<Extraction> {
    let t = Instant::now();
    let lf = load_lightfield(entry, None)?;
    let e = extract(&lf, cfg)?;
    log::info!("{}: {:.2}s", entry.id, t.elapsed().as_secs_f64());
    Ok(e)
}

pub fn cmd_extract(a: &ExtractArgs) -> anyhow::Result<Outcome> {
    require_file(&a.manifest)?;
    if a.min_stack_len < lfiqa::pipeline::MIN_STACK_LEN {
        return Err(usage(format!(
            "--min-stack-len must be at least {}",
            lfiqa::pipeline::MIN_STACK_LEN
        )));
    }
    let manifest = load_manifest(&a.manifest)?;
    let cfg = ExtractConfig {
        min_stack_len: a.min_stack_len,
        weights: a.weights,
    };
    log::info!("extracting {} entries", manifest.entries.len());
    let results: Vec<lfiqa::Result<Extraction>> = manifest
        .entries
        .par_iter()
        .map(|e| extract_entry(e, &cfg))
        .collect();

    let columns = lfiqa::regress::feature_columns();
    let codes: Vec<String> = columns.iter().map(|c| c.column.clone()).collect();
    let mut table = FeatureTable {
        columns: codes.clone(),
        rows: Vec::new(),
    };
    let mut orient_rows = Vec::new();
    let mut failed = 0;
    for (entry, res) in manifest.entries.iter().zip(results) {
        match res {
            Ok(x) => {
                table.rows.push(FeatureRow {
                    id: entry.id.clone(),
                    scene: entry.scene.clone(),
                    label: entry.label,
                    values: x.pooled.f_final,
                });
                for o in Orientation::ALL {
                    orient_rows.push(OrientationRow {
                        id: entry.id.clone(),
                        scene: entry.scene.clone(),
                        label: entry.label,
                        orientation: o,
                        stacks: x.orientations.stack_counts[o.index()],
                        values: x.orientations.vectors[o.index()].clone(),
                    });
                }
            }
            Err(e) => {
                failed += 1;
                log::error!("entry {:?} skipped: {e}", entry.id);
            }
        }
    }
    ensure_parent(&a.out)?;
    table.write_csv(&a.out)?;
    let orient = orientation_path(&a.out);
    write_orientation_csv(&orient, &codes, &orient_rows)?;
    Sidecar {
        version: lfiqa::regress::table::SIDECAR_VERSION,
        weights: a.weights,
        min_stack_len: a.min_stack_len,
        orientation_file: orient.file_name().map(|n| n.to_string_lossy().into_owned()),
        columns,
    }
    .write(&sidecar_path(&a.out))?;
    log::info!("wrote {} rows to {}", table.rows.len(), a.out.display());
    if failed > 0 {
        log::error!("{failed} of {} entries failed", manifest.entries.len());
        return Ok(Outcome::Partial);
    }
    Ok(Outcome::Success)
}

/// Loads a feature table and applies a channel/group selection using the
/// sidecar's column metadata, or the standard layout when there is none.
pub fn load_table(path: &Path, sel: &Selection) -> anyhow::Result<FeatureTable> {
    require_file(path)?;
    let table = FeatureTable::read_csv(path)?;
    if sel.channels.is_empty() && sel.features.is_empty() {
        return Ok(table);
    }
    let sc = sidecar_path(path);
    let columns = if sc.is_file() {
        Sidecar::read(&sc)?.columns
    } else {
        lfiqa::regress::feature_columns()
    };
    let channels = if sel.channels.is_empty() {
        ChannelTag::LAB.to_vec()
    } else {
        sel.channels.clone()
    };
    let groups = if sel.features.is_empty() {
        vec![FeatureGroup::Pcsc, FeatureGroup::Tavi]
    } else {
        sel.features.clone()
    };
    let keep = select_columns(&columns, &channels, &groups);
    if keep.is_empty() {
        return Err(usage("the channel/feature selection keeps no columns"));
    }
    log::info!(
        "using {} of {} feature columns",
        keep.len(),
        table.columns.len()
    );
    Ok(table.select(&keep)?)
}

pub fn cmd_train(a: &TrainArgs) -> anyhow::Result<Outcome> {
    let table = load_table(&a.table, &a.selection)?;
    let ds = table.to_dataset()?;
    let mut model = svr_train(&ds.features, &ds.labels, &SvrGrid::default(), a.seed)?;
    model.feature_names = table.columns.clone();
    let fitted = svr_predict_batch(&model, &ds.features)?;
    model.logistic = match logistic_fit(&fitted, &ds.labels) {
        Ok(p) => Some(p),
        Err(e) => {
            log::warn!("no score mapping fitted: {e}");
            None
        }
    };
    log::info!("trained on {} rows: C={} g={}", ds.len(), model.c, model.g);
    ensure_parent(&a.out)?;
    fs::write(&a.out, model.to_json()? + "\n")
        .with_context(|| format!("writing {}", a.out.display()))?;
    Ok(Outcome::Success)
}

/// Restricts `table` to the model's feature columns, in model order.
pub fn model_view(model: &QualityModel, table: &FeatureTable) -> anyhow::Result<Vec<Vec<f64>>> {
    let idx: Option<Vec<usize>> = model
        .feature_names
        .iter()
        .map(|n| table.columns.iter().position(|c| c == n))
        .collect();
    let idx = match idx {
        Some(i) if !model.feature_names.is_empty() => i,
        _ if model.feature_names.is_empty() && table.columns.len() == model.dim() => {
            (0..model.dim()).collect()
        }
        _ => bail!(
            "feature count mismatch: model expects {} features, table has {} feature columns",
            model.dim(),
            table.columns.len()
        ),
    };
    Ok(table
        .rows
        .iter()
        .map(|r| idx.iter().map(|&k| r.values[k]).collect())
        .collect())
}

#[derive(Serialize)]
struct ScoreRecord<'a> {
    id: &'a str,
    scene: &'a str,
    label: Option<f64>,
    score: f64,
    mapped: Option<f64>,
}

pub fn cmd_predict(a: &PredictArgs) -> anyhow::Result<Outcome> {
    require_file(&a.model)?;
    let text =
        fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model = QualityModel::from_json(&text)?;
    let table = load_table(
        &a.table,
        &Selection {
            channels: vec![],
            features: vec![],
        },
    )?;
    let rows = model_view(&model, &table)?;
    let scores = svr_predict_batch(&model, &rows)?;
    ensure_parent(&a.out)?;
    let mut w =
        csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    for (r, &s) in table.rows.iter().zip(&scores) {
        w.serialize(ScoreRecord {
            id: &r.id,
            scene: &r.scene,
            label: r.label,
            score: s,
            mapped: model.logistic.as_ref().map(|p| p.eval(s)),
        })?;
    }
    w.flush()?;
    log::info!("scored {} rows", scores.len());
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub srcc: f64,
    pub lcc: f64,
    pub rmse: f64,
    pub or_ratio: f64,
    pub iterations: usize,
    pub split: SplitMode,
    pub seed: u64,
    pub items: usize,
    pub features: usize,
}

pub fn cmd_eval(a: &EvalArgs) -> anyhow::Result<Outcome> {
    if a.iterations == 0 {
        return Err(usage("--iterations must be positive"));
    }
    let table = load_table(&a.table, &a.selection)?;
    let ds = table.to_dataset()?;
    let cfg = CvConfig {
        iterations: a.iterations,
        split: a.split.into(),
        seed: a.seed,
        ..CvConfig::default()
    };
    let t = Instant::now();
    let summary = cross_validate(&ds, &cfg)?;
    log::info!(
        "{} iterations in {:.1}s: SRCC {:.4} LCC {:.4} RMSE {:.4}",
        a.iterations,
        t.elapsed().as_secs_f64(),
        summary.srcc,
        summary.lcc,
        summary.rmse
    );
    let report = EvalReport {
        srcc: summary.srcc,
        lcc: summary.lcc,
        rmse: summary.rmse,
        or_ratio: summary.or_ratio,
        iterations: a.iterations,
        split: cfg.split,
        seed: a.seed,
        items: ds.len(),
        features: table.columns.len(),
    };
    ensure_parent(&a.out)?;
    fs::write(&a.out, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", a.out.display()))?;
    let mut w = csv::Writer::from_path(iterations_path(&a.out))?;
    for r in &summary.iterations {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct ScatterRecord<'a> {
    id: &'a str,
    scene: &'a str,
    label: f64,
    prediction: f64,
    mapped: f64,
}

pub fn cmd_report(a: &ReportArgs) -> anyhow::Result<Outcome> {
    let table = load_table(&a.table, &a.selection)?;
    let ds = table.to_dataset()?;
    let pred = out_of_fold(&ds, a.folds, a.split.into(), a.seed, &SvrGrid::default())?;
    let fit = logistic_fit(&pred, &ds.labels).map_err(|e| anyhow!("score mapping failed: {e}"))?;
    let m = metrics(&pred, &ds.labels, Some(&fit))?;
    log::info!(
        "out-of-fold SRCC {:.4} LCC {:.4} RMSE {:.4}",
        m.srcc,
        m.lcc,
        m.rmse
    );
    ensure_parent(&a.out)?;
    let mut w =
        csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    for (i, &p) in pred.iter().enumerate() {
        w.serialize(ScatterRecord {
            id: &ds.ids[i],
            scene: &ds.scenes[i],
            label: ds.labels[i],
            prediction: p,
            mapped: fit.eval(p),
        })?;
    }
    w.flush()?;
    Ok(Outcome::Success)
}

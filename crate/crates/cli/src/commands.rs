//! Subcommand arguments, resolved run configurations and their execution.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use editpath::augment::{augment_dataset, AugmentationConfig, OrderKind};
use editpath::assignment::NodeOp;
use editpath::eval::{knn_classify, lollipop_cost_analysis, sinkhorn_gap_curve, EvalReport, PairKind};
use editpath::json::{augmented_to_string, dataset_to_string, graph_to_value, read_dataset_json};
use editpath::learner::{train_cost, Checkpoint, TrainConfig};
use editpath::lollipop::{gen_lollipop_dataset, LollipopSpec};
use editpath::path::{build_edit_path, OrderPolicy};
use editpath::tudataset::parse_tudataset;
use editpath::{CostModel, Error, LabeledDataset};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{echo, echo_path_for_file, resolve, usage, warn_off_grid, IntList};

type ConfigFile<'a> = Option<&'a Map<String, Value>>;

const SPLIT_RATIOS: [f64; 3] = [0.7, 0.1, 0.2];

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_owned()).into());
    }
    read_dataset_json(path).with_context(|| format!("reading dataset {}", path.display()))
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `unit`, `featdist` or `learned:CHECKPOINT`.
fn load_model(spec: &str, feature_dim: usize) -> Result<CostModel> {
    match spec {
        "unit" => Ok(CostModel::Unit),
        "featdist" => Ok(CostModel::FeatureDistance),
        _ => {
            let Some(path) = spec.strip_prefix("learned:") else {
                return Err(usage(format!("model `{spec}` is not one of unit, featdist, learned:CHECKPOINT")));
            };
            let path = Path::new(path);
            if !path.exists() {
                return Err(Error::MissingFile(path.to_owned()).into());
            }
            let checkpoint = Checkpoint::<f64>::load(path).with_context(|| format!("loading {}", path.display()))?;
            if checkpoint.params.input_dim() != feature_dim {
                return Err(Error::DimensionMismatch(format!(
                    "checkpoint expects {}-dimensional node features, dataset has {feature_dim}",
                    checkpoint.params.input_dim()
                ))
                .into());
            }
            Ok(CostModel::learned(checkpoint.params))
        }
    }
}

// ---------------------------------------------------------------- ingest

#[derive(Args, Serialize)]
pub struct IngestArgs {
    /// Directory holding `<NAME>_A.txt` and the companion files.
    #[arg(long)]
    tudataset: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct IngestRun {
    tudataset: PathBuf,
    name: String,
    out: PathBuf,
    #[serde(default)]
    seed: u64,
}

pub fn ingest(file: ConfigFile, args: IngestArgs) -> Result<()> {
    let run: IngestRun = resolve(file, &args)?;
    echo(&echo_path_for_file(&run.out), "ingest", &run)?;
    let ds: LabeledDataset = parse_tudataset(&run.tudataset, &run.name)?;
    let ds = ds.stratified_split(SPLIT_RATIOS, run.seed)?;
    write_text(&run.out, &dataset_to_string(&ds))?;
    let split = ds.split().expect("split was just assigned");
    println!(
        "{}: {} graphs, {} classes, split {}/{}/{}",
        ds.name(),
        ds.len(),
        ds.class_count(),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    Ok(())
}

// ---------------------------------------------------------------- gen-lollipop

#[derive(Args, Serialize)]
pub struct GenLollipopArgs {
    /// Head sizes, as `3,4,5,6` or `3..6`.
    #[arg(long)]
    heads: Option<IntList>,
    /// Tail lengths, as `2,4` or `2..8`.
    #[arg(long)]
    tails: Option<IntList>,
    /// Graphs per (head, tail) combination.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_heads() -> IntList {
    IntList(vec![3, 4, 5, 6])
}

fn default_tails() -> IntList {
    IntList((2..=8).collect())
}

fn one() -> usize {
    1
}

#[derive(Serialize, Deserialize)]
struct GenLollipopRun {
    #[serde(default = "default_heads")]
    heads: IntList,
    #[serde(default = "default_tails")]
    tails: IntList,
    #[serde(default = "one")]
    count: usize,
    #[serde(default)]
    seed: u64,
    out: PathBuf,
}

pub fn gen_lollipop(file: ConfigFile, args: GenLollipopArgs) -> Result<()> {
    let run: GenLollipopRun = resolve(file, &args)?;
    echo(&echo_path_for_file(&run.out), "gen-lollipop", &run)?;
    let spec = LollipopSpec {
        head_sizes: run.heads.0.clone(),
        tail_lengths: run.tails.0.clone(),
        count_per_combination: run.count,
        seed: run.seed,
    };
    spec.validate()?;
    let ds: LabeledDataset = gen_lollipop_dataset(&spec)?;
    if ds.class_count() < 2 {
        log::warn!("dataset has a single class; it cannot be used to form training triplets");
    }
    let ds = ds.stratified_split(SPLIT_RATIOS, run.seed)?;
    write_text(&run.out, &dataset_to_string(&ds))?;
    println!("{} graphs, {} classes", ds.len(), ds.class_count());
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Args, Serialize)]
pub struct TrainArgs {
    /// Dataset JSON with a split.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long = "lr")]
    #[serde(rename = "learning_rate")]
    learning_rate: Option<f64>,
    /// Message-passing layers.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Sinkhorn temperature.
    #[arg(long)]
    delta: Option<f64>,
    /// Triplet margin.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Sinkhorn iterations.
    #[arg(long)]
    sinkhorn_k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for checkpoint.json, history.csv and config.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct TrainRun {
    data: PathBuf,
    out: PathBuf,
    #[serde(flatten)]
    train: TrainConfig,
}

pub fn train(file: ConfigFile, args: TrainArgs) -> Result<()> {
    let run: TrainRun = resolve(file, &args)?;
    echo(&run.out.join("config.json"), "train", &run)?;
    let config = &run.train;
    config.validate()?;
    warn_off_grid("learning rate", config.learning_rate, &[0.01, 0.001]);
    warn_off_grid("layers", config.layers as f64, &[2.0, 5.0]);
    warn_off_grid("delta", config.delta, &[0.3, 0.1, 0.01]);
    let ds = load_dataset(&run.data)?;
    if ds.split().is_none() {
        return Err(usage(format!("{} has no train/val/test split", run.data.display())));
    }
    let outcome = train_cost(&ds, config)?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["epoch", "learning_rate", "train_loss", "val_loss"])?;
    for r in outcome.history.records() {
        csv.write_record([
            r.epoch.to_string(),
            r.learning_rate.to_string(),
            r.train_loss.to_string(),
            r.val_loss.to_string(),
        ])?;
    }
    write_text(&run.out.join("history.csv"), &String::from_utf8(csv.into_inner()?)?)?;

    let checkpoint = Checkpoint {
        config: config.clone(),
        params: outcome.best_params,
        epoch: outcome.best_epoch,
        val_loss: outcome.best_val_loss,
    };
    checkpoint.save(&run.out.join("checkpoint.json"))?;
    println!("best epoch {} with validation loss {}", outcome.best_epoch, outcome.best_val_loss);
    Ok(())
}

// ---------------------------------------------------------------- ged

#[derive(Args, Serialize)]
pub struct GedArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// unit, featdist or learned:CHECKPOINT.
    #[arg(long)]
    model: Option<String>,
    /// Source and target graph indices.
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pair: Option<Vec<usize>>,
    /// Print the edit path in the given order: random:SEED or bfs.
    #[arg(long)]
    path: Option<String>,
    /// Write every intermediate graph of the path to this directory.
    #[arg(long)]
    emit_states: Option<PathBuf>,
}

fn default_model() -> String {
    "unit".into()
}

#[derive(Serialize, Deserialize)]
struct GedRun {
    data: PathBuf,
    #[serde(default = "default_model")]
    model: String,
    pair: [usize; 2],
    path: Option<String>,
    emit_states: Option<PathBuf>,
}

fn parse_order(spec: &str) -> Result<OrderPolicy> {
    if spec == "bfs" {
        return Ok(OrderPolicy::Bfs);
    }
    spec.strip_prefix("random:")
        .and_then(|seed| seed.parse().ok())
        .map(OrderPolicy::Random)
        .ok_or_else(|| usage(format!("path order `{spec}` is not bfs or random:SEED")))
}

fn describe(op: NodeOp) -> String {
    match op {
        NodeOp::Substitute(u, v) => format!("substitute {u} -> {v}"),
        NodeOp::Delete(u) => format!("delete {u}"),
        NodeOp::Insert(v) => format!("insert {v}"),
    }
}

pub fn ged(file: ConfigFile, args: GedArgs) -> Result<()> {
    let run: GedRun = resolve(file, &args)?;
    if let Some(dir) = &run.emit_states {
        echo(&dir.join("config.json"), "ged", &run)?;
    }
    let ds = load_dataset(&run.data)?;
    let model = load_model(&run.model, ds.feature_dim())?;
    let [i, j] = run.pair;
    for index in [i, j] {
        if index >= ds.len() {
            return Err(usage(format!("graph index {index} out of range for {} graphs", ds.len())));
        }
    }
    let order = match &run.path {
        Some(spec) => parse_order(spec)?,
        None if run.emit_states.is_some() => OrderPolicy::Bfs,
        None => {
            let (value, _) = editpath::ged::ged_hard(ds.graph(i), ds.graph(j), &model)?;
            return emit(&format!("{value}\n"));
        }
    };
    let path = build_edit_path(ds.graph(i), ds.graph(j), &model, order, run.emit_states.is_some())?;
    let mut text = format!("{}\n", path.total_cost);
    if run.path.is_some() {
        for (step, (op, prefix)) in path.operations.iter().zip(&path.prefix_costs).enumerate() {
            writeln!(text, "{}\t{}\t{}\t{}", step + 1, describe(op.op), op.cost, prefix)?;
        }
    }
    emit(&text)?;
    if let Some(dir) = &run.emit_states {
        fs::create_dir_all(dir)?;
        let width = path.len().to_string().len();
        for m in 0..=path.len() {
            let state = graph_to_value(&path.state(m)?);
            write_text(&dir.join(format!("state_{m:0width$}.json")), &serde_json::to_string(&state)?)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- augment

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Random,
    Bfs,
}

#[derive(Args, Serialize)]
pub struct AugmentArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Cost model for the edit paths: unit, featdist or learned:CHECKPOINT.
    #[arg(long)]
    model: Option<String>,
    /// Augmented samples per training graph.
    #[arg(long)]
    aug_ratio: Option<f64>,
    /// Largest fraction of the path cost an augmented graph may have spent.
    #[arg(long)]
    max_aug_distance: Option<f64>,
    #[arg(long, value_enum)]
    order: Option<Order>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_ratio() -> f64 {
    0.5
}

fn default_distance() -> f64 {
    0.3
}

fn default_order() -> Order {
    Order::Random
}

#[derive(Serialize, Deserialize)]
struct AugmentRun {
    data: PathBuf,
    #[serde(default = "default_model")]
    model: String,
    #[serde(default = "default_ratio")]
    aug_ratio: f64,
    #[serde(default = "default_distance")]
    max_aug_distance: f64,
    #[serde(default = "default_order")]
    order: Order,
    #[serde(default)]
    seed: u64,
    out: PathBuf,
}

pub fn augment(file: ConfigFile, args: AugmentArgs) -> Result<()> {
    let run: AugmentRun = resolve(file, &args)?;
    echo(&echo_path_for_file(&run.out), "augment", &run)?;
    let config = AugmentationConfig {
        aug_ratio: run.aug_ratio,
        max_aug_distance: run.max_aug_distance,
        order: match run.order {
            Order::Random => OrderKind::Random,
            Order::Bfs => OrderKind::Bfs,
        },
        seed: run.seed,
    };
    config.validate()?;
    warn_off_grid("aug ratio", run.aug_ratio, &[0.3, 0.5, 0.7]);
    warn_off_grid("max aug distance", run.max_aug_distance, &[0.1, 0.3, 0.5]);
    let ds = load_dataset(&run.data)?;
    let model = load_model(&run.model, ds.feature_dim())?;
    let samples = augment_dataset(&ds, ds.train_indices()?, &model, &config)?;
    write_text(&run.out, &augmented_to_string(ds.name(), ds.class_count(), ds.feature_dim(), &samples))?;
    println!("{} augmented graphs", samples.len());
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Knn,
    LollipopCost,
    SinkhornGap,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    All,
    Train,
    Val,
    Test,
}

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Cost model; repeat to compare several (unit, featdist, learned:CHECKPOINT).
    #[arg(long = "model")]
    #[serde(rename = "models")]
    models: Option<Vec<String>>,
    /// Graphs to sample pairs from (lollipop-cost, sinkhorn-gap).
    #[arg(long, value_enum)]
    subset: Option<Subset>,
    #[arg(long, value_enum)]
    pair_kind: Option<Kind>,
    /// Sampled pairs (lollipop-cost, sinkhorn-gap).
    #[arg(long)]
    sample_count: Option<usize>,
    /// Sinkhorn iteration counts, as `1,5,10` or `1..10`.
    #[arg(long)]
    ks: Option<IntList>,
    /// Sinkhorn temperature for sinkhorn-gap.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json, summary.csv, records.csv and config.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_models() -> Vec<String> {
    vec![default_model()]
}

fn default_subset() -> Subset {
    Subset::All
}

fn default_kind() -> Kind {
    Kind::Positive
}

fn default_samples() -> usize {
    200
}

fn default_ks() -> IntList {
    IntList((1..=10).collect())
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Serialize, Deserialize)]
struct EvalRun {
    data: PathBuf,
    mode: Mode,
    #[serde(default = "default_models")]
    models: Vec<String>,
    #[serde(default = "default_subset")]
    subset: Subset,
    #[serde(default = "default_kind")]
    pair_kind: Kind,
    #[serde(default = "default_samples")]
    sample_count: usize,
    #[serde(default = "default_ks")]
    ks: IntList,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    seed: u64,
    out: PathBuf,
}

#[derive(Serialize)]
struct ModelReport<'a> {
    model: &'a str,
    #[serde(flatten)]
    report: EvalReport,
}

fn pool(ds: &LabeledDataset, subset: Subset) -> Result<Vec<usize>> {
    Ok(match subset {
        Subset::All => (0..ds.len()).collect(),
        Subset::Train => ds.train_indices()?.to_vec(),
        Subset::Val => ds.val_indices()?.to_vec(),
        Subset::Test => ds.test_indices()?.to_vec(),
    })
}

fn summary_csv(reports: &[ModelReport<'_>]) -> Result<String> {
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["model", "metric", "name", "mean", "std", "count"])?;
    for r in reports {
        for s in &r.report.aggregates {
            csv.write_record([
                r.model,
                &r.report.metric,
                &s.name,
                &s.mean.to_string(),
                &s.std.to_string(),
                &s.count.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(csv.into_inner()?)?)
}

/// One row per record; value columns come from the first record.
fn records_csv(reports: &[ModelReport<'_>]) -> Result<String> {
    let names: Vec<&str> = reports
        .iter()
        .flat_map(|r| r.report.records.first())
        .next()
        .map(|rec| rec.values.iter().map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["model", "item"].into_iter().chain(names.iter().copied()))?;
    for r in reports {
        for rec in &r.report.records {
            let mut row = vec![r.model.to_owned(), rec.item.clone()];
            row.extend(names.iter().map(|name| {
                rec.values
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| v.to_string())
                    .unwrap_or_default()
            }));
            csv.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(csv.into_inner()?)?)
}

pub fn eval(file: ConfigFile, args: EvalArgs) -> Result<()> {
    let run: EvalRun = resolve(file, &args)?;
    echo(&run.out.join("config.json"), "eval", &run)?;
    if run.models.is_empty() {
        return Err(usage("at least one --model is required"));
    }
    let ds = load_dataset(&run.data)?;
    let mut reports = Vec::with_capacity(run.models.len());
    for spec in &run.models {
        let model = load_model(spec, ds.feature_dim())?;
        let report = match run.mode {
            Mode::Knn => {
                let (accuracy, report) = knn_classify(&ds, ds.test_indices()?, ds.train_indices()?, &model)?;
                println!("accuracy {spec} {accuracy}");
                report
            }
            Mode::LollipopCost => {
                let kind = match run.pair_kind {
                    Kind::Positive => PairKind::Positive,
                    Kind::Negative => PairKind::Negative,
                };
                let pool = pool(&ds, run.subset)?;
                lollipop_cost_analysis(&ds, &pool, &model, kind, run.sample_count, run.seed)?
            }
            Mode::SinkhornGap => {
                let pool = pool(&ds, run.subset)?;
                sinkhorn_gap_curve(&ds, &pool, &model, &run.ks.0, run.delta, run.sample_count, run.seed)?
            }
        };
        if run.mode != Mode::Knn {
            for s in &report.aggregates {
                println!("{spec} {} {}", s.name, s.mean);
            }
        }
        reports.push(ModelReport { model: spec, report });
    }
    let mut doc = serde_json::to_string_pretty(&serde_json::json!({
        "mode": run.mode,
        "reports": reports,
    }))?;
    doc.push('\n');
    write_text(&run.out.join("report.json"), &doc)?;
    write_text(&run.out.join("summary.csv"), &summary_csv(&reports)?)?;
    write_text(&run.out.join("records.csv"), &records_csv(&reports)?)?;
    Ok(())
}

// ---------------------------------------------------------------- corrupt

#[derive(Args, Serialize)]
pub struct CorruptArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Fraction of training labels to change.
    #[arg(long)]
    proportion: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_proportion() -> f64 {
    0.2
}

#[derive(Serialize, Deserialize)]
struct CorruptRun {
    data: PathBuf,
    #[serde(default = "default_proportion")]
    proportion: f64,
    #[serde(default)]
    seed: u64,
    out: PathBuf,
}

pub fn corrupt(file: ConfigFile, args: CorruptArgs) -> Result<()> {
    let run: CorruptRun = resolve(file, &args)?;
    echo(&echo_path_for_file(&run.out), "corrupt", &run)?;
    if run.proportion != 0.0 {
        warn_off_grid("proportion", run.proportion, &[0.2, 0.4, 0.6]);
    }
    let ds = load_dataset(&run.data)?;
    let noisy = ds.corrupt_labels(run.proportion, run.seed)?;
    let changed = (0..ds.len()).filter(|&i| ds.label(i) != noisy.label(i)).count();
    write_text(&run.out, &dataset_to_string(&noisy))?;
    println!("{changed} labels changed");
    Ok(())
}

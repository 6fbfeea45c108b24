//! `fairforest` command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 undefined metric
//! (a sensitive group is empty), 4 internal invariant violation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, NodeKind};
use crate::ingest::{load_csv, resolve_schema, split};
use crate::metrics::{forest_report, MetricsReport};
use crate::relabel::{relabel, RelabelConfig, ScoreRule, Strategy};
use crate::train::{train_forest, Criterion, FeaturesPerSplit, TrainConfig};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "fairforest", version, about = "Random forests with discrimination-bounded leaf flipping")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a forest on the training split of a CSV file.
    Train(TrainArgs),
    /// Flip leaves of a trained forest until its discrimination meets epsilon.
    Flip(FlipArgs),
    /// Report accuracy and discrimination of a forest on a CSV file.
    Eval(EvalArgs),
    /// Run an epsilon/alpha grid over one or more datasets.
    Experiment(ExperimentArgs),
    /// Pretty-print a forest file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Built-in schema (adult, compas, bank) or path to a schema JSON file.
    #[arg(long)]
    pub schema: String,
    /// Fraction of rows held out for evaluation.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Seed for the train/test shuffle (and training, for `train`).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output forest file.
    #[arg(long)]
    pub out: PathBuf,
    /// TrainConfig JSON file; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    /// plain, fair_sub, fair_div or fair_add.
    #[arg(long)]
    pub criterion: Option<String>,
    /// sqrt, all or a count.
    #[arg(long)]
    pub features_per_split: Option<String>,
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Baseline metrics output (default: <out>.metrics.json).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Tf,
    Lf,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Tf => Strategy::TreeBased,
            StrategyArg::Lf => Strategy::LeafBased,
        }
    }
}

#[derive(Debug, Args)]
pub struct FlipArgs {
    #[arg(long)]
    pub forest: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "lf")]
    pub strategy: StrategyArg,
    /// Discrimination bound on the repair (training) split.
    #[arg(long)]
    pub epsilon: f64,
    /// Largest tolerated accuracy drop.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Score leaves with the signed ratio instead of reduction per loss.
    #[arg(long)]
    pub signed_ratio: bool,
    /// Output forest file.
    #[arg(long)]
    pub out: PathBuf,
    /// Iteration report (default: <out>.report.jsonl).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Before/after metrics (default: <out>.metrics.json).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub forest: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub forest: PathBuf,
    /// Print the nodes of this tree.
    #[arg(long)]
    pub tree: Option<usize>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Flip(a) => cmd_flip(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Experiment(a) => crate::experiment::cmd_experiment(&a.spec, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `forest.json` -> `forest.<suffix>`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Loads the CSV and splits it, returning `(train, test)`.
fn load_split(data: &DataArgs, seed: u64, test_fraction: f64) -> Result<(Dataset, Dataset)> {
    let schema = resolve_schema(&data.schema)?;
    let dataset = load_csv(&data.data, &schema)?;
    split(&dataset, test_fraction, seed)
}

fn check_encoding(forest: &Forest, data: &Dataset) -> Result<()> {
    if forest.feature_names() != data.feature_names() {
        return Err(Error::Input(format!(
            "the dataset encodes {} features that do not match the forest's {}",
            data.n_features(),
            forest.n_features()
        )));
    }
    Ok(())
}

/// Split parameters recorded in a forest's metadata by `train`.
fn recorded_split(forest: &Forest) -> (Option<u64>, Option<f64>) {
    let m = forest.metadata();
    (
        m.get("split_seed").and_then(|v| v.as_u64()),
        m.get("test_fraction").and_then(|v| v.as_f64()),
    )
}

pub fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            TrainConfig::from_json(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig {
            seed: DEFAULT_SEED,
            ..TrainConfig::default()
        },
    };
    if let Some(v) = a.trees {
        config.n_trees = v;
    }
    if let Some(v) = a.depth {
        config.max_depth = v;
    }
    if let Some(v) = a.min_samples_leaf {
        config.min_samples_leaf = v;
    }
    if let Some(v) = &a.criterion {
        config.criterion = v.parse::<Criterion>()?;
    }
    if let Some(v) = &a.features_per_split {
        config.features_per_split = v.parse::<FeaturesPerSplit>()?;
    }
    if a.no_bootstrap {
        config.bootstrap = false;
    }
    if let Some(seed) = a.data.seed {
        config.seed = seed;
    }
    let test_fraction = a.data.test_fraction.unwrap_or(DEFAULT_TEST_FRACTION);
    let (train, test) = load_split(&a.data, config.seed, test_fraction)?;
    let forest = train_forest(&train, &config)?;
    let mut metadata = forest.metadata().clone();
    metadata.insert("split_seed".into(), json!(config.seed));
    metadata.insert("test_fraction".into(), json!(test_fraction));
    let forest = forest.with_metadata(metadata);

    let train_report = forest_report(&forest, &train)?;
    let test_report = forest_report(&forest, &test)?;
    write_atomic(&a.out, &forest.to_json())?;
    let metrics_path = a.metrics.unwrap_or_else(|| sibling(&a.out, "metrics.json"));
    write_atomic(
        &metrics_path,
        &to_pretty(&json!({
            "seed": config.seed,
            "test_fraction": test_fraction,
            "train": train_report,
            "test": test_report,
        })),
    )?;
    writeln!(
        out,
        "trained {} trees on {} rows ({} features)\n\
         train: accuracy {:.4} discrimination {:.4}\n\
         test:  accuracy {:.4} discrimination {:.4}\n\
         wrote {} and {}",
        forest.trees().len(),
        train.len(),
        train.n_features(),
        train_report.accuracy,
        train_report.discrimination,
        test_report.accuracy,
        test_report.discrimination,
        a.out.display(),
        metrics_path.display()
    )
    .map_err(stdout_err)
}

#[derive(Serialize)]
struct BeforeAfter {
    before: MetricsReport,
    after: MetricsReport,
}

pub fn cmd_flip(a: FlipArgs, out: &mut dyn Write) -> Result<()> {
    let mut forest = Forest::load(&a.forest)?;
    let (rec_seed, rec_fraction) = recorded_split(&forest);
    let seed = a.data.seed.or(rec_seed).unwrap_or(DEFAULT_SEED);
    let test_fraction = a
        .data
        .test_fraction
        .or(rec_fraction)
        .unwrap_or(DEFAULT_TEST_FRACTION);
    let (repair, eval) = load_split(&a.data, seed, test_fraction)?;
    check_encoding(&forest, &repair)?;
    repair.require_both_groups()?;
    eval.require_both_groups()?;

    forest.annotate_leaf_stats(&repair)?;
    let repair_before = forest_report(&forest, &repair)?;
    let eval_before = forest_report(&forest, &eval)?;
    let config = RelabelConfig {
        epsilon: a.epsilon,
        alpha: a.alpha,
        strategy: a.strategy.into(),
        score_rule: if a.signed_ratio {
            ScoreRule::SignedRatio
        } else {
            ScoreRule::ReductionPerLoss
        },
    };
    let (forest, report) = relabel(forest, &repair, &config)?;
    let repair_after = forest_report(&forest, &repair)?;
    let eval_after = forest_report(&forest, &eval)?;
    if repair_after.discrimination != report.final_discrimination
        || repair_after.accuracy != report.final_accuracy
    {
        return Err(Error::Invariant(
            "relabel report disagrees with a full re-evaluation of the repaired forest".into(),
        ));
    }

    write_atomic(&a.out, &forest.to_json())?;
    let report_path = a.report.unwrap_or_else(|| sibling(&a.out, "report.jsonl"));
    write_atomic(&report_path, &report.to_json_lines())?;
    let metrics_path = a.metrics.unwrap_or_else(|| sibling(&a.out, "metrics.json"));
    write_atomic(
        &metrics_path,
        &to_pretty(&json!({
            "seed": seed,
            "test_fraction": test_fraction,
            "repair": BeforeAfter { before: repair_before, after: repair_after },
            "evaluation": BeforeAfter { before: eval_before, after: eval_after },
        })),
    )?;
    writeln!(
        out,
        "strategy {} epsilon {} alpha {}: {} iterations, {} leaves flipped, stop_reason {}\n\
         repair: accuracy {:.4} -> {:.4}  discrimination {:.4} -> {:.4}\n\
         eval:   accuracy {:.4} -> {:.4}  discrimination {:.4} -> {:.4}\n\
         wrote {}, {} and {}",
        config.strategy,
        config.epsilon,
        config.alpha,
        report.iterations.len(),
        report.n_flipped_leaves,
        report.stop_reason,
        repair_before.accuracy,
        repair_after.accuracy,
        repair_before.discrimination,
        repair_after.discrimination,
        eval_before.accuracy,
        eval_after.accuracy,
        eval_before.discrimination,
        eval_after.discrimination,
        a.out.display(),
        report_path.display(),
        metrics_path.display()
    )
    .map_err(stdout_err)
}

pub fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let forest = Forest::load(&a.forest)?;
    let schema = resolve_schema(&a.data.schema)?;
    let dataset = load_csv(&a.data.data, &schema)?;
    check_encoding(&forest, &dataset)?;
    let data = match a.split {
        SplitArg::All => dataset,
        which => {
            let (rec_seed, rec_fraction) = recorded_split(&forest);
            let seed = a.data.seed.or(rec_seed).unwrap_or(DEFAULT_SEED);
            let fraction = a
                .data
                .test_fraction
                .or(rec_fraction)
                .unwrap_or(DEFAULT_TEST_FRACTION);
            let (train, test) = split(&dataset, fraction, seed)?;
            if matches!(which, SplitArg::Train) {
                train
            } else {
                test
            }
        }
    };
    let report = forest_report(&forest, &data)?;
    out.write_all(to_pretty(&report).as_bytes()).map_err(stdout_err)
}

pub fn cmd_inspect(a: InspectArgs, out: &mut dyn Write) -> Result<()> {
    let forest = Forest::load(&a.forest)?;
    let text = render_forest(&forest, a.tree)?;
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

pub fn render_forest(forest: &Forest, tree: Option<usize>) -> Result<String> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "forest: {} trees, {} leaves, {} features, sensitive feature '{}'",
        forest.trees().len(),
        forest.n_leaves(),
        forest.n_features(),
        forest.sensitive_feature()
    );
    for (k, v) in forest.metadata() {
        let _ = writeln!(s, "  {k}: {v}");
    }
    match tree {
        None => {
            let _ = writeln!(s, "{:>6} {:>6} {:>7} {:>7} {:>8}", "tree", "depth", "leaves", "flipped", "visited");
            for t in forest.trees() {
                let flipped = t.leaf_ids().filter(|&l| t.leaf_flipped(l) == Some(true)).count();
                let _ = writeln!(
                    s,
                    "{:>6} {:>6} {:>7} {:>7} {:>8}",
                    t.id(),
                    t.depth(),
                    t.n_leaves(),
                    flipped,
                    t.is_flipped()
                );
            }
        }
        Some(id) => {
            let t = forest
                .tree(id)
                .ok_or_else(|| Error::Input(format!("forest has no tree {id}")))?;
            let mut stack = vec![(t.root(), 0usize)];
            while let Some((n, depth)) = stack.pop() {
                let indent = "  ".repeat(depth);
                match t.nodes()[n].kind {
                    NodeKind::Split { feature, threshold, left, right } => {
                        let name = forest.feature_names().get(feature).map(String::as_str).unwrap_or("?");
                        let _ = writeln!(s, "{indent}[{n}] {name} <= {threshold}");
                        stack.push((right, depth + 1));
                        stack.push((left, depth + 1));
                    }
                    NodeKind::Leaf { prediction, flipped, stats } => {
                        let _ = writeln!(
                            s,
                            "{indent}[{n}] leaf pred={prediction}{} y1={} y0={} s1={} s0={}",
                            if flipped { " (flipped)" } else { "" },
                            stats.n_y1,
                            stats.n_y0,
                            stats.n_s1,
                            stats.n_s0
                        );
                    }
                }
            }
        }
    }
    Ok(s)
}

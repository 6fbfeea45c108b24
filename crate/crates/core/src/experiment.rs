//! Epsilon/alpha grids over datasets, strategies and base training criteria.
//!
//! Layout of `output_dir`:
//!
//! ```text
//! spec.json                         resolved spec
//! <dataset>.tsv                     one row per baseline and cell
//! <dataset>.frontier.csv            accuracy/discrimination pairs
//! <dataset>.failures.tsv            cells that errored or panicked
//! <dataset>/baseline_<base>.forest.json
//! <dataset>/<strategy>_<base>_eps<e>_alpha<a>.forest.json
//! <dataset>/<strategy>_<base>_eps<e>_alpha<a>.report.jsonl
//! ```
//!
//! Every number in the tables can be recomputed from the persisted forests
//! and the dataset split.

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::write_atomic;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::ingest::{load_csv, resolve_schema, split};
use crate::metrics::forest_report;
use crate::relabel::{relabel, RelabelConfig, ScoreRule, StopReason, Strategy};
use crate::train::{train_forest, Criterion, TrainConfig};

fn default_alphas() -> Vec<f64> {
    vec![1.0]
}

fn default_seed() -> u64 {
    crate::cli::DEFAULT_SEED
}

fn default_test_fraction() -> f64 {
    crate::cli::DEFAULT_TEST_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub data: PathBuf,
    /// Built-in schema name or path to a schema file.
    pub schema: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub strategy: Strategy,
    /// Criterion used to train the forest that gets flipped.
    #[serde(default)]
    pub base: Criterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub train: TrainConfig,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub strategies: Vec<StrategySpec>,
    pub output_dir: PathBuf,
    /// Seeds both the train/test split and training; overrides `train.seed`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub score_rule: ScoreRule,
}

impl ExperimentSpec {
    /// Parses a spec; relative paths are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment spec: {e}")))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut spec.output_dir);
        for d in &mut spec.datasets {
            resolve(&mut d.data);
            let schema_path = Path::new(&d.schema);
            if d.schema.ends_with(".json") && schema_path.is_relative() {
                d.schema = base_dir.join(schema_path).to_string_lossy().into_owned();
            }
        }
        spec.train.seed = spec.seed;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    /// Checks everything that can be checked without training.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.datasets.is_empty() {
            return cfg("experiment lists no datasets".into());
        }
        if self.strategies.is_empty() {
            return cfg("experiment lists no strategies".into());
        }
        if self.epsilons.is_empty() || self.alphas.is_empty() {
            return cfg("experiment needs at least one epsilon and one alpha".into());
        }
        for &v in self.epsilons.iter().chain(&self.alphas) {
            if !(0.0..=1.0).contains(&v) {
                return cfg(format!("epsilon and alpha values must lie in [0, 1], got {v}"));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return cfg(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            let safe = !d.name.is_empty()
                && d.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !safe {
                return cfg(format!("dataset name '{}' must be [A-Za-z0-9_-]+", d.name));
            }
            if !names.insert(&d.name) {
                return cfg(format!("dataset '{}' is listed twice", d.name));
            }
        }
        let mut seen = BTreeSet::new();
        for s in &self.strategies {
            if !seen.insert((s.strategy.short(), s.base.name())) {
                return cfg(format!("strategy {} on {} is listed twice", s.strategy.short(), s.base.name()));
            }
        }
        if self.train.n_trees == 0 || self.train.max_depth == 0 || self.train.min_samples_leaf == 0 {
            return cfg("train: n_trees, max_depth and min_samples_leaf must be positive".into());
        }
        Ok(())
    }

    /// Distinct base criteria in first-listed order.
    pub fn base_criteria(&self) -> Vec<Criterion> {
        let mut out = Vec::new();
        for s in &self.strategies {
            if !out.contains(&s.base) {
                out.push(s.base);
            }
        }
        out
    }

    /// Grid cells in deterministic order: strategy, then epsilon, then alpha.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for s in &self.strategies {
            for &epsilon in &self.epsilons {
                for &alpha in &self.alphas {
                    out.push(Cell {
                        strategy: s.strategy,
                        base: s.base,
                        epsilon,
                        alpha,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub strategy: Strategy,
    pub base: Criterion,
    pub epsilon: f64,
    pub alpha: f64,
}

impl Cell {
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_eps{}_alpha{}",
            self.strategy.short(),
            self.base.name(),
            self.epsilon,
            self.alpha
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineResult {
    pub base: Criterion,
    pub accuracy_test: f64,
    pub disc_test: f64,
    pub accuracy_repair: f64,
    pub disc_repair: f64,
    pub forest_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub strategy: Strategy,
    pub base: Criterion,
    pub epsilon: f64,
    pub alpha: f64,
    pub accuracy_test: f64,
    pub disc_test: f64,
    /// Baseline minus final test accuracy, in hundredths.
    pub delta_accu_points: i64,
    /// Baseline minus final test discrimination, in hundredths.
    pub delta_disc_points: i64,
    pub stop_reason: StopReason,
    pub n_flipped_leaves: usize,
    pub forest_path: PathBuf,
    pub report_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub strategy: Strategy,
    pub base: Criterion,
    pub epsilon: f64,
    pub alpha: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetResult {
    pub name: String,
    pub baselines: Vec<BaselineResult>,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
    pub table_path: PathBuf,
    pub frontier_path: PathBuf,
    pub failures_path: PathBuf,
}

/// `(baseline - value) * 100`, rounded half away from zero. Differences that
/// are a half in decimal but land a hair below it in binary still round up.
pub fn points(baseline: f64, value: f64) -> i64 {
    let x = (baseline - value) * 100.0;
    (x + x.signum() * 1e-9).round() as i64
}

/// Loads every dataset and splits it before any training starts, so that a
/// bad path or schema fails the whole run up front.
fn load_all(spec: &ExperimentSpec) -> Result<Vec<(Dataset, Dataset)>> {
    spec.datasets
        .iter()
        .map(|d| {
            let schema = resolve_schema(&d.schema)?;
            let data = load_csv(&d.data, &schema)?;
            let (train, test) = split(&data, spec.test_fraction, spec.seed)?;
            train.require_both_groups()?;
            test.require_both_groups()?;
            Ok((train, test))
        })
        .collect()
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn run_cell(
    cell: &Cell,
    baseline: &Forest,
    baseline_test: (f64, f64),
    train: &Dataset,
    test: &Dataset,
    dir: &Path,
    score_rule: ScoreRule,
) -> Result<CellResult> {
    let config = RelabelConfig {
        epsilon: cell.epsilon,
        alpha: cell.alpha,
        strategy: cell.strategy,
        score_rule,
    };
    let (forest, report) = relabel(baseline.clone(), train, &config)?;
    let test_report = forest_report(&forest, test)?;
    let stem = cell.file_stem();
    let forest_path = dir.join(format!("{stem}.forest.json"));
    let report_path = dir.join(format!("{stem}.report.jsonl"));
    write_atomic(&forest_path, &forest.to_json())?;
    write_atomic(&report_path, &report.to_json_lines())?;
    Ok(CellResult {
        strategy: cell.strategy,
        base: cell.base,
        epsilon: cell.epsilon,
        alpha: cell.alpha,
        accuracy_test: test_report.accuracy,
        disc_test: test_report.discrimination,
        delta_accu_points: points(baseline_test.0, test_report.accuracy),
        delta_disc_points: points(baseline_test.1, test_report.discrimination),
        stop_reason: report.stop_reason,
        n_flipped_leaves: report.n_flipped_leaves,
        forest_path,
        report_path,
    })
}

pub const TABLE_HEADER: &str = "strategy\tbase_criterion\tepsilon\talpha\taccu_test\tdisc_test\t\
delta_accu_points\tdelta_disc_points\tstop_reason\tn_flipped_leaves";

fn render_table(baselines: &[BaselineResult], cells: &[CellResult]) -> String {
    let mut s = String::from(TABLE_HEADER);
    s.push('\n');
    for b in baselines {
        s.push_str(&format!(
            "baseline\t{}\t-\t-\t{}\t{}\t0\t0\t-\t0\n",
            b.base.name(),
            b.accuracy_test,
            b.disc_test
        ));
    }
    for c in cells {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            c.strategy.short(),
            c.base.name(),
            c.epsilon,
            c.alpha,
            c.accuracy_test,
            c.disc_test,
            c.delta_accu_points,
            c.delta_disc_points,
            c.stop_reason,
            c.n_flipped_leaves
        ));
    }
    s
}

fn render_frontier(baselines: &[BaselineResult], cells: &[CellResult]) -> String {
    let mut s = String::from("strategy,base_criterion,epsilon,alpha,accuracy,discrimination\n");
    for b in baselines {
        s.push_str(&format!("baseline,{},,,{},{}\n", b.base.name(), b.accuracy_test, b.disc_test));
    }
    for c in cells {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.strategy.short(),
            c.base.name(),
            c.epsilon,
            c.alpha,
            c.accuracy_test,
            c.disc_test
        ));
    }
    s
}

fn render_failures(failures: &[CellFailure]) -> String {
    let mut s = String::from("strategy\tbase_criterion\tepsilon\talpha\terror\n");
    for f in failures {
        let error = f.error.replace(['\t', '\n'], " ");
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            f.strategy.short(),
            f.base.name(),
            f.epsilon,
            f.alpha,
            error
        ));
    }
    s
}

/// Runs the whole grid. A failing cell is recorded in the failures table and
/// the remaining cells still run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<DatasetResult>> {
    spec.validate()?;
    let loaded = load_all(spec)?;
    write_atomic(
        &spec.output_dir.join("spec.json"),
        &(serde_json::to_string_pretty(spec).expect("spec serializes") + "\n"),
    )?;
    let mut results = Vec::new();
    for (d, (train, test)) in spec.datasets.iter().zip(&loaded) {
        let dir = spec.output_dir.join(&d.name);
        let mut baselines = Vec::new();
        let mut forests = Vec::new();
        let mut failures = Vec::new();
        for base in spec.base_criteria() {
            let config = TrainConfig {
                criterion: base,
                seed: spec.seed,
                ..spec.train.clone()
            };
            let trained = train_forest(train, &config).and_then(|forest| {
                let path = dir.join(format!("baseline_{}.forest.json", base.name()));
                write_atomic(&path, &forest.to_json())?;
                let r = forest_report(&forest, train)?;
                let t = forest_report(&forest, test)?;
                Ok((forest, BaselineResult {
                    base,
                    accuracy_test: t.accuracy,
                    disc_test: t.discrimination,
                    accuracy_repair: r.accuracy,
                    disc_repair: r.discrimination,
                    forest_path: path,
                }))
            });
            match trained {
                Ok((forest, b)) => {
                    forests.push((base, forest, (b.accuracy_test, b.disc_test)));
                    baselines.push(b);
                }
                Err(e) => {
                    for cell in spec.cells().iter().filter(|c| c.base == base) {
                        failures.push(CellFailure {
                            strategy: cell.strategy,
                            base,
                            epsilon: cell.epsilon,
                            alpha: cell.alpha,
                            error: format!("baseline training failed: {e}"),
                        });
                    }
                }
            }
        }

        let cells: Vec<Cell> = spec
            .cells()
            .into_iter()
            .filter(|c| forests.iter().any(|(b, _, _)| *b == c.base))
            .collect();
        let outcomes: Vec<std::result::Result<CellResult, String>> = crate::parallel::install(|| {
            cells
                .par_iter()
                .map(|cell| {
                    let (_, forest, base_test) = forests
                        .iter()
                        .find(|(b, _, _)| *b == cell.base)
                        .expect("filtered to trained bases");
                    catch_unwind(AssertUnwindSafe(|| {
                        run_cell(cell, forest, *base_test, train, test, &dir, spec.score_rule)
                    }))
                    .map_err(panic_message)
                    .and_then(|r| r.map_err(|e| e.to_string()))
                })
                .collect()
        });
        let mut done = Vec::new();
        for (cell, outcome) in cells.iter().zip(outcomes) {
            match outcome {
                Ok(r) => done.push(r),
                Err(error) => failures.push(CellFailure {
                    strategy: cell.strategy,
                    base: cell.base,
                    epsilon: cell.epsilon,
                    alpha: cell.alpha,
                    error,
                }),
            }
        }

        let table_path = spec.output_dir.join(format!("{}.tsv", d.name));
        let frontier_path = spec.output_dir.join(format!("{}.frontier.csv", d.name));
        let failures_path = spec.output_dir.join(format!("{}.failures.tsv", d.name));
        write_atomic(&table_path, &render_table(&baselines, &done))?;
        write_atomic(&frontier_path, &render_frontier(&baselines, &done))?;
        write_atomic(&failures_path, &render_failures(&failures))?;
        results.push(DatasetResult {
            name: d.name.clone(),
            baselines,
            cells: done,
            failures,
            table_path,
            frontier_path,
            failures_path,
        });
    }
    Ok(results)
}

pub fn cmd_experiment(spec_path: &Path, out: &mut dyn Write) -> Result<()> {
    let spec = ExperimentSpec::load(spec_path)?;
    let results = run_experiment(&spec)?;
    let io = |e| Error::io("<stdout>", e);
    for r in &results {
        writeln!(
            out,
            "{}: {} cells, {} failures -> {}",
            r.name,
            r.cells.len(),
            r.failures.len(),
            r.table_path.display()
        )
        .map_err(io)?;
        for b in &r.baselines {
            writeln!(
                out,
                "  baseline {:<9} accu {:.4} disc {:.4}",
                b.base.name(),
                b.accuracy_test,
                b.disc_test
            )
            .map_err(io)?;
        }
        for c in &r.cells {
            writeln!(
                out,
                "  {} {:<9} eps {:<5} alpha {:<5} accu {:.4} disc {:.4} ({:+} / {:+})",
                c.strategy.short(),
                c.base.name(),
                c.epsilon,
                c.alpha,
                c.accuracy_test,
                c.disc_test,
                c.delta_accu_points,
                c.delta_disc_points
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

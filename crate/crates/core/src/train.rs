//! CART-style tree growing with entropy gain, optionally combined with the
//! gain of the same split w.r.t. the sensitive attribute, and random forests
//! of such trees.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, Node, Tree};

/// Gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

/// How a split's class gain `gc` and sensitive gain `gs` are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `gc`
    #[default]
    Plain,
    /// `gc - gs`
    FairSub,
    /// `gc / gs`, or `gc` when `gs == 0`
    FairDiv,
    /// `gc + gs`
    FairAdd,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Plain => "plain",
            Criterion::FairSub => "fair_sub",
            Criterion::FairDiv => "fair_div",
            Criterion::FairAdd => "fair_add",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Criterion::Plain),
            "fair_sub" => Ok(Criterion::FairSub),
            "fair_div" => Ok(Criterion::FairDiv),
            "fair_add" => Ok(Criterion::FairAdd),
            _ => Err(Error::Config(format!("unknown criterion '{s}'"))),
        }
    }
}

/// Number of features drawn as split candidates at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeaturesPerSplit {
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Count(k) => k,
        }
    }
}

impl fmt::Display for FeaturesPerSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeaturesPerSplit::Sqrt => f.write_str("sqrt"),
            FeaturesPerSplit::All => f.write_str("all"),
            FeaturesPerSplit::Count(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for FeaturesPerSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(FeaturesPerSplit::Sqrt),
            "all" => Ok(FeaturesPerSplit::All),
            _ => s
                .parse()
                .map(FeaturesPerSplit::Count)
                .map_err(|_| Error::Config(format!("features_per_split: bad value '{s}'"))),
        }
    }
}

impl Serialize for FeaturesPerSplit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FeaturesPerSplit::Count(k) => s.serialize_u64(*k as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for FeaturesPerSplit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(k) => Ok(FeaturesPerSplit::Count(k)),
            Raw::Name(name) => name.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 20,
            max_depth: 8,
            min_samples_leaf: 1,
            criterion: Criterion::Plain,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// 100 trees of depth 10, the configuration used for table reproduction.
    pub fn reproduction() -> Self {
        TrainConfig {
            n_trees: 100,
            max_depth: 10,
            ..TrainConfig::default()
        }
    }

    /// Parses a configuration object; absent fields take their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("training configuration: {e}")))
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        let k = self.features_per_split.resolve(n_features);
        if k == 0 || k > n_features {
            return Err(Error::Config(format!(
                "features_per_split resolves to {k} with {n_features} features"
            )));
        }
        Ok(())
    }

    fn metadata(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("aggregation".into(), json!("hard_majority_vote_tie_0"));
        m.insert("bootstrap".into(), json!(self.bootstrap));
        m.insert("criterion".into(), json!(self.criterion.name()));
        m.insert("features_per_split".into(), json!(self.features_per_split));
        m.insert("max_depth".into(), json!(self.max_depth));
        m.insert("min_samples_leaf".into(), json!(self.min_samples_leaf));
        m.insert("n_trees".into(), json!(self.n_trees));
        m.insert("seed".into(), json!(self.seed));
        m.insert("trainer".into(), json!("fairforest"));
        m
    }
}

/// Binary Shannon entropy (bits) of a set with `ones` positives out of `n`.
pub fn entropy(ones: usize, n: usize) -> f64 {
    if n == 0 || ones == 0 || ones == n {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

/// Entropy gain of splitting a set with `ones` positives among `n` into a
/// left part (`left_ones` of `left_n`) and the remainder.
pub fn gain_from_counts(ones: usize, n: usize, left_ones: usize, left_n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let right_n = n - left_n;
    let right_ones = ones - left_ones;
    let w_left = left_n as f64 / n as f64;
    let w_right = right_n as f64 / n as f64;
    let g = entropy(ones, n) - w_left * entropy(left_ones, left_n) - w_right * entropy(right_ones, right_n);
    // Rounding can push a zero gain slightly negative.
    g.max(0.0)
}

/// Information gain of partitioning `parent` into `left` and `right`.
pub fn info_gain(parent: &[u8], left: &[u8], right: &[u8]) -> f64 {
    let ones = |v: &[u8]| v.iter().filter(|&&b| b == 1).count();
    debug_assert_eq!(parent.len(), left.len() + right.len());
    debug_assert_eq!(ones(parent), ones(left) + ones(right));
    gain_from_counts(ones(parent), parent.len(), ones(left), left.len())
}

pub fn combined_gain(gain_class: f64, gain_sensitive: f64, criterion: Criterion) -> f64 {
    match criterion {
        Criterion::Plain => gain_class,
        Criterion::FairSub => gain_class - gain_sensitive,
        Criterion::FairDiv if gain_sensitive == 0.0 => gain_class,
        Criterion::FairDiv => gain_class / gain_sensitive,
        Criterion::FairAdd => gain_class + gain_sensitive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    pub gain_class: f64,
    pub gain_sensitive: f64,
    pub combined_gain: f64,
}

/// Best split of the rows `sample` over the candidate `features`, honoring
/// `min_samples_leaf`. Thresholds are midpoints between consecutive distinct
/// values. Ties keep the first candidate in (feature order, threshold order).
pub fn best_split(
    data: &Dataset,
    sample: &[usize],
    features: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let n = sample.len();
    let y_ones: usize = sample.iter().map(|&i| usize::from(data.label(i))).sum();
    let s_ones: usize = sample.iter().map(|&i| usize::from(data.group(i))).sum();
    let mut best: Option<SplitCandidate> = None;
    let mut column: Vec<(f64, u8, u8)> = Vec::with_capacity(n);
    for &f in features {
        column.clear();
        column.extend(
            sample
                .iter()
                .map(|&i| (data.row(i)[f], data.label(i), data.group(i))),
        );
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut left_y, mut left_s) = (0usize, 0usize);
        for pos in 0..n.saturating_sub(1) {
            let (v, y, s) = column[pos];
            left_y += usize::from(y);
            left_s += usize::from(s);
            let next = column[pos + 1].0;
            if v == next {
                continue;
            }
            let left_n = pos + 1;
            if left_n < min_samples_leaf || n - left_n < min_samples_leaf {
                continue;
            }
            let gain_class = gain_from_counts(y_ones, n, left_y, left_n);
            let gain_sensitive = gain_from_counts(s_ones, n, left_s, left_n);
            let combined = combined_gain(gain_class, gain_sensitive, criterion);
            if best.is_none_or(|b| combined > b.combined_gain) {
                let mut threshold = v + (next - v) / 2.0;
                if threshold >= next {
                    threshold = v;
                }
                best = Some(SplitCandidate {
                    feature_index: f,
                    threshold,
                    gain_class,
                    gain_sensitive,
                    combined_gain: combined,
                });
            }
        }
    }
    best
}

struct Grower<'a, R> {
    data: &'a Dataset,
    config: &'a TrainConfig,
    n_candidates: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, sample: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let ones: usize = sample.iter().map(|&i| usize::from(self.data.label(i))).sum();
        let majority = u8::from(2 * ones > sample.len());
        self.nodes.push(Node::leaf(id, majority));

        let pure = ones == 0 || ones == sample.len();
        if pure
            || depth >= self.config.max_depth
            || sample.len() < 2 * self.config.min_samples_leaf
        {
            return id;
        }
        let mut features =
            index::sample(self.rng, self.data.n_features(), self.n_candidates).into_vec();
        features.sort_unstable();
        let Some(split) = best_split(
            self.data,
            &sample,
            &features,
            self.config.criterion,
            self.config.min_samples_leaf,
        ) else {
            return id;
        };
        if split.combined_gain <= MIN_GAIN {
            return id;
        }
        let (left, right): (Vec<usize>, Vec<usize>) = sample
            .into_iter()
            .partition(|&i| self.data.row(i)[split.feature_index] <= split.threshold);
        let left_id = self.grow(left, depth + 1);
        let right_id = self.grow(right, depth + 1);
        self.nodes[id] = Node::split(id, split.feature_index, split.threshold, left_id, right_id);
        id
    }
}

/// Grows one tree on the rows `sample` of `data` (indices may repeat).
/// Leaves predict the majority label of their rows, ties to 0.
pub fn grow_tree_on<R: Rng>(
    data: &Dataset,
    sample: &[usize],
    config: &TrainConfig,
    rng: &mut R,
    tree_id: usize,
) -> Result<Tree> {
    if sample.is_empty() {
        return Err(Error::Input("cannot grow a tree on no data".into()));
    }
    config.validate(data.n_features())?;
    let mut grower = Grower {
        data,
        config,
        n_candidates: config.features_per_split.resolve(data.n_features()),
        rng,
        nodes: Vec::new(),
    };
    grower.grow(sample.to_vec(), 0);
    Tree::new(tree_id, grower.nodes, 0)
}

pub fn grow_tree<R: Rng>(data: &Dataset, config: &TrainConfig, rng: &mut R) -> Result<Tree> {
    let all: Vec<usize> = (0..data.len()).collect();
    grow_tree_on(data, &all, config, rng, 0)
}

/// Random stream for tree `tree_index` of a forest trained with `seed`.
pub fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

/// Bootstrap rows drawn for a tree; the same draws `train_forest` uses.
pub fn bootstrap_sample<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Rows each tree of a forest trained with `config` on `n` rows was grown on.
pub fn tree_sample(config: &TrainConfig, n: usize, tree_index: usize) -> Vec<usize> {
    if config.bootstrap {
        bootstrap_sample(n, &mut tree_rng(config.seed, tree_index))
    } else {
        (0..n).collect()
    }
}

/// Trains `n_trees` trees, each on its own bootstrap resample when enabled,
/// then annotates leaf statistics against the full training set.
pub fn train_forest(train: &Dataset, config: &TrainConfig) -> Result<Forest> {
    if train.is_empty() {
        return Err(Error::Input("cannot train on an empty dataset".into()));
    }
    config.validate(train.n_features())?;
    let n = train.len();
    let trees = crate::parallel::install(|| {
        (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(config.seed, t);
                let sample = if config.bootstrap {
                    bootstrap_sample(n, &mut rng)
                } else {
                    (0..n).collect()
                };
                grow_tree_on(train, &sample, config, &mut rng, t)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut forest = Forest::new(
        trees,
        train.feature_names().to_vec(),
        train.sensitive_name(),
    )?
    .with_metadata(config.metadata());
    forest.annotate_leaf_stats(train)?;
    Ok(forest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_parent_has_no_gain() {
        assert_eq!(info_gain(&[1, 1, 1], &[1], &[1, 1]), 0.0);
    }

    #[test]
    fn perfect_split_of_balanced_node_is_one_bit() {
        assert_eq!(info_gain(&[1, 1, 0, 0], &[1, 1], &[0, 0]), 1.0);
    }

    #[test]
    fn criteria_arithmetic() {
        assert_eq!(combined_gain(0.4, 0.9, Criterion::Plain), 0.4);
        assert!((combined_gain(0.3, 0.1, Criterion::FairAdd) - 0.4).abs() < 1e-15);
        assert_eq!(combined_gain(0.3, 0.0, Criterion::FairDiv), 0.3);
        assert_eq!(combined_gain(0.3, 0.6, Criterion::FairDiv), 0.5);
        assert!((combined_gain(0.3, 0.1, Criterion::FairSub) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn features_per_split_parsing() {
        assert_eq!("sqrt".parse::<FeaturesPerSplit>().unwrap(), FeaturesPerSplit::Sqrt);
        assert_eq!("3".parse::<FeaturesPerSplit>().unwrap(), FeaturesPerSplit::Count(3));
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(10), 3);
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(1), 1);
        let c: TrainConfig =
            serde_json::from_str(r#"{"features_per_split": 4, "criterion": "fair_add"}"#).unwrap();
        assert_eq!(c.features_per_split, FeaturesPerSplit::Count(4));
        assert_eq!(c.criterion, Criterion::FairAdd);
        assert_eq!(c.n_trees, 20);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"trees": 4}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            features_per_split: FeaturesPerSplit::Count(5),
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(4), Err(Error::Config(_))));
        let zero = TrainConfig {
            n_trees: 0,
            ..TrainConfig::default()
        };
        assert!(zero.validate(4).is_err());
    }

    fn one_feature(values: &[f64], labels: &[u8]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let groups = (0..labels.len()).map(|i| (i % 2) as u8).collect();
        Dataset::from_rows(vec!["x".into()], "s", &rows, labels.to_vec(), groups).unwrap()
    }

    #[test]
    fn pure_data_gives_a_single_leaf() {
        let d = one_feature(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let t = grow_tree(&d, &TrainConfig::default(), &mut tree_rng(0, 0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.leaf_prediction(0), Some(1));
    }

    #[test]
    fn separable_data_gives_a_midpoint_stump() {
        let d = one_feature(&[1.0, 2.0, 3.0, 10.0, 11.0], &[0, 0, 0, 1, 1]);
        let config = TrainConfig {
            max_depth: 1,
            ..TrainConfig::default()
        };
        let t = grow_tree(&d, &config, &mut tree_rng(0, 0)).unwrap();
        match t.node(0).unwrap().kind {
            crate::forest::NodeKind::Split { threshold, .. } => assert_eq!(threshold, 6.5),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict(&[2.0]).unwrap(), 0);
        assert_eq!(t.predict(&[10.5]).unwrap(), 1);
    }

    #[test]
    fn tied_leaf_predicts_zero() {
        let d = one_feature(&[1.0, 1.0], &[1, 0]);
        let t = grow_tree(&d, &TrainConfig::default(), &mut tree_rng(0, 0)).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.leaf_prediction(0), Some(0));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 1, 1]);
        let config = TrainConfig {
            min_samples_leaf: 2,
            ..TrainConfig::default()
        };
        let split = best_split(&d, &[0, 1, 2, 3], &[0], Criterion::Plain, 2).unwrap();
        assert_eq!(split.threshold, 2.5);
        let t = grow_tree(&d, &config, &mut tree_rng(0, 0)).unwrap();
        assert_eq!(t.depth(), 1);
    }
}

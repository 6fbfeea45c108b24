//! Post-hoc leaf flipping under a discrimination bound `epsilon` and an
//! accuracy-drop budget `alpha`.
//!
//! Leaves are scored by how much flipping them lowers their tree's
//! discrimination per unit of accuracy lost on the repair set. Two greedy
//! drivers use the scores: tree-based flipping flips every candidate leaf of
//! the most discriminating unvisited tree, leaf-based flipping flips only the
//! best leaf of that tree. Both stop as soon as the forest's discrimination on
//! the repair set is at most `epsilon`, the accuracy drop reaches `alpha`, or
//! every tree has been visited.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, NodeKind, Tree};
use crate::metrics::Tally;

/// Score assigned to a flip that lowers discrimination without costing
/// accuracy (a leaf whose label disagrees with its repair-set majority).
pub const FREE_FLIP_SCORE: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    #[serde(alias = "lf", alias = "leaf")]
    LeafBased,
    #[serde(alias = "tf", alias = "tree")]
    TreeBased,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::LeafBased => "leaf_based",
            Strategy::TreeBased => "tree_based",
        })
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::DiscMet => "disc_met",
            StopReason::AccuracyBudget => "accuracy_budget",
            StopReason::TreesExhausted => "trees_exhausted",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lf" | "leaf" | "leaf_based" => Ok(Strategy::LeafBased),
            "tf" | "tree" | "tree_based" => Ok(Strategy::TreeBased),
            _ => Err(Error::Config(format!("unknown strategy '{s}'"))),
        }
    }
}

impl Strategy {
    pub fn short(self) -> &'static str {
        match self {
            Strategy::LeafBased => "lf",
            Strategy::TreeBased => "tf",
        }
    }
}

/// How a leaf's flip score is derived from its accuracy and discrimination deltas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// `score = delta_disc / |delta_accu|`, kept when positive: discrimination
    /// reduction per unit of accuracy loss.
    #[default]
    ReductionPerLoss,
    /// `score = delta_disc / delta_accu` with `delta_accu <= 0`, kept when
    /// `score >= 0`. This favors flips that raise discrimination; it exists
    /// only to audit the unsigned ratio.
    SignedRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateLeaf {
    pub tree_id: usize,
    pub leaf_id: usize,
    /// Change of accuracy on the repair set if the leaf is flipped.
    pub delta_accu: f64,
    /// Drop of the tree's discrimination on the repair set if the leaf is
    /// flipped (positive = less discrimination).
    pub delta_disc: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelabelConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub strategy: Strategy,
    #[serde(default)]
    pub score_rule: ScoreRule,
}

impl RelabelConfig {
    pub fn new(epsilon: f64, alpha: f64, strategy: Strategy) -> Self {
        RelabelConfig {
            epsilon,
            alpha,
            strategy,
            score_rule: ScoreRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("alpha", self.alpha)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Forest discrimination on the repair set is at most epsilon.
    DiscMet,
    /// The accuracy drop reached alpha.
    AccuracyBudget,
    /// Every tree has been visited.
    TreesExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub tree_id: usize,
    /// Discrimination of the selected tree when it was selected.
    pub tree_disc_before: f64,
    pub tree_disc_after: f64,
    /// Leaves flipped in this iteration, with their scores at selection time.
    pub flipped: Vec<CandidateLeaf>,
    /// Whether the selected tree was marked as visited.
    pub tree_marked: bool,
    pub forest_disc_before: f64,
    pub forest_disc_after: f64,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    /// Cumulative accuracy drop when the iteration started.
    pub accuracy_drop_before: f64,
    /// Cumulative accuracy drop after the iteration.
    pub accuracy_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelReport {
    pub config: RelabelConfig,
    pub n_repair: usize,
    pub baseline_accuracy: f64,
    pub baseline_discrimination: f64,
    pub final_accuracy: f64,
    pub final_discrimination: f64,
    /// `baseline_accuracy - final_accuracy`
    pub accuracy_drop: f64,
    pub stop_reason: StopReason,
    /// Final discrimination is below `-epsilon`; such forests are left as is.
    pub reverse_discrimination: bool,
    pub n_flipped_leaves: usize,
    pub n_marked_trees: usize,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ReportLine {
    Iteration(IterationRecord),
    Summary(ReportSummary),
}

#[derive(Serialize, Deserialize)]
struct ReportSummary {
    config: RelabelConfig,
    n_repair: usize,
    baseline_accuracy: f64,
    baseline_discrimination: f64,
    final_accuracy: f64,
    final_discrimination: f64,
    accuracy_drop: f64,
    stop_reason: StopReason,
    reverse_discrimination: bool,
    n_flipped_leaves: usize,
    n_marked_trees: usize,
    n_iterations: usize,
}

impl RelabelReport {
    /// One JSON object per iteration followed by a summary object.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for it in &self.iterations {
            out.push_str(&serde_json::to_string(&ReportLine::Iteration(it.clone())).unwrap());
            out.push('\n');
        }
        let summary = ReportSummary {
            config: self.config,
            n_repair: self.n_repair,
            baseline_accuracy: self.baseline_accuracy,
            baseline_discrimination: self.baseline_discrimination,
            final_accuracy: self.final_accuracy,
            final_discrimination: self.final_discrimination,
            accuracy_drop: self.accuracy_drop,
            stop_reason: self.stop_reason,
            reverse_discrimination: self.reverse_discrimination,
            n_flipped_leaves: self.n_flipped_leaves,
            n_marked_trees: self.n_marked_trees,
            n_iterations: self.iterations.len(),
        };
        out.push_str(&serde_json::to_string(&ReportLine::Summary(summary)).unwrap());
        out.push('\n');
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut iterations = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: ReportLine = serde_json::from_str(line)
                .map_err(|e| Error::Input(format!("report line {}: {e}", i + 1)))?;
            match parsed {
                ReportLine::Iteration(it) => iterations.push(it),
                ReportLine::Summary(s) => summary = Some(s),
            }
        }
        let s = summary.ok_or_else(|| Error::Input("report has no summary line".into()))?;
        if s.n_iterations != iterations.len() {
            return Err(Error::Input(format!(
                "summary lists {} iterations, found {}",
                s.n_iterations,
                iterations.len()
            )));
        }
        Ok(RelabelReport {
            config: s.config,
            n_repair: s.n_repair,
            baseline_accuracy: s.baseline_accuracy,
            baseline_discrimination: s.baseline_discrimination,
            final_accuracy: s.final_accuracy,
            final_discrimination: s.final_discrimination,
            accuracy_drop: s.accuracy_drop,
            stop_reason: s.stop_reason,
            reverse_discrimination: s.reverse_discrimination,
            n_flipped_leaves: s.n_flipped_leaves,
            n_marked_trees: s.n_marked_trees,
            iterations,
        })
    }
}

/// Fails unless the tree's leaf counts add up to the repair set, which is the
/// case right after `Forest::annotate_leaf_stats(repair)`.
fn check_annotated(tree: &Tree, repair: &Dataset) -> Result<()> {
    let (mut total, mut s1) = (0u64, 0u64);
    for id in tree.leaf_ids() {
        let st = tree.leaf_stats(id).expect("leaf ids index leaves");
        total += st.total();
        s1 += st.n_s1;
    }
    if total != repair.len() as u64 || s1 != repair.n_s1() as u64 {
        return Err(Error::Usage(format!(
            "leaf statistics of tree {} do not describe the repair set \
             ({total} routed instances, {} expected); annotate the forest first",
            tree.id(),
            repair.len()
        )));
    }
    Ok(())
}

/// Candidate leaves of `tree` for flipping, best score first; equal scores
/// are ordered by (tree id, leaf id).
pub fn score_leaves(tree: &Tree, repair: &Dataset) -> Result<Vec<CandidateLeaf>> {
    score_leaves_with(tree, repair, ScoreRule::default())
}

pub fn score_leaves_with(tree: &Tree, repair: &Dataset, rule: ScoreRule) -> Result<Vec<CandidateLeaf>> {
    let (n_s1, n_s0) = repair.require_both_groups()?;
    check_annotated(tree, repair)?;
    // Scores are ratios of integers formed with one rounding step, so two
    // leaves with equal rational scores get bit-identical floats and fall
    // through to the (tree_id, leaf_id) tie-break.
    let n = repair.len() as i64;
    let (n1, n0) = (n_s1 as i64, n_s0 as i64);
    let mut out = Vec::new();
    for node in tree.nodes() {
        let NodeKind::Leaf {
            prediction,
            flipped,
            stats,
        } = node.kind
        else {
            continue;
        };
        if flipped || stats.n_y1 == stats.n_y0 {
            continue;
        }
        let margin = stats.n_y1 as i64 - stats.n_y0 as i64;
        // (n_s1/|D_S1| - n_s0/|D_S0|) * |D_S1| * |D_S0|
        let share = stats.n_s1 as i64 * n0 - stats.n_s0 as i64 * n1;
        let groups = (n1 * n0) as f64;
        let candidate = match rule {
            ScoreRule::ReductionPerLoss => {
                // Orientation follows the leaf's current label, which equals
                // the sign of the label margin for majority-labelled leaves.
                let orient = if prediction == 1 { 1 } else { -1 };
                let disc_num = orient * share;
                let accu_num = -orient * margin;
                let delta_disc = disc_num as f64 / groups;
                let delta_accu = accu_num as f64 / n as f64;
                let score = if accu_num < 0 {
                    (disc_num as f64 * n as f64) / (groups * -accu_num as f64)
                } else if disc_num > 0 {
                    FREE_FLIP_SCORE
                } else {
                    continue;
                };
                if score <= 0.0 {
                    continue;
                }
                CandidateLeaf {
                    tree_id: tree.id(),
                    leaf_id: node.id,
                    delta_accu,
                    delta_disc,
                    score,
                }
            }
            ScoreRule::SignedRatio => {
                let disc_num = margin.signum() * share;
                let delta_accu = -(margin.abs() as f64) / n as f64;
                let delta_disc = disc_num as f64 / groups;
                let score = -(disc_num as f64 * n as f64) / (groups * margin.abs() as f64);
                if score < 0.0 {
                    continue;
                }
                CandidateLeaf {
                    tree_id: tree.id(),
                    leaf_id: node.id,
                    delta_accu,
                    delta_disc,
                    score,
                }
            }
        };
        out.push(candidate);
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.tree_id.cmp(&b.tree_id))
            .then(a.leaf_id.cmp(&b.leaf_id))
    });
    Ok(out)
}

/// Cached routing of the repair set through every tree, so that a flip only
/// touches the instances of the flipped leaf. All quantities are integer
/// tallies; metrics derived from them equal a full re-evaluation exactly.
struct RepairState<'a> {
    data: &'a Dataset,
    n_s1: usize,
    n_s0: usize,
    /// `members[t][leaf]`: repair rows routed to `leaf` of the tree at position `t`.
    members: Vec<Vec<Vec<u32>>>,
    /// Number of trees voting 1, per repair row.
    votes: Vec<u32>,
    /// Favorable predictions per tree: (S=1, S=0).
    tree_favorable: Vec<(usize, usize)>,
    n_trees: usize,
}

impl<'a> RepairState<'a> {
    fn new(forest: &Forest, data: &'a Dataset) -> Result<Self> {
        let (n_s1, n_s0) = data.require_both_groups()?;
        let per_tree = crate::parallel::install(|| {
            use rayon::prelude::*;
            forest
                .trees()
                .par_iter()
                .map(|tree| -> Result<(Vec<Vec<u32>>, Vec<u8>)> {
                    let mut members = vec![Vec::new(); tree.nodes().len()];
                    let mut preds = Vec::with_capacity(data.len());
                    for (i, inst) in data.instances().enumerate() {
                        let leaf = tree.route(inst.features)?;
                        members[leaf].push(i as u32);
                        preds.push(tree.leaf_prediction(leaf).expect("routed to a leaf"));
                    }
                    Ok((members, preds))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut votes = vec![0u32; data.len()];
        let mut members = Vec::with_capacity(per_tree.len());
        let mut tree_favorable = Vec::with_capacity(per_tree.len());
        for (m, preds) in per_tree {
            let mut fav = (0, 0);
            for (i, &p) in preds.iter().enumerate() {
                votes[i] += u32::from(p);
                if p == 1 {
                    if data.group(i) == 1 {
                        fav.0 += 1;
                    } else {
                        fav.1 += 1;
                    }
                }
            }
            members.push(m);
            tree_favorable.push(fav);
        }
        Ok(RepairState {
            data,
            n_s1,
            n_s0,
            members,
            votes,
            tree_favorable,
            n_trees: forest.trees().len(),
        })
    }

    /// Tree discrimination scaled by `|D_S1| * |D_S0|`, an exact integer.
    fn tree_disc_key(&self, t: usize) -> i64 {
        let (f1, f0) = self.tree_favorable[t];
        f1 as i64 * self.n_s0 as i64 - f0 as i64 * self.n_s1 as i64
    }

    /// Same formula as the metrics module, so recorded values re-evaluate
    /// bit for bit.
    fn tree_discrimination(&self, t: usize) -> f64 {
        let (f1, f0) = self.tree_favorable[t];
        f1 as f64 / self.n_s1 as f64 - f0 as f64 / self.n_s0 as f64
    }

    /// Records that the leaf `leaf` of tree position `t` now predicts `new_pred`.
    fn apply_flip(&mut self, t: usize, leaf: usize, new_pred: u8) {
        for &i in &self.members[t][leaf] {
            let i = i as usize;
            let fav = &mut self.tree_favorable[t];
            let slot = if self.data.group(i) == 1 { &mut fav.0 } else { &mut fav.1 };
            if new_pred == 1 {
                self.votes[i] += 1;
                *slot += 1;
            } else {
                self.votes[i] -= 1;
                *slot -= 1;
            }
        }
    }

    fn forest_tally(&self) -> Tally {
        let preds: Vec<u8> = self
            .votes
            .iter()
            .map(|&v| u8::from(2 * v as usize > self.n_trees))
            .collect();
        Tally::from_predictions(self.data, &preds)
    }
}

/// Runs the configured flipping strategy on `forest` against `repair`.
pub fn relabel(forest: Forest, repair: &Dataset, config: &RelabelConfig) -> Result<(Forest, RelabelReport)> {
    match config.strategy {
        Strategy::TreeBased => tree_based_flipping(forest, repair, config),
        Strategy::LeafBased => leaf_based_flipping(forest, repair, config),
    }
}

/// Each iteration flips every candidate leaf of the most discriminating
/// unvisited tree, then marks that tree visited.
pub fn tree_based_flipping(
    forest: Forest,
    repair: &Dataset,
    config: &RelabelConfig,
) -> Result<(Forest, RelabelReport)> {
    run(forest, repair, config, Strategy::TreeBased)
}

/// Each iteration flips only the best candidate leaf of the most
/// discriminating unvisited tree; a tree without candidates is marked visited.
pub fn leaf_based_flipping(
    forest: Forest,
    repair: &Dataset,
    config: &RelabelConfig,
) -> Result<(Forest, RelabelReport)> {
    run(forest, repair, config, Strategy::LeafBased)
}

fn run(
    mut forest: Forest,
    repair: &Dataset,
    config: &RelabelConfig,
    strategy: Strategy,
) -> Result<(Forest, RelabelReport)> {
    let config = RelabelConfig { strategy, ..*config };
    config.validate()?;
    forest.check_dimensions(repair)?;
    repair.require_both_groups()?;
    if forest.trees().is_empty() {
        return Err(Error::Config("cannot relabel an empty forest".into()));
    }
    for tree in forest.trees() {
        check_annotated(tree, repair)?;
    }

    let mut state = RepairState::new(&forest, repair)?;
    let baseline = state.forest_tally();
    let baseline_accuracy = baseline.accuracy()?;
    let baseline_discrimination = baseline.discrimination()?;
    let (mut accuracy, mut disc, mut drop) = (baseline_accuracy, baseline_discrimination, 0.0);
    let mut iterations = Vec::new();
    let mut n_flipped_leaves = 0;

    let stop_reason = loop {
        if disc <= config.epsilon {
            break StopReason::DiscMet;
        }
        if drop >= config.alpha {
            break StopReason::AccuracyBudget;
        }
        // Most discriminating unvisited tree; ties go to the lowest tree id.
        let mut selected: Option<(usize, i64)> = None;
        for (pos, tree) in forest.trees().iter().enumerate() {
            if tree.is_flipped() {
                continue;
            }
            let d = state.tree_disc_key(pos);
            let better = match selected {
                None => true,
                Some((best_pos, best)) => {
                    d > best || (d == best && tree.id() < forest.trees()[best_pos].id())
                }
            };
            if better {
                selected = Some((pos, d));
            }
        }
        let Some((pos, _)) = selected else {
            break StopReason::TreesExhausted;
        };
        let tree_disc_before = state.tree_discrimination(pos);

        let tree_id = forest.trees()[pos].id();
        let candidates = score_leaves_with(&forest.trees()[pos], repair, config.score_rule)?;
        let to_flip: Vec<CandidateLeaf> = match strategy {
            Strategy::TreeBased => candidates,
            Strategy::LeafBased => candidates.into_iter().take(1).collect(),
        };
        let tree_marked = strategy == Strategy::TreeBased || to_flip.is_empty();

        let tree = forest.tree_mut(tree_id).expect("selected tree exists");
        for c in &to_flip {
            tree.flip_leaf(c.leaf_id)?;
            let new_pred = tree.leaf_prediction(c.leaf_id).expect("candidate is a leaf");
            state.apply_flip(pos, c.leaf_id, new_pred);
        }
        if tree_marked {
            tree.mark_flipped();
        }

        let (accuracy_before, disc_before, drop_before) = (accuracy, disc, drop);
        if !to_flip.is_empty() {
            let tally = state.forest_tally();
            accuracy = tally.accuracy()?;
            disc = tally.discrimination()?;
            drop = baseline_accuracy - accuracy;
        }
        n_flipped_leaves += to_flip.len();
        iterations.push(IterationRecord {
            iteration: iterations.len(),
            tree_id,
            tree_disc_before,
            tree_disc_after: state.tree_discrimination(pos),
            flipped: to_flip,
            tree_marked,
            forest_disc_before: disc_before,
            forest_disc_after: disc,
            accuracy_before,
            accuracy_after: accuracy,
            accuracy_drop_before: drop_before,
            accuracy_drop: drop,
        });
    };

    let n_marked_trees = forest.trees().iter().filter(|t| t.is_flipped()).count();
    let report = RelabelReport {
        config,
        n_repair: repair.len(),
        baseline_accuracy,
        baseline_discrimination,
        final_accuracy: accuracy,
        final_discrimination: disc,
        accuracy_drop: drop,
        stop_reason,
        reverse_discrimination: disc < -config.epsilon,
        n_flipped_leaves,
        n_marked_trees,
        iterations,
    };
    Ok((forest, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{LeafStats, Node};

    fn repair_with_groups(n_s1: usize, n_s0: usize) -> Dataset {
        let n = n_s1 + n_s0;
        let rows = vec![vec![0.0]; n];
        let groups = (0..n).map(|i| u8::from(i < n_s1)).collect();
        Dataset::from_rows(vec!["x".into()], "s", &rows, vec![0; n], groups).unwrap()
    }

    /// Two-leaf tree whose counts are set by hand; routing is irrelevant here.
    fn tree_with_stats(pred: u8, stats: LeafStats, rest: LeafStats) -> Tree {
        let mut t = Tree::new(
            0,
            vec![Node::split(0, 0, 0.5, 1, 2), Node::leaf(1, pred), Node::leaf(2, 0)],
            0,
        )
        .unwrap();
        t.set_leaf_stats(1, stats).unwrap();
        t.set_leaf_stats(2, rest).unwrap();
        t
    }

    #[test]
    fn worked_score_example() {
        let repair = repair_with_groups(5, 5);
        let leaf = LeafStats { n_y1: 3, n_y0: 1, n_s1: 3, n_s0: 1 };
        let rest = LeafStats { n_y1: 3, n_y0: 3, n_s1: 2, n_s0: 4 };
        let t = tree_with_stats(1, leaf, rest);
        let c = score_leaves(&t, &repair).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].leaf_id, 1);
        assert!((c[0].delta_accu + 0.2).abs() < 1e-15);
        assert!((c[0].delta_disc - 0.4).abs() < 1e-15);
        assert!((c[0].score - 2.0).abs() < 1e-12);
    }

    #[test]
    fn label_ties_are_skipped() {
        let repair = repair_with_groups(5, 5);
        let tie = LeafStats { n_y1: 2, n_y0: 2, n_s1: 3, n_s0: 1 };
        let rest = LeafStats { n_y1: 3, n_y0: 3, n_s1: 2, n_s0: 4 };
        assert!(score_leaves(&tree_with_stats(1, tie, rest), &repair).unwrap().is_empty());
    }

    #[test]
    fn discrimination_raising_flips_are_excluded() {
        let repair = repair_with_groups(5, 5);
        let leaf = LeafStats { n_y1: 3, n_y0: 1, n_s1: 1, n_s0: 3 };
        let rest = LeafStats { n_y1: 3, n_y0: 3, n_s1: 4, n_s0: 2 };
        assert!(score_leaves(&tree_with_stats(1, leaf, rest), &repair).unwrap().is_empty());
        let signed = score_leaves_with(&tree_with_stats(1, leaf, rest), &repair, ScoreRule::SignedRatio)
            .unwrap();
        assert_eq!(signed.len(), 1);
        assert!(signed[0].delta_disc < 0.0);
    }

    #[test]
    fn unannotated_tree_is_a_usage_error() {
        let repair = repair_with_groups(2, 2);
        let t = Tree::single_leaf(0, 1);
        assert!(matches!(score_leaves(&t, &repair), Err(Error::Usage(_))));
    }

    #[test]
    fn config_bounds() {
        assert!(RelabelConfig::new(1.5, 0.1, Strategy::LeafBased).validate().is_err());
        assert!(RelabelConfig::new(0.1, -0.1, Strategy::TreeBased).validate().is_err());
        assert!(RelabelConfig::new(0.0, 1.0, Strategy::TreeBased).validate().is_ok());
        assert_eq!("tf".parse::<Strategy>().unwrap(), Strategy::TreeBased);
    }
}

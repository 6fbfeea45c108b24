//! Trees, forests, leaf statistics and the portable JSON forest format.
//!
//! Nodes live in an id-indexed flat array per tree. An instance descends left
//! when `x[feature] <= threshold` and right otherwise, so every real-valued
//! instance reaches exactly one leaf. A forest predicts by hard majority vote
//! over its trees; an exact tie goes to the unfavorable class 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Format version written to and accepted from forest documents.
pub const FORMAT_VERSION: u32 = 1;

/// Counts of repair instances routed to a leaf.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafStats {
    #[serde(rename = "y1")]
    pub n_y1: u64,
    #[serde(rename = "y0")]
    pub n_y0: u64,
    #[serde(rename = "s1")]
    pub n_s1: u64,
    #[serde(rename = "s0")]
    pub n_s0: u64,
}

impl LeafStats {
    pub fn total(&self) -> u64 {
        self.n_y1 + self.n_y0
    }

    /// Majority label of the routed instances, ties to 0.
    pub fn majority(&self) -> u8 {
        u8::from(self.n_y1 > self.n_y0)
    }

    fn consistent(&self) -> bool {
        self.n_y1 + self.n_y0 == self.n_s1 + self.n_s0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        prediction: u8,
        flipped: bool,
        stats: LeafStats,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
}

impl Node {
    pub fn split(id: usize, feature: usize, threshold: f64, left: usize, right: usize) -> Self {
        Node {
            id,
            kind: NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            },
        }
    }

    pub fn leaf(id: usize, prediction: u8) -> Self {
        Node {
            id,
            kind: NodeKind::Leaf {
                prediction,
                flipped: false,
                stats: LeafStats::default(),
            },
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    id: usize,
    nodes: Vec<Node>,
    root: usize,
    flipped: bool,
}

impl Tree {
    /// Builds a tree after checking that `nodes` form a proper binary tree
    /// rooted at `root`: node `i` has id `i`, every child id exists, every
    /// non-root node has exactly one parent and every node is reachable.
    pub fn new(id: usize, nodes: Vec<Node>, root: usize) -> Result<Self> {
        let tree = Tree {
            id,
            nodes,
            root,
            flipped: false,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// A depth-0 tree.
    pub fn single_leaf(id: usize, prediction: u8) -> Self {
        Tree {
            id,
            nodes: vec![Node::leaf(0, prediction)],
            root: 0,
            flipped: false,
        }
    }

    fn structural(&self, reason: impl Into<String>) -> Error {
        Error::Structural {
            tree: self.id,
            reason: reason.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(self.structural("no nodes"));
        }
        if self.root >= n {
            return Err(self.structural(format!("root {} does not exist", self.root)));
        }
        let mut parents = vec![0usize; n];
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(self.structural(format!("node at position {i} has id {}", node.id)));
            }
            match node.kind {
                NodeKind::Split {
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    if !threshold.is_finite() {
                        return Err(self.structural(format!("node {i} has a non-finite threshold")));
                    }
                    for child in [left, right] {
                        if child >= n {
                            return Err(self.structural(format!(
                                "node {i} references missing child {child}"
                            )));
                        }
                        parents[child] += 1;
                    }
                }
                NodeKind::Leaf {
                    prediction, stats, ..
                } => {
                    if prediction > 1 {
                        return Err(self.structural(format!("leaf {i} has non-binary prediction")));
                    }
                    if !stats.consistent() {
                        return Err(self.structural(format!(
                            "leaf {i} has label and group counts with different totals"
                        )));
                    }
                }
            }
        }
        for (i, &p) in parents.iter().enumerate() {
            let expected = usize::from(i != self.root);
            if p != expected {
                return Err(self.structural(format!("node {i} has {p} parents")));
            }
        }
        // n - 1 edges with one parent per non-root node: the graph is a tree iff
        // everything is reachable from the root.
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(self.structural(format!("cycle through node {i}")));
            }
            if let NodeKind::Split { left, right, .. } = self.nodes[i].kind {
                stack.push(left);
                stack.push(right);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(self.structural(format!("node {i} is unreachable from the root")));
        }
        Ok(())
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    pub fn mark_flipped(&mut self) {
        self.flipped = true;
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id)
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_ids().count()
    }

    /// Depth of the deepest leaf; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((i, d)) = stack.pop() {
            match self.nodes[i].kind {
                NodeKind::Split { left, right, .. } => {
                    stack.push((left, d + 1));
                    stack.push((right, d + 1));
                }
                NodeKind::Leaf { .. } => best = best.max(d),
            }
        }
        best
    }

    /// Id of the leaf reached by `x`.
    pub fn route(&self, x: &[f64]) -> Result<usize> {
        let mut at = self.root;
        // A validated tree cannot take more steps than it has nodes.
        for _ in 0..=self.nodes.len() {
            let node = self
                .nodes
                .get(at)
                .ok_or_else(|| self.structural(format!("dangling child id {at}")))?;
            match node.kind {
                NodeKind::Leaf { .. } => return Ok(at),
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let v = *x.get(feature).ok_or_else(|| {
                        Error::Input(format!(
                            "instance has {} features, split {at} reads feature {feature}",
                            x.len()
                        ))
                    })?;
                    at = if v <= threshold { left } else { right };
                }
            }
        }
        Err(self.structural("routing did not terminate"))
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        let leaf = self.route(x)?;
        match self.nodes[leaf].kind {
            NodeKind::Leaf { prediction, .. } => Ok(prediction),
            NodeKind::Split { .. } => unreachable!("route returns leaves"),
        }
    }

    pub fn leaf_prediction(&self, id: usize) -> Option<u8> {
        match self.nodes.get(id)?.kind {
            NodeKind::Leaf { prediction, .. } => Some(prediction),
            NodeKind::Split { .. } => None,
        }
    }

    pub fn leaf_stats(&self, id: usize) -> Option<&LeafStats> {
        match &self.nodes.get(id)?.kind {
            NodeKind::Leaf { stats, .. } => Some(stats),
            NodeKind::Split { .. } => None,
        }
    }

    pub fn leaf_flipped(&self, id: usize) -> Option<bool> {
        match self.nodes.get(id)?.kind {
            NodeKind::Leaf { flipped, .. } => Some(flipped),
            NodeKind::Split { .. } => None,
        }
    }

    fn leaf_mut(&mut self, id: usize) -> Result<(&mut u8, &mut bool, &mut LeafStats)> {
        let tree = self.id;
        match self.nodes.get_mut(id).map(|n| &mut n.kind) {
            Some(NodeKind::Leaf {
                prediction,
                flipped,
                stats,
            }) => Ok((prediction, flipped, stats)),
            _ => Err(Error::Usage(format!("tree {tree} has no leaf {id}"))),
        }
    }

    /// Inverts the prediction of leaf `id` and records it as flipped.
    pub fn flip_leaf(&mut self, id: usize) -> Result<()> {
        let (prediction, flipped, _) = self.leaf_mut(id)?;
        *prediction = 1 - *prediction;
        *flipped = true;
        Ok(())
    }

    /// Sets the label of leaf `id` without touching its flip ledger.
    pub fn set_leaf_prediction(&mut self, id: usize, value: u8) -> Result<()> {
        if value > 1 {
            return Err(Error::Usage(format!("prediction {value} is not binary")));
        }
        *self.leaf_mut(id)?.0 = value;
        Ok(())
    }

    pub fn set_leaf_stats(&mut self, id: usize, value: LeafStats) -> Result<()> {
        if !value.consistent() {
            return Err(Error::Usage(format!(
                "leaf {id}: label and group counts have different totals"
            )));
        }
        *self.leaf_mut(id)?.2 = value;
        Ok(())
    }

    fn clear_stats(&mut self) {
        for node in &mut self.nodes {
            if let NodeKind::Leaf { stats, .. } = &mut node.kind {
                *stats = LeafStats::default();
            }
        }
    }

    /// Largest feature index read by any split, if there are splits.
    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Split { feature, .. } => Some(feature),
                NodeKind::Leaf { .. } => None,
            })
            .max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    n_features: usize,
    feature_names: Vec<String>,
    sensitive_feature: String,
    metadata: Map<String, Value>,
}

impl Forest {
    pub fn new(
        trees: Vec<Tree>,
        feature_names: Vec<String>,
        sensitive_feature: impl Into<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        let mut ids: Vec<usize> = trees.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Structural {
                tree: w[0],
                reason: "tree id is used twice".into(),
            });
        }
        for tree in &trees {
            if let Some(f) = tree.max_feature().filter(|&f| f >= n_features) {
                return Err(Error::Structural {
                    tree: tree.id,
                    reason: format!("splits on feature {f} but the forest has {n_features}"),
                });
            }
        }
        Ok(Forest {
            trees,
            n_features,
            feature_names,
            sensitive_feature: sensitive_feature.into(),
            metadata: Map::new(),
        })
    }

    pub fn with_metadata(mut self, metadata: Map<String, Value>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn tree(&self, id: usize) -> Option<&Tree> {
        self.trees.iter().find(|t| t.id == id)
    }

    pub fn tree_mut(&mut self, id: usize) -> Option<&mut Tree> {
        self.trees.iter_mut().find(|t| t.id == id)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sensitive_feature(&self) -> &str {
        &self.sensitive_feature
    }

    pub fn metadata(&self) -> &Map<String, Value> {
        &self.metadata
    }

    pub fn n_leaves(&self) -> usize {
        self.trees.iter().map(Tree::n_leaves).sum()
    }

    /// Majority vote of the trees; an exact tie predicts 0.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        if self.trees.is_empty() {
            return Err(Error::Config("cannot predict with an empty forest".into()));
        }
        let mut ones = 0usize;
        for tree in &self.trees {
            ones += usize::from(tree.predict(x)?);
        }
        Ok(u8::from(2 * ones > self.trees.len()))
    }

    pub fn check_dimensions(&self, data: &Dataset) -> Result<()> {
        if data.n_features() != self.n_features {
            return Err(Error::Input(format!(
                "dataset has {} features, forest expects {}",
                data.n_features(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Recomputes every leaf's counts from the instances of `repair` routed to
    /// it. Leaves receiving nothing end up with all-zero counts.
    pub fn annotate_leaf_stats(&mut self, repair: &Dataset) -> Result<()> {
        self.check_dimensions(repair)?;
        self.trees.par_iter_mut().try_for_each(|tree| {
            tree.clear_stats();
            for inst in repair.instances() {
                let leaf = tree.route(inst.features)?;
                let (_, _, stats) = tree.leaf_mut(leaf)?;
                if inst.y == 1 {
                    stats.n_y1 += 1;
                } else {
                    stats.n_y0 += 1;
                }
                if inst.s == 1 {
                    stats.n_s1 += 1;
                } else {
                    stats.n_s0 += 1;
                }
            }
            Ok(())
        })
    }

    pub fn to_json(&self) -> String {
        let doc = ForestDoc::from(self);
        let mut out = serde_json::to_string(&doc).expect("forest documents always serialize");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ForestDoc =
            serde_json::from_str(text).map_err(|e| Error::parse(e.to_string()))?;
        doc.into_forest()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Forest::from_json(&text)
    }
}

// Wire structs. Field declaration order is the canonical order on disk.

#[derive(Serialize, Deserialize)]
struct ForestDoc {
    version: u32,
    n_features: usize,
    feature_names: Vec<String>,
    sensitive_feature: String,
    trees: Vec<TreeDoc>,
    #[serde(default)]
    metadata: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    id: usize,
    #[serde(default)]
    flipped: bool,
    root: usize,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize, Default)]
struct NodeDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pred: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flipped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<LeafStats>,
}

impl From<&Forest> for ForestDoc {
    fn from(f: &Forest) -> Self {
        ForestDoc {
            version: FORMAT_VERSION,
            n_features: f.n_features,
            feature_names: f.feature_names.clone(),
            sensitive_feature: f.sensitive_feature.clone(),
            trees: f
                .trees
                .iter()
                .map(|t| TreeDoc {
                    id: t.id,
                    flipped: t.flipped,
                    root: t.root,
                    nodes: t.nodes.iter().map(NodeDoc::from).collect(),
                })
                .collect(),
            metadata: f.metadata.clone(),
        }
    }
}

impl From<&Node> for NodeDoc {
    fn from(n: &Node) -> Self {
        match n.kind {
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            } => NodeDoc {
                id: Some(n.id),
                kind: Some("split".into()),
                feature: Some(feature),
                threshold: Some(threshold),
                left: Some(left),
                right: Some(right),
                ..NodeDoc::default()
            },
            NodeKind::Leaf {
                prediction,
                flipped,
                stats,
            } => NodeDoc {
                id: Some(n.id),
                kind: Some("leaf".into()),
                pred: Some(prediction),
                flipped: Some(flipped),
                counts: Some(stats),
                ..NodeDoc::default()
            },
        }
    }
}

impl NodeDoc {
    fn into_node(self, tree: usize, position: usize) -> Result<Node> {
        let id = self.id.ok_or_else(|| Error::Parse {
            tree: Some(tree),
            node: None,
            reason: format!("node at position {position} has no id"),
        })?;
        let err = |reason: String| Error::Parse {
            tree: Some(tree),
            node: Some(id),
            reason,
        };
        let missing = |field: &str| err(format!("missing field '{field}'"));
        match self.kind.as_deref() {
            Some("split") => {
                if self.pred.is_some() || self.flipped.is_some() || self.counts.is_some() {
                    return Err(err("split node carries leaf fields".into()));
                }
                let threshold = self.threshold.ok_or_else(|| missing("threshold"))?;
                if !threshold.is_finite() {
                    return Err(err("threshold is not finite".into()));
                }
                Ok(Node::split(
                    id,
                    self.feature.ok_or_else(|| missing("feature"))?,
                    threshold,
                    self.left.ok_or_else(|| missing("left"))?,
                    self.right.ok_or_else(|| missing("right"))?,
                ))
            }
            Some("leaf") => {
                if self.feature.is_some()
                    || self.threshold.is_some()
                    || self.left.is_some()
                    || self.right.is_some()
                {
                    return Err(err("leaf node carries split fields".into()));
                }
                let prediction = self.pred.ok_or_else(|| missing("pred"))?;
                if prediction > 1 {
                    return Err(err(format!("pred must be 0 or 1, got {prediction}")));
                }
                let stats = self.counts.unwrap_or_default();
                if !stats.consistent() {
                    return Err(err("counts y1+y0 and s1+s0 differ".into()));
                }
                Ok(Node {
                    id,
                    kind: NodeKind::Leaf {
                        prediction,
                        flipped: self.flipped.unwrap_or(false),
                        stats,
                    },
                })
            }
            Some(other) => Err(err(format!("unknown node kind '{other}'"))),
            None => Err(missing("kind")),
        }
    }
}

impl ForestDoc {
    fn into_forest(self) -> Result<Forest> {
        if self.version != FORMAT_VERSION {
            return Err(Error::parse(format!(
                "unsupported format version {}",
                self.version
            )));
        }
        if self.feature_names.len() != self.n_features {
            return Err(Error::parse(format!(
                "n_features is {} but {} feature names are listed",
                self.n_features,
                self.feature_names.len()
            )));
        }
        let mut trees = Vec::with_capacity(self.trees.len());
        for t in self.trees {
            let tree_id = t.id;
            let mut nodes = Vec::with_capacity(t.nodes.len());
            for (pos, doc) in t.nodes.into_iter().enumerate() {
                nodes.push(doc.into_node(tree_id, pos)?);
            }
            // Documents may list nodes in any order; storage is id-indexed.
            nodes.sort_by_key(|n| n.id);
            for (pos, n) in nodes.iter().enumerate() {
                if n.id != pos {
                    return Err(Error::Parse {
                        tree: Some(tree_id),
                        node: Some(n.id),
                        reason: "node ids must be unique and dense from 0".into(),
                    });
                }
            }
            let parse_err = |reason: String, node: Option<usize>| Error::Parse {
                tree: Some(tree_id),
                node,
                reason,
            };
            for n in &nodes {
                if let NodeKind::Split {
                    feature,
                    left,
                    right,
                    ..
                } = n.kind
                {
                    if feature >= self.n_features {
                        return Err(parse_err(
                            format!("feature {feature} out of range"),
                            Some(n.id),
                        ));
                    }
                    for child in [left, right] {
                        if child >= nodes.len() {
                            return Err(parse_err(
                                format!("child {child} does not exist"),
                                Some(n.id),
                            ));
                        }
                    }
                }
            }
            let mut tree = Tree::new(tree_id, nodes, t.root).map_err(|e| match e {
                Error::Structural { reason, .. } => parse_err(reason, None),
                other => other,
            })?;
            tree.flipped = t.flipped;
            trees.push(tree);
        }
        let forest = Forest::new(trees, self.feature_names, self.sensitive_feature).map_err(|e| {
            match e {
                Error::Structural { tree, reason } => Error::Parse {
                    tree: Some(tree),
                    node: None,
                    reason,
                },
                other => other,
            }
        })?;
        Ok(forest.with_metadata(self.metadata))
    }
}

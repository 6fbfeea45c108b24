//! Random model/data generators and independent oracles shared by the
//! integration suites.
#![allow(dead_code)]

use fairforest::forest::{Forest, Node, NodeKind, Tree};
use fairforest::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Feature values live on a small integer grid so that instances hit
/// thresholds exactly and many rows share a leaf.
pub const GRID: i32 = 5;

pub fn names(n_features: usize) -> Vec<String> {
    (0..n_features).map(|j| format!("f{j}")).collect()
}

/// Random tree of depth at most `max_depth`; nodes are numbered in preorder.
pub fn random_tree(r: &mut ChaCha8Rng, id: usize, n_features: usize, max_depth: usize) -> Tree {
    fn grow(r: &mut ChaCha8Rng, nodes: &mut Vec<Node>, n_features: usize, depth: usize, max_depth: usize) -> usize {
        let me = nodes.len();
        if depth >= max_depth || (depth > 0 && r.random_bool(0.3)) {
            nodes.push(Node::leaf(me, r.random_range(0..2)));
            return me;
        }
        nodes.push(Node::leaf(me, 0));
        let feature = r.random_range(0..n_features);
        // Half-integer thresholds split the grid, integer ones test `<=` ties.
        let threshold = f64::from(r.random_range(0..2 * GRID)) / 2.0;
        let left = grow(r, nodes, n_features, depth + 1, max_depth);
        let right = grow(r, nodes, n_features, depth + 1, max_depth);
        nodes[me] = Node::split(me, feature, threshold, left, right);
        me
    }
    let mut nodes = Vec::new();
    grow(r, &mut nodes, n_features, 0, max_depth);
    Tree::new(id, nodes, 0).expect("generated trees are well formed")
}

pub fn random_forest(r: &mut ChaCha8Rng, n_trees: usize, n_features: usize, max_depth: usize) -> Forest {
    let trees = (0..n_trees).map(|t| random_tree(r, t, n_features, max_depth)).collect();
    Forest::new(trees, names(n_features), "s").unwrap()
}

/// Random dataset with both sensitive groups present. Labels lean on the
/// first feature and the group so that models pick up some discrimination.
pub fn random_dataset(r: &mut ChaCha8Rng, n: usize, n_features: usize) -> Dataset {
    assert!(n >= 2);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        let s: u8 = match i {
            0 => 1,
            1 => 0,
            _ => r.random_range(0..2),
        };
        let row: Vec<f64> = (0..n_features)
            .map(|_| f64::from(r.random_range(0..GRID)))
            .collect();
        let p = 0.2 + 0.1 * row[0] + 0.2 * f64::from(s);
        labels.push(u8::from(r.random_bool(p.min(0.95))));
        groups.push(s);
        rows.push(row);
    }
    Dataset::from_rows(names(n_features), "s", &rows, labels, groups).unwrap()
}

/// Leaf reached by `x`, found by enumerating every root-to-leaf path and
/// checking its constraints; panics unless exactly one path matches.
pub fn route_by_paths(tree: &Tree, x: &[f64]) -> usize {
    fn paths(tree: &Tree, node: usize, acc: &mut Vec<(usize, f64, bool)>, out: &mut Vec<(usize, Vec<(usize, f64, bool)>)>) {
        match tree.nodes()[node].kind {
            NodeKind::Leaf { .. } => out.push((node, acc.clone())),
            NodeKind::Split { feature, threshold, left, right } => {
                acc.push((feature, threshold, true));
                paths(tree, left, acc, out);
                acc.pop();
                acc.push((feature, threshold, false));
                paths(tree, right, acc, out);
                acc.pop();
            }
        }
    }
    let mut all = Vec::new();
    paths(tree, tree.root(), &mut Vec::new(), &mut all);
    let hits: Vec<usize> = all
        .iter()
        .filter(|(_, cs)| cs.iter().all(|&(f, t, goes_left)| (x[f] <= t) == goes_left))
        .map(|(leaf, _)| *leaf)
        .collect();
    assert_eq!(hits.len(), 1, "path constraints must partition the input space");
    hits[0]
}

/// Discrimination of a 0/1 prediction vector, counting by hand.
pub fn disc_of(preds: &[u8], data: &Dataset) -> f64 {
    let (mut f1, mut n1, mut f0, mut n0) = (0.0, 0.0, 0.0, 0.0);
    for (i, &p) in preds.iter().enumerate() {
        if data.group(i) == 1 {
            n1 += 1.0;
            f1 += f64::from(p);
        } else {
            n0 += 1.0;
            f0 += f64::from(p);
        }
    }
    f1 / n1 - f0 / n0
}

pub fn accuracy_of(preds: &[u8], data: &Dataset) -> f64 {
    let hits = preds.iter().enumerate().filter(|&(i, &p)| p == data.label(i)).count();
    hits as f64 / data.len() as f64
}

pub fn tree_preds(tree: &Tree, data: &Dataset) -> Vec<u8> {
    (0..data.len())
        .map(|i| {
            let leaf = route_by_paths(tree, data.row(i));
            tree.leaf_prediction(leaf).unwrap()
        })
        .collect()
}

/// Hard majority vote counted from per-tree path routing; ties go to 0.
pub fn forest_preds(forest: &Forest, data: &Dataset) -> Vec<u8> {
    let per_tree: Vec<Vec<u8>> = forest.trees().iter().map(|t| tree_preds(t, data)).collect();
    (0..data.len())
        .map(|i| {
            let ones = per_tree.iter().filter(|p| p[i] == 1).count();
            u8::from(ones * 2 > per_tree.len())
        })
        .collect()
}

/// Shannon entropy in bits of a label multiset, from frequency counts.
pub fn entropy_oracle(labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let mut counts = std::collections::BTreeMap::new();
    for &y in labels {
        *counts.entry(y).or_insert(0usize) += 1;
    }
    let n = labels.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

pub fn info_gain_oracle(parent: &[u8], left: &[u8], right: &[u8]) -> f64 {
    let n = parent.len() as f64;
    entropy_oracle(parent)
        - left.len() as f64 / n * entropy_oracle(left)
        - right.len() as f64 / n * entropy_oracle(right)
}

//! Random forests for binary classification with post-hoc leaf flipping that
//! bounds group discrimination (statistical parity difference) while keeping
//! the accuracy loss under a budget.
//!
//! The pieces:
//! - [`ingest`]: CSV loading, one-hot encoding, train/test split.
//! - [`forest`]: trees, forests, routing, leaf statistics, portable JSON format.
//! - [`metrics`]: accuracy and discrimination of any binary predictor.
//! - [`train`]: CART trees with plain or discrimination-aware split gains.
//! - [`relabel`]: leaf scoring and the tree-based / leaf-based flipping loops.
//! - [`cli`]: the `fairforest` command-line front end.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod ingest;
pub mod metrics;
pub mod parallel;
pub mod relabel;
pub mod train;

pub use dataset::{Dataset, Instance};
pub use error::{Error, Result};
pub use forest::{Forest, LeafStats, Node, NodeKind, Tree};
pub use ingest::{builtin_schema, load_csv, split, FeatureSchema};
pub use metrics::MetricsReport;
pub use relabel::{relabel, CandidateLeaf, RelabelConfig, RelabelReport, StopReason, Strategy};
pub use train::{train_forest, Criterion, TrainConfig};

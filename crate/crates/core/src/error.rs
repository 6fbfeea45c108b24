use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tree whose node graph is not a proper binary tree.
    #[error("malformed tree {tree}: {reason}")]
    Structural { tree: usize, reason: String },

    /// A forest document that violates the portable schema.
    #[error("forest parse error{}: {reason}", node_suffix(*.tree, *.node))]
    Parse {
        tree: Option<usize>,
        node: Option<usize>,
        reason: String,
    },

    /// Bad input data: dimension mismatches, CSV problems.
    #[error("input error: {0}")]
    Input(String),

    /// A CSV row that could not be encoded. `row` is 1-based and counts the header.
    #[error("{path}: row {row}: {reason}")]
    Row {
        path: PathBuf,
        row: u64,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// A ratio whose denominator is empty (empty dataset or missing group).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn node_suffix(tree: Option<usize>, node: Option<usize>) -> String {
    match (tree, node) {
        (Some(t), Some(n)) => format!(" (tree {t}, node {n})"),
        (Some(t), None) => format!(" (tree {t})"),
        (None, Some(n)) => format!(" (node {n})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(reason: impl Into<String>) -> Self {
        Error::Parse {
            tree: None,
            node: None,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UndefinedMetric(_) => 3,
            Error::Invariant(_) | Error::Structural { .. } => 4,
            _ => 2,
        }
    }
}

//! Encoded tabular data: real-valued feature rows with a binary label `y` and a
//! binary sensitive attribute `s` (1 = privileged group).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    /// Row-major, `len() * n_features` values.
    features: Vec<f64>,
    labels: Vec<u8>,
    groups: Vec<u8>,
    feature_names: Vec<String>,
    sensitive_name: String,
}

/// A borrowed view of one encoded row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance<'a> {
    pub features: &'a [f64],
    pub y: u8,
    pub s: u8,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        sensitive_name: impl Into<String>,
        features: Vec<f64>,
        labels: Vec<u8>,
        groups: Vec<u8>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if labels.len() != groups.len() {
            return Err(Error::Input(format!(
                "{} labels but {} sensitive values",
                labels.len(),
                groups.len()
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Input(format!(
                "feature buffer holds {} values, expected {} rows x {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Input(format!("label of row {i} is not binary")));
        }
        if let Some(i) = groups.iter().position(|&s| s > 1) {
            return Err(Error::Input(format!("sensitive value of row {i} is not binary")));
        }
        if let Some(i) = features.iter().position(|v| v.is_nan()) {
            return Err(Error::Input(format!(
                "NaN feature value in row {}",
                i / n_features.max(1)
            )));
        }
        Ok(Dataset {
            n_features,
            features,
            labels,
            groups,
            feature_names,
            sensitive_name: sensitive_name.into(),
        })
    }

    pub fn from_rows(
        feature_names: Vec<String>,
        sensitive_name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Vec<u8>,
        groups: Vec<u8>,
    ) -> Result<Self> {
        let n = feature_names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Input(format!(
                "row {i} has {} values, expected {n}",
                rows[i].len()
            )));
        }
        let features = rows.iter().flatten().copied().collect();
        Dataset::new(feature_names, sensitive_name, features, labels, groups)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sensitive_name(&self) -> &str {
        &self.sensitive_name
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn group(&self, i: usize) -> u8 {
        self.groups[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn groups(&self) -> &[u8] {
        &self.groups
    }

    pub fn instance(&self, i: usize) -> Instance<'_> {
        Instance {
            features: self.row(i),
            y: self.labels[i],
            s: self.groups[i],
        }
    }

    pub fn instances(&self) -> impl ExactSizeIterator<Item = Instance<'_>> + '_ {
        (0..self.len()).map(move |i| self.instance(i))
    }

    /// |D_{S=1}|
    pub fn n_s1(&self) -> usize {
        self.groups.iter().filter(|&&s| s == 1).count()
    }

    /// |D_{S=0}|
    pub fn n_s0(&self) -> usize {
        self.len() - self.n_s1()
    }

    /// Rows at `indices`, in that order. Indices may repeat (bootstrap samples).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            n_features: self.n_features,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
            feature_names: self.feature_names.clone(),
            sensitive_name: self.sensitive_name.clone(),
        }
    }

    /// Copy of this dataset with the sensitive encoding inverted.
    pub fn with_swapped_groups(&self) -> Dataset {
        let mut out = self.clone();
        for s in &mut out.groups {
            *s = 1 - *s;
        }
        out
    }

    /// Fails unless both sensitive groups are represented.
    pub fn require_both_groups(&self) -> Result<(usize, usize)> {
        let (n1, n0) = (self.n_s1(), self.n_s0());
        if n1 == 0 || n0 == 0 {
            return Err(Error::UndefinedMetric(format!(
                "discrimination needs both groups of '{}' (S=1: {n1}, S=0: {n0})",
                self.sensitive_name
            )));
        }
        Ok((n1, n0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::from_rows(
            vec!["a".into(), "b".into()],
            "b",
            &[vec![0.0, 1.0], vec![2.0, 0.0], vec![3.0, 1.0]],
            vec![1, 0, 1],
            vec![1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn group_counts_partition_rows() {
        let d = tiny();
        assert_eq!(d.n_s1() + d.n_s0(), d.len());
        assert_eq!((d.n_s1(), d.n_s0()), (2, 1));
    }

    #[test]
    fn subset_repeats_rows() {
        let d = tiny().subset(&[2, 2, 0]);
        assert_eq!(d.len(), 3);
        assert_eq!(d.row(1), &[3.0, 1.0]);
        assert_eq!(d.labels(), &[1, 1, 1]);
    }

    #[test]
    fn rejects_ragged_rows_and_non_binary_labels() {
        let ragged = Dataset::from_rows(vec!["a".into()], "a", &[vec![1.0, 2.0]], vec![0], vec![0]);
        assert!(matches!(ragged, Err(Error::Input(_))));
        let bad = Dataset::from_rows(vec!["a".into()], "a", &[vec![1.0]], vec![2], vec![0]);
        assert!(matches!(bad, Err(Error::Input(_))));
    }

    #[test]
    fn single_group_is_undefined() {
        let d = tiny().subset(&[0, 2]);
        assert!(matches!(d.require_both_groups(), Err(Error::UndefinedMetric(_))));
    }
}

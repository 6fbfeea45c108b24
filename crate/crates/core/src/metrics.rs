//! Accuracy and group discrimination of binary predictors.
//!
//! Discrimination is the favorable-rate difference
//! `P(g(x)=1 | S=1) - P(g(x)=1 | S=0)` measured on an explicit dataset.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub discrimination: f64,
    pub rate_s1: f64,
    pub rate_s0: f64,
    pub n: usize,
    pub n_s1: usize,
    pub n_s0: usize,
    pub n_correct: usize,
    pub favorable_s1: usize,
    pub favorable_s0: usize,
}

/// Integer tallies behind accuracy and discrimination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub n: usize,
    pub n_s1: usize,
    pub n_s0: usize,
    pub correct: usize,
    pub favorable_s1: usize,
    pub favorable_s0: usize,
}

impl Tally {
    pub fn from_predictions(data: &Dataset, predictions: &[u8]) -> Tally {
        debug_assert_eq!(data.len(), predictions.len());
        let mut t = Tally {
            n: data.len(),
            ..Tally::default()
        };
        for (i, &p) in predictions.iter().enumerate() {
            t.correct += usize::from(p == data.label(i));
            if data.group(i) == 1 {
                t.n_s1 += 1;
                t.favorable_s1 += usize::from(p);
            } else {
                t.n_s0 += 1;
                t.favorable_s0 += usize::from(p);
            }
        }
        t
    }

    pub fn accuracy(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::UndefinedMetric("accuracy of an empty dataset".into()));
        }
        Ok(self.correct as f64 / self.n as f64)
    }

    pub fn discrimination(&self) -> Result<f64> {
        if self.n_s1 == 0 || self.n_s0 == 0 {
            return Err(Error::UndefinedMetric(format!(
                "discrimination needs both groups (S=1: {}, S=0: {})",
                self.n_s1, self.n_s0
            )));
        }
        Ok(self.favorable_s1 as f64 / self.n_s1 as f64
            - self.favorable_s0 as f64 / self.n_s0 as f64)
    }

    pub fn report(&self) -> Result<MetricsReport> {
        let discrimination = self.discrimination()?;
        Ok(MetricsReport {
            accuracy: self.accuracy()?,
            discrimination,
            rate_s1: self.favorable_s1 as f64 / self.n_s1 as f64,
            rate_s0: self.favorable_s0 as f64 / self.n_s0 as f64,
            n: self.n,
            n_s1: self.n_s1,
            n_s0: self.n_s0,
            n_correct: self.correct,
            favorable_s1: self.favorable_s1,
            favorable_s0: self.favorable_s0,
        })
    }
}

pub fn predictions<F>(predict: F, data: &Dataset) -> Result<Vec<u8>>
where
    F: Fn(&[f64]) -> Result<u8>,
{
    data.instances().map(|inst| predict(inst.features)).collect()
}

pub fn discrimination<F>(predict: F, data: &Dataset) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<u8>,
{
    data.require_both_groups()?;
    Tally::from_predictions(data, &predictions(predict, data)?).discrimination()
}

pub fn accuracy<F>(predict: F, data: &Dataset) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<u8>,
{
    if data.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty dataset".into()));
    }
    Tally::from_predictions(data, &predictions(predict, data)?).accuracy()
}

pub fn report<F>(predict: F, data: &Dataset) -> Result<MetricsReport>
where
    F: Fn(&[f64]) -> Result<u8>,
{
    data.require_both_groups()?;
    Tally::from_predictions(data, &predictions(predict, data)?).report()
}

pub fn tree_discrimination(tree: &Tree, data: &Dataset) -> Result<f64> {
    discrimination(|x| tree.predict(x), data)
}

pub fn forest_discrimination(forest: &Forest, data: &Dataset) -> Result<f64> {
    forest.check_dimensions(data)?;
    discrimination(|x| forest.predict(x), data)
}

pub fn forest_accuracy(forest: &Forest, data: &Dataset) -> Result<f64> {
    forest.check_dimensions(data)?;
    accuracy(|x| forest.predict(x), data)
}

pub fn forest_report(forest: &Forest, data: &Dataset) -> Result<MetricsReport> {
    forest.check_dimensions(data)?;
    report(|x| forest.predict(x), data)
}

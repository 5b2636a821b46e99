//! Classification and segmentation scores.
//!
//! Ratios whose denominator is zero are reported as 0 together with a
//! `degenerate` flag so that reports stay totally ordered.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (p, a) in pairs {
            c.add(p, a);
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn classification_metrics(c: &ConfusionCounts) -> Result<ClassificationMetrics> {
    if c.total() == 0 {
        return Err(Error::Undefined("no examples".into()));
    }
    let (accuracy, _) = ratio(c.tp + c.tn, c.total());
    let (precision, precision_degenerate) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_degenerate) = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(ClassificationMetrics { accuracy, precision, recall, f1, precision_degenerate, recall_degenerate })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationMetrics {
    pub iou: f64,
    pub dice: f64,
}

pub fn segmentation_metrics(predicted: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Result<SegmentationMetrics> {
    if predicted.is_empty() && truth.is_empty() {
        return Err(Error::Undefined("both node sets are empty".into()));
    }
    let inter = predicted.intersection(truth).count() as f64;
    let union = predicted.union(truth).count() as f64;
    Ok(SegmentationMetrics { iou: inter / union, dice: 2.0 * inter / (predicted.len() + truth.len()) as f64 })
}

/// Indices whose flag is set.
pub fn positive_set(flags: &[bool]) -> BTreeSet<usize> {
    flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
}

/// Whitespace-separated probabilities, one line per record.
pub fn parse_predictions(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|t| match t.parse::<f64>() {
                    Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
                    _ => Err(Error::Parse { line: i + 1, msg: format!("`{t}` is not a probability in [0, 1]") }),
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage1Report {
    pub stage: u8,
    pub threshold: f64,
    pub records: usize,
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: Vec<String>,
}

/// Scores one probability per record against the record labels.
pub fn eval_stage1(labels: &[bool], preds: &[Vec<f64>], threshold: f64) -> Result<Stage1Report> {
    if preds.len() != labels.len() {
        return Err(Error::Precondition(format!("{} prediction lines for {} records", preds.len(), labels.len())));
    }
    let mut counts = ConfusionCounts::default();
    for (i, (p, &y)) in preds.iter().zip(labels).enumerate() {
        let [p] = p.as_slice() else {
            return Err(Error::Parse { line: i + 1, msg: format!("expected 1 probability, got {}", p.len()) });
        };
        counts.add(*p >= threshold, y);
    }
    let m = classification_metrics(&counts)?;
    let mut degenerate = Vec::new();
    if m.precision_degenerate {
        degenerate.push("precision".to_string());
    }
    if m.recall_degenerate {
        degenerate.push("recall".to_string());
    }
    Ok(Stage1Report {
        stage: 1,
        threshold,
        records: labels.len(),
        counts,
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage2Report {
    pub stage: u8,
    pub threshold: f64,
    pub records: usize,
    /// Means over records where the score is defined.
    pub iou: f64,
    pub dice: f64,
    /// Records with empty predicted and true sets.
    pub undefined: usize,
    pub node_counts: ConfusionCounts,
    pub node_accuracy: f64,
}

/// Scores per-cell probabilities against per-cell labels.
pub fn eval_stage2(labels: &[Vec<bool>], preds: &[Vec<f64>], threshold: f64) -> Result<Stage2Report> {
    if preds.len() != labels.len() {
        return Err(Error::Precondition(format!("{} prediction lines for {} records", preds.len(), labels.len())));
    }
    let mut node_counts = ConfusionCounts::default();
    let (mut iou, mut dice, mut defined) = (0.0, 0.0, 0usize);
    for (i, (p, y)) in preds.iter().zip(labels).enumerate() {
        if p.len() != y.len() {
            return Err(Error::Parse { line: i + 1, msg: format!("{} probabilities for {} cells", p.len(), y.len()) });
        }
        let predicted: Vec<bool> = p.iter().map(|&x| x >= threshold).collect();
        for (&a, &b) in predicted.iter().zip(y) {
            node_counts.add(a, b);
        }
        if let Ok(s) = segmentation_metrics(&positive_set(&predicted), &positive_set(y)) {
            iou += s.iou;
            dice += s.dice;
            defined += 1;
        }
    }
    if defined == 0 {
        return Err(Error::Undefined("no record has a non-empty node set".into()));
    }
    let node_accuracy = classification_metrics(&node_counts)?.accuracy;
    Ok(Stage2Report {
        stage: 2,
        threshold,
        records: labels.len(),
        iou: iou / defined as f64,
        dice: dice / defined as f64,
        undefined: labels.len() - defined,
        node_counts,
        node_accuracy,
    })
}

//! Answer parsing and binary classification metrics.
//!
//! The positive class is label `true`. An invalid answer counts as the
//! wrong class in the confusion matrix and as score 0.5 for ROC AUC.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EvalRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    True,
    False,
    Invalid,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::True => Some(true),
            Verdict::False => Some(false),
            Verdict::Invalid => None,
        }
    }

    fn score(self) -> f64 {
        match self {
            Verdict::True => 1.0,
            Verdict::False => 0.0,
            Verdict::Invalid => 0.5,
        }
    }
}

/// Looks for standalone `true`/`false` words, ignoring case. Exactly one
/// distinct value must appear.
pub fn parse_answer(text: &str) -> Verdict {
    let mut found = None;
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        let v = if word.eq_ignore_ascii_case("true") {
            Verdict::True
        } else if word.eq_ignore_ascii_case("false") {
            Verdict::False
        } else {
            continue;
        };
        match found {
            None => found = Some(v),
            Some(prev) if prev != v => return Verdict::Invalid,
            Some(_) => {}
        }
    }
    found.unwrap_or(Verdict::Invalid)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub n_total: usize,
    pub n_invalid: usize,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot compute metrics over zero records")]
    EmptyRecords,
}

pub fn compute_metrics(records: &[EvalRecord]) -> Result<MetricsReport, MetricsError> {
    let pairs: Vec<(bool, Verdict)> = records.iter().map(|r| (r.label, r.parsed)).collect();
    metrics_from_pairs(&pairs)
}

/// Metrics over `(label, verdict)` pairs.
pub fn metrics_from_pairs(pairs: &[(bool, Verdict)]) -> Result<MetricsReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyRecords);
    }
    let mut c = Confusion::default();
    let mut n_invalid = 0;
    // Score histograms over {0, 0.5, 1} for each class.
    let mut pos = [0u64; 3];
    let mut neg = [0u64; 3];
    for &(label, verdict) in pairs {
        if verdict == Verdict::Invalid {
            n_invalid += 1;
        }
        let predicted = verdict.as_bool().unwrap_or(!label);
        match (label, predicted) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
        let bin = (verdict.score() * 2.0) as usize;
        if label {
            pos[bin] += 1;
        } else {
            neg[bin] += 1;
        }
    }

    let n_total = pairs.len();
    let accuracy = (c.tp + c.tn) as f64 / n_total as f64;
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let n_pos: u64 = pos.iter().sum();
    let n_neg: u64 = neg.iter().sum();
    let auc = if n_pos == 0 || n_neg == 0 {
        0.5
    } else {
        // Mann-Whitney: P(score_pos > score_neg) + P(tie) / 2.
        let mut wins = 0.0;
        for (i, &p) in pos.iter().enumerate() {
            for (j, &q) in neg.iter().enumerate() {
                let pairs = (p * q) as f64;
                if i > j {
                    wins += pairs;
                } else if i == j {
                    wins += 0.5 * pairs;
                }
            }
        }
        wins / (n_pos * n_neg) as f64
    };

    Ok(MetricsReport {
        accuracy,
        f1,
        auc,
        n_total,
        n_invalid,
        confusion: c,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

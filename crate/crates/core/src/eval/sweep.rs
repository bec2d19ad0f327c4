//! Accuracy/AUC curves over the number of operators or events.
//!
//! Cell `v` uses a balanced dataset with master seed
//! `derive_seed(seed, TAG_SWEEP, v)`, so cells are independent of which
//! other values are swept.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::client::ChatModel;
use super::harness::{evaluate, EvalRecord};
use super::metrics::{compute_metrics, MetricsReport};
use crate::dataset::{build_dataset_with, DatasetError, DatasetSpec, Problem};
use crate::graph::DEFAULT_EDGE_PROB;
use crate::par::Execution;
use crate::rng::{derive_seed, TAG_SWEEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Vary m with n fixed.
    Operators,
    /// Vary n with m fixed.
    Events,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Operators => "operators",
            SweepAxis::Events => "events",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "operators" => Ok(SweepAxis::Operators),
            "events" => Ok(SweepAxis::Events),
            other => Err(format!("unknown sweep axis `{other}` (expected operators or events)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub fixed: u32,
    pub values: Vec<u32>,
    pub per_cell_count: usize,
    pub seed: u64,
    pub edge_prob: f64,
}

impl SweepConfig {
    pub fn new(axis: SweepAxis, fixed: u32, values: Vec<u32>, per_cell_count: usize, seed: u64) -> Self {
        Self {
            axis,
            fixed,
            values,
            per_cell_count,
            seed,
            edge_prob: DEFAULT_EDGE_PROB,
        }
    }

    /// n = 2, m in {1, 2, 3, 4, 5, 7, 9}, 300 problems per cell.
    pub fn operators_protocol(seed: u64) -> Self {
        Self::new(SweepAxis::Operators, 2, vec![1, 2, 3, 4, 5, 7, 9], 300, seed)
    }

    /// m = 2, n in {2, 3, 4, 5, 7, 9}, 300 problems per cell.
    pub fn events_protocol(seed: u64) -> Self {
        Self::new(SweepAxis::Events, 2, vec![2, 3, 4, 5, 7, 9], 300, seed)
    }

    /// `(n, m)` of the cell for `value`.
    pub fn cell_shape(&self, value: u32) -> (u32, usize) {
        match self.axis {
            SweepAxis::Operators => (self.fixed, value as usize),
            SweepAxis::Events => (value, self.fixed as usize),
        }
    }

    pub fn cell_spec(&self, value: u32) -> DatasetSpec {
        let (n, m) = self.cell_shape(value);
        DatasetSpec {
            edge_prob: self.edge_prob,
            ..DatasetSpec::new(
                self.per_cell_count,
                n,
                m,
                derive_seed(self.seed, TAG_SWEEP, u64::from(value)),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis: SweepAxis,
    pub value: u32,
    pub n: u32,
    pub m: usize,
    pub report: MetricsReport,
}

/// Evaluates one model on every cell.
pub fn run_sweep(
    cfg: &SweepConfig,
    model: &dyn ChatModel,
    max_concurrency: usize,
) -> Result<Vec<SweepCell>, DatasetError> {
    run_sweep_with(cfg, max_concurrency, Execution::default(), |_| Box::new(model))
}

/// Like [`run_sweep`], but the model for each cell is chosen after its
/// dataset is built, which lets scripted models see the problems.
pub fn run_sweep_with<'m, F>(
    cfg: &SweepConfig,
    max_concurrency: usize,
    exec: Execution,
    mut model_for: F,
) -> Result<Vec<SweepCell>, DatasetError>
where
    F: FnMut(&[Problem]) -> Box<dyn ChatModel + 'm>,
{
    if cfg.values.is_empty() {
        return Err(DatasetError::InvalidSpec("sweep needs at least one value".into()));
    }
    let mut cells = Vec::with_capacity(cfg.values.len());
    for &value in &cfg.values {
        let spec = cfg.cell_spec(value);
        let problems = build_dataset_with(&spec, exec)?;
        let model = model_for(&problems);
        let records: Vec<EvalRecord> = evaluate(&problems, model.as_ref(), max_concurrency);
        let report = compute_metrics(&records).map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
        cells.push(SweepCell {
            axis: cfg.axis,
            value,
            n: spec.n,
            m: spec.m,
            report,
        });
    }
    Ok(cells)
}

pub const CSV_HEADER: &str = "axis,value,n,m,count,accuracy,f1,auc,n_invalid";

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in cells {
        let r = &c.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{}",
            c.axis, c.value, c.n, c.m, r.n_total, r.accuracy, r.f1, r.auc, r.n_invalid
        );
    }
    out
}

/// Aligned `name | Accuracy | F1 | AUC` table.
pub fn metrics_table(rows: &[(String, MetricsReport)]) -> String {
    let name_header = "Model";
    let width = rows
        .iter()
        .map(|(n, _)| n.len())
        .chain([name_header.len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{name_header:<width$}  Accuracy      F1     AUC");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{name:<width$}  {:>8.3}  {:>6.3}  {:>6.3}",
            r.accuracy, r.f1, r.auc
        );
    }
    out
}

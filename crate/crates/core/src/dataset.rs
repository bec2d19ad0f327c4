//! Problem assembly, label-balanced datasets and the JSONL file format.
//!
//! Seeds: a problem built from `seed` draws its graph from
//! `derive_seed(seed, TAG_GRAPH, 0)` and its formula from
//! `derive_seed(seed, TAG_FORMULA, 0)`. Draw `i` of a dataset uses problem
//! seed `derive_seed(master_seed, TAG_DRAW, i)`. Draws may run in parallel
//! but are accepted strictly in draw order, so output never depends on the
//! thread count.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{self, CheckError};
use crate::formula_gen::{self, FormulaGenError};
use crate::graph::{self, EventGraph, GraphError};
use crate::ltl::{parse_formula, Formula, ParseError};
use crate::par::{self, Execution};
use crate::render;
use crate::rng::{derive_seed, TAG_DRAW, TAG_FORMULA, TAG_GRAPH};
use crate::smv::{self, SmvError, SmvStyle};

/// Maximum draws per requested problem before balancing gives up.
pub const DRAWS_PER_PROBLEM: u64 = 1000;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Formula(#[from] FormulaGenError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Smv(#[from] SmvError),
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("could not balance labels after {draws} draws ({true_count} true, {false_count} false accepted)")]
    BalanceUnreachable {
        draws: u64,
        true_count: usize,
        false_count: usize,
    },
    #[error("schema violation at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub id: String,
    pub n: u32,
    pub m: usize,
    pub seed: u64,
    pub graph: EventGraph,
    pub formula: String,
    pub smv: String,
    pub context: String,
    pub hypothesis: String,
    pub prompt: String,
    pub label: bool,
}

impl Problem {
    pub fn parsed_formula(&self) -> Result<Formula, ParseError> {
        parse_formula(&self.formula, &self.graph.events())
    }

    /// Recomputes the label with the built-in checker.
    pub fn recheck(&self) -> Result<bool, DatasetError> {
        Ok(checker::label(&self.graph, &self.parsed_formula()?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig {
    pub n: u32,
    pub m: usize,
    pub edge_prob: f64,
    pub style: SmvStyle,
}

impl ProblemConfig {
    pub fn new(n: u32, m: usize) -> Self {
        Self {
            n,
            m,
            edge_prob: graph::DEFAULT_EDGE_PROB,
            style: SmvStyle::Sets,
        }
    }
}

/// Graph, formula, SMV text, label and rendering for one problem. The id
/// is derived from the seed.
pub fn build_problem(n: u32, m: usize, seed: u64, edge_prob: f64) -> Result<Problem, DatasetError> {
    build_problem_with(
        &ProblemConfig {
            edge_prob,
            ..ProblemConfig::new(n, m)
        },
        seed,
    )
}

pub fn build_problem_with(cfg: &ProblemConfig, seed: u64) -> Result<Problem, DatasetError> {
    let graph = graph::generate_graph(cfg.n, cfg.edge_prob, derive_seed(seed, TAG_GRAPH, 0))?;
    let formula = formula_gen::generate_formula(&graph.events(), cfg.m, derive_seed(seed, TAG_FORMULA, 0))?;
    assemble(format!("s{seed:016x}"), cfg.m, seed, graph, &formula, cfg.style)
}

/// Builds the problem record for a given graph and formula.
pub fn assemble(
    id: String,
    m: usize,
    seed: u64,
    graph: EventGraph,
    formula: &Formula,
    style: SmvStyle,
) -> Result<Problem, DatasetError> {
    let smv = smv::emit_smv(&graph, formula, style)?;
    let label = checker::label(&graph, formula)?;
    let rendered = render::render(&graph, formula);
    Ok(Problem {
        id,
        n: graph.n(),
        m,
        seed,
        formula: formula.to_string(),
        smv: smv.text,
        context: rendered.context,
        hypothesis: rendered.hypothesis,
        prompt: rendered.prompt,
        label,
        graph,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub count: usize,
    pub n: u32,
    pub m: usize,
    pub master_seed: u64,
    pub edge_prob: f64,
    pub balanced: bool,
    pub style: SmvStyle,
}

impl DatasetSpec {
    pub fn new(count: usize, n: u32, m: usize, master_seed: u64) -> Self {
        Self {
            count,
            n,
            m,
            master_seed,
            edge_prob: graph::DEFAULT_EDGE_PROB,
            balanced: true,
            style: SmvStyle::Sets,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.count == 0 {
            return Err(DatasetError::InvalidSpec("count must be at least 1".into()));
        }
        if self.balanced && !self.count.is_multiple_of(2) {
            return Err(DatasetError::InvalidSpec(format!(
                "balanced datasets need an even count, got {}",
                self.count
            )));
        }
        if self.n < 2 {
            return Err(GraphError::InvalidN(self.n).into());
        }
        if self.m == 0 {
            return Err(FormulaGenError::InvalidConfig("formula length must be at least 1").into());
        }
        if !(self.edge_prob > 0.0 && self.edge_prob <= 1.0) {
            return Err(GraphError::InvalidProbability(self.edge_prob).into());
        }
        Ok(())
    }

    fn problem_config(&self) -> ProblemConfig {
        ProblemConfig {
            n: self.n,
            m: self.m,
            edge_prob: self.edge_prob,
            style: self.style,
        }
    }
}

pub fn draw_seed(master_seed: u64, index: u64) -> u64 {
    derive_seed(master_seed, TAG_DRAW, index)
}

fn id_for(index: usize, count: usize) -> String {
    let width = count.to_string().len();
    format!("p{index:0width$}")
}

pub fn build_dataset(spec: &DatasetSpec) -> Result<Vec<Problem>, DatasetError> {
    build_dataset_with(spec, Execution::default())
}

pub fn build_dataset_with(spec: &DatasetSpec, exec: Execution) -> Result<Vec<Problem>, DatasetError> {
    spec.validate()?;
    let cfg = spec.problem_config();
    let draw = |index: u64| build_problem_with(&cfg, draw_seed(spec.master_seed, index));

    let mut accepted: Vec<Problem> = Vec::with_capacity(spec.count);
    if !spec.balanced {
        for p in par::map_range(exec, 0, spec.count as u64, draw) {
            accepted.push(p?);
        }
    } else {
        let half = spec.count / 2;
        let max_draws = DRAWS_PER_PROBLEM.saturating_mul(spec.count as u64);
        let batch = (spec.count as u64).max(64);
        let (mut trues, mut falses) = (0usize, 0usize);
        let mut next = 0u64;
        'outer: while accepted.len() < spec.count {
            if next >= max_draws {
                return Err(DatasetError::BalanceUnreachable {
                    draws: next,
                    true_count: trues,
                    false_count: falses,
                });
            }
            let end = (next + batch).min(max_draws);
            for p in par::map_range(exec, next, end, draw) {
                next += 1;
                let p = p?;
                let bucket = if p.label { &mut trues } else { &mut falses };
                if *bucket < half {
                    *bucket += 1;
                    accepted.push(p);
                    if accepted.len() == spec.count {
                        break 'outer;
                    }
                }
            }
        }
    }
    for (i, p) in accepted.iter_mut().enumerate() {
        p.id = id_for(i, spec.count);
    }
    Ok(accepted)
}

pub fn write_dataset(problems: &[Problem], path: &Path) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_jsonl(problems, &mut out)?;
    out.flush()?;
    Ok(())
}

/// One compact JSON object per line, fields in declaration order.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], out: &mut W) -> Result<(), DatasetError> {
    for item in items {
        serde_json::to_writer(&mut *out, item).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Problem>, DatasetError> {
    read_jsonl(BufReader::new(File::open(path)?))
}

/// Parses JSONL, skipping blank lines. Line numbers in errors are 1-based.
pub fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(reader: R) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| DatasetError::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayMismatch {
    pub id: String,
    pub stored: bool,
    /// `Err` holds the message of a record that could not be re-checked.
    pub recomputed: Result<bool, String>,
}

/// Re-checks every record; returns the records whose label does not replay.
pub fn replay_labels(problems: &[Problem], exec: Execution) -> Vec<ReplayMismatch> {
    par::map(exec, problems, |p| {
        let recomputed = p.recheck().map_err(|e| e.to_string());
        (recomputed != Ok(p.label)).then(|| ReplayMismatch {
            id: p.id.clone(),
            stored: p.label,
            recomputed,
        })
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_is_deterministic() {
        let a = build_problem(3, 3, 11, 0.5).unwrap();
        let b = build_problem(3, 3, 11, 0.5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n, 3);
        assert_eq!(a.parsed_formula().unwrap().operator_count(), 3);
        assert_eq!(a.recheck().unwrap(), a.label);
        assert!(a.prompt.starts_with("=== Context ===\n\n"));
    }

    #[test]
    fn invalid_n() {
        assert!(matches!(
            build_problem(1, 3, 0, 0.5),
            Err(DatasetError::Graph(GraphError::InvalidN(1)))
        ));
    }

    #[test]
    fn balanced_small_dataset() {
        let spec = DatasetSpec::new(10, 3, 3, 5);
        let ds = build_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.iter().filter(|p| p.label).count(), 5);
        assert_eq!(ds[0].id, "p00");
        assert_eq!(ds[9].id, "p09");
    }

    #[test]
    fn unbalanced_single() {
        let spec = DatasetSpec {
            balanced: false,
            ..DatasetSpec::new(1, 2, 1, 3)
        };
        let ds = build_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].id, "p0");
        assert_eq!(ds[0].seed, draw_seed(3, 0));
    }

    #[test]
    fn odd_balanced_count_rejected() {
        assert!(matches!(
            build_dataset(&DatasetSpec::new(3, 2, 1, 0)),
            Err(DatasetError::InvalidSpec(_))
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let spec = DatasetSpec::new(40, 3, 2, 99);
        let seq = build_dataset_with(&spec, Execution::Sequential).unwrap();
        let par = build_dataset_with(&spec, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn jsonl_round_trip_and_schema_errors() {
        let ds = build_dataset(&DatasetSpec::new(6, 3, 2, 1)).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        let back: Vec<Problem> = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, ds);

        let empty: Vec<Problem> = Vec::new();
        let mut buf = Vec::new();
        write_jsonl(&empty, &mut buf).unwrap();
        assert!(buf.is_empty());

        let mut lines: Vec<String> = ds.iter().map(|p| serde_json::to_string(p).unwrap()).collect();
        lines[2] = "{\"id\": 3".into();
        let text = lines.join("\n");
        match read_jsonl::<Problem, _>(text.as_bytes()) {
            Err(DatasetError::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn field_order_is_fixed() {
        let p = build_problem(2, 1, 0, 0.5).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let keys = [
            "\"id\"",
            "\"n\"",
            "\"m\"",
            "\"seed\"",
            "\"graph\"",
            "\"formula\"",
            "\"smv\"",
            "\"context\"",
            "\"hypothesis\"",
            "\"prompt\"",
            "\"label\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");
    }

    #[test]
    fn replay_detects_tampering() {
        let mut ds = build_dataset(&DatasetSpec::new(4, 3, 2, 8)).unwrap();
        assert!(replay_labels(&ds, Execution::Parallel).is_empty());
        ds[1].label = !ds[1].label;
        let bad = replay_labels(&ds, Execution::Sequential);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].id, ds[1].id);
    }
}

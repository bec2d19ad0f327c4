//! Random formula generation with exact operator counts.
//!
//! Formulas are grown in buckets: bucket 0 holds the atoms and bucket `j`
//! holds formulas with exactly `j` operators. Step `j` draws one of the
//! seven operators uniformly (`X G F ! & | ->`, in that order). A unary
//! operator wraps a uniform pick from bucket `j - 1`; a binary operator
//! draws a split `s` uniform in `[0, j)` and combines picks from buckets
//! `s` and `j - 1 - s`. The result is the last formula appended to the top
//! bucket. Buckets persist across formulas of the same call.

use thiserror::Error;

use crate::ltl::{BinaryOp, Event, Formula, UnaryOp};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// Sampling order of the operator list. Changing it changes every dataset.
pub const OPERATORS: [Operator; 7] = [
    Operator::Unary(UnaryOp::Next),
    Operator::Unary(UnaryOp::Always),
    Operator::Unary(UnaryOp::Eventually),
    Operator::Unary(UnaryOp::Not),
    Operator::Binary(BinaryOp::And),
    Operator::Binary(BinaryOp::Or),
    Operator::Binary(BinaryOp::Implies),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaGenError {
    #[error("invalid formula config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaGenConfig {
    pub states: Vec<Event>,
    /// Operators per formula.
    pub length: usize,
    pub count: usize,
    pub seed: u64,
}

impl FormulaGenConfig {
    pub fn single(states: Vec<Event>, length: usize, seed: u64) -> Self {
        Self {
            states,
            length,
            count: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), FormulaGenError> {
        if self.states.is_empty() {
            return Err(FormulaGenError::InvalidConfig("states must be nonempty"));
        }
        if self.length == 0 {
            return Err(FormulaGenError::InvalidConfig("formula length must be at least 1"));
        }
        if self.count == 0 {
            return Err(FormulaGenError::InvalidConfig("formula count must be at least 1"));
        }
        Ok(())
    }
}

pub fn generate_formulas(cfg: &FormulaGenConfig) -> Result<Vec<Formula>, FormulaGenError> {
    cfg.validate()?;
    let mut rng = Stream::new(cfg.seed);
    let mut buckets: Vec<Vec<Formula>> = vec![Vec::new(); cfg.length + 1];
    buckets[0] = cfg.states.iter().copied().map(Formula::Atom).collect();

    let mut formulas = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        for j in 1..=cfg.length {
            let formula = match OPERATORS[rng.index(OPERATORS.len())] {
                Operator::Unary(op) => {
                    let operand = pick(&mut rng, &buckets[j - 1]);
                    Formula::unary(op, operand)
                }
                Operator::Binary(op) => {
                    let split = rng.index(j);
                    let left = pick(&mut rng, &buckets[split]);
                    let right = pick(&mut rng, &buckets[j - 1 - split]);
                    Formula::binary(op, left, right)
                }
            };
            buckets[j].push(formula);
        }
        let top = buckets[cfg.length].last().expect("top bucket filled in the loop above");
        formulas.push(top.clone());
    }
    Ok(formulas)
}

/// One formula with exactly `length` operators over `states`.
pub fn generate_formula(states: &[Event], length: usize, seed: u64) -> Result<Formula, FormulaGenError> {
    let cfg = FormulaGenConfig::single(states.to_vec(), length, seed);
    Ok(generate_formulas(&cfg)?.remove(0))
}

fn pick(rng: &mut Stream, bucket: &[Formula]) -> Formula {
    // Buckets 0..j-1 are always nonempty when step j runs.
    bucket[rng.index(bucket.len())].clone()
}

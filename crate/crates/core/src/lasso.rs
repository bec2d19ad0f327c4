//! Exact LTL evaluation on ultimately periodic words `stem · loop^ω`.
//!
//! A lasso word has `|stem| + |loop|` distinct positions. Position `i` is
//! followed by `i + 1`, except the last loop position which is followed by
//! the first loop position. Subformulas are evaluated bottom-up over all
//! positions: on loop positions `F`/`G` are an existential/universal fold
//! over the whole loop, on stem positions they are computed by backward
//! induction from the loop.

use thiserror::Error;

use crate::ltl::{BinaryOp, Event, Formula, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LassoError {
    #[error("lasso loop must be nonempty")]
    EmptyLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Node {
    Atom(Event),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
}

/// A formula flattened into post-order; children always precede parents and
/// the root is the last node.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub(crate) nodes: Vec<Node>,
}

impl Compiled {
    pub fn new(formula: &Formula) -> Self {
        fn go(f: &Formula, nodes: &mut Vec<Node>) -> usize {
            let node = match f {
                Formula::Atom(e) => Node::Atom(*e),
                Formula::Unary(op, a) => {
                    let a = go(a, nodes);
                    Node::Unary(*op, a)
                }
                Formula::Binary(op, a, b) => {
                    let a = go(a, nodes);
                    let b = go(b, nodes);
                    Node::Binary(*op, a, b)
                }
            };
            nodes.push(node);
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        go(formula, &mut nodes);
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Truth of every node at every position: `table[node][position]`.
    pub fn table(&self, stem: &[Event], cycle: &[Event]) -> Result<Vec<Vec<bool>>, LassoError> {
        if cycle.is_empty() {
            return Err(LassoError::EmptyLoop);
        }
        let word: Vec<Event> = stem.iter().chain(cycle).copied().collect();
        let len = word.len();
        let loop_start = stem.len();
        let succ = |i: usize| if i + 1 < len { i + 1 } else { loop_start };

        let mut table: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let row: Vec<bool> = match *node {
                Node::Atom(e) => word.iter().map(|&w| w == e).collect(),
                Node::Unary(UnaryOp::Not, a) => table[a].iter().map(|v| !v).collect(),
                Node::Unary(UnaryOp::Next, a) => (0..len).map(|i| table[a][succ(i)]).collect(),
                Node::Unary(UnaryOp::Eventually, a) => {
                    let sub = &table[a];
                    let on_loop = sub[loop_start..].iter().any(|&v| v);
                    let mut row = vec![on_loop; len];
                    for i in (0..loop_start).rev() {
                        row[i] = sub[i] || row[i + 1];
                    }
                    row
                }
                Node::Unary(UnaryOp::Always, a) => {
                    let sub = &table[a];
                    let on_loop = sub[loop_start..].iter().all(|&v| v);
                    let mut row = vec![on_loop; len];
                    for i in (0..loop_start).rev() {
                        row[i] = sub[i] && row[i + 1];
                    }
                    row
                }
                Node::Binary(op, a, b) => table[a]
                    .iter()
                    .zip(&table[b])
                    .map(|(&x, &y)| apply_binary(op, x, y))
                    .collect(),
            };
            table.push(row);
        }
        Ok(table)
    }

    /// Node values at position 0 of `stem · loop^ω`.
    pub fn values_at_start(&self, stem: &[Event], cycle: &[Event]) -> Result<Vec<bool>, LassoError> {
        Ok(self.table(stem, cycle)?.into_iter().map(|row| row[0]).collect())
    }

    /// Node values at a stem position holding `event`, given the values at
    /// the following position.
    pub fn step_back(&self, event: Event, next: &[bool]) -> Vec<bool> {
        let mut cur: Vec<bool> = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            let v = match *node {
                Node::Atom(e) => e == event,
                Node::Unary(UnaryOp::Not, a) => !cur[a],
                Node::Unary(UnaryOp::Next, a) => next[a],
                Node::Unary(UnaryOp::Eventually, a) => cur[a] || next[idx],
                Node::Unary(UnaryOp::Always, a) => cur[a] && next[idx],
                Node::Binary(op, a, b) => apply_binary(op, cur[a], cur[b]),
            };
            cur.push(v);
        }
        cur
    }
}

fn apply_binary(op: BinaryOp, a: bool, b: bool) -> bool {
    match op {
        BinaryOp::And => a && b,
        BinaryOp::Or => a || b,
        BinaryOp::Implies => !a || b,
    }
}

/// Truth of `formula` at position 0 of `stem · loop^ω`.
pub fn eval_on_lasso(formula: &Formula, stem: &[Event], cycle: &[Event]) -> Result<bool, LassoError> {
    let compiled = Compiled::new(formula);
    let table = compiled.table(stem, cycle)?;
    Ok(table[compiled.root()][0])
}

//! Natural-language rendering of problems.
//!
//! The hypothesis numbers every operator node of the formula as a clause
//! `C1..Ck` in post-order, so the root is always `Ck` and a clause refers
//! only to lower-numbered clauses. Sentence templates, with an atomic
//! operand folded in / with a clause operand:
//!
//! * `F`: `Event<j> will happen eventually.` / `C<i> will eventually be true at some future time.`
//! * `G`: `Event<j> will always happen at any future time.` / `C<i> will always be true at any future time.`
//! * `X`: `Event<j> will happen at the next moment.` / `C<i> will be true at the next moment.`
//! * `!`: `Event<j> does not happen.` / `C<i> does not hold.`
//! * `->`: `That <a> implies that <b>.`
//! * `&`: `Both of the following hold: <a>, and <b>.`
//! * `|`: `At least one of the following holds: <a>, or <b>.`
//!
//! Binary operands render as `event<j> happens` or `C<i> holds`. A bare
//! atom renders as the single clause `C1: Event<j> happens.`

use std::collections::HashMap;

use crate::graph::EventGraph;
use crate::ltl::{BinaryOp, Event, Formula, UnaryOp};

pub const CONTEXT_HEADER: &str = "=== Context ===";
pub const HYPOTHESIS_HEADER: &str = "=== Hypothesis ===";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedProblem {
    pub context: String,
    pub hypothesis: String,
    pub prompt: String,
}

pub fn render_context(g: &EventGraph) -> String {
    let mut sentences = vec![format!("Initially, {} happened.", g.initial())];
    for e in g.events() {
        let targets = g.successors(e).expect("own event");
        if targets.is_empty() {
            sentences.push(format!("After {e}, no other events can happen."));
        }
        for t in targets {
            sentences.push(format!("After {e}, {t} can happen."));
        }
    }
    sentences.join(" ")
}

fn capitalized(e: Event) -> String {
    format!("Event{}", e.0)
}

pub fn instruction_line(clause: usize) -> String {
    format!("C{clause} is True or False? Answer with \"True\" or \"False\" directly:")
}

/// Clause lines followed by a blank line and the answer instruction.
pub fn render_hypothesis(formula: &Formula) -> String {
    let mut lines = Vec::new();
    // Clause number of each operator node, keyed by node address.
    let mut labels: HashMap<*const Formula, usize> = HashMap::new();

    for node in formula.post_order() {
        let label_of = |f: &Formula| labels[&(f as *const Formula)];
        let binary_operand = |f: &Formula| match f {
            Formula::Atom(e) => format!("{e} happens"),
            other => format!("C{} holds", label_of(other)),
        };
        let sentence = match node {
            Formula::Atom(_) => continue,
            Formula::Unary(op, a) => match (&**a, op) {
                (Formula::Atom(e), UnaryOp::Eventually) => format!("{} will happen eventually.", capitalized(*e)),
                (Formula::Atom(e), UnaryOp::Always) => {
                    format!("{} will always happen at any future time.", capitalized(*e))
                }
                (Formula::Atom(e), UnaryOp::Next) => format!("{} will happen at the next moment.", capitalized(*e)),
                (Formula::Atom(e), UnaryOp::Not) => format!("{} does not happen.", capitalized(*e)),
                (sub, UnaryOp::Eventually) => {
                    format!("C{} will eventually be true at some future time.", label_of(sub))
                }
                (sub, UnaryOp::Always) => format!("C{} will always be true at any future time.", label_of(sub)),
                (sub, UnaryOp::Next) => format!("C{} will be true at the next moment.", label_of(sub)),
                (sub, UnaryOp::Not) => format!("C{} does not hold.", label_of(sub)),
            },
            Formula::Binary(op, a, b) => {
                let (pa, pb) = (binary_operand(a), binary_operand(b));
                match op {
                    BinaryOp::Implies => format!("That {pa} implies that {pb}."),
                    BinaryOp::And => format!("Both of the following hold: {pa}, and {pb}."),
                    BinaryOp::Or => format!("At least one of the following holds: {pa}, or {pb}."),
                }
            }
        };
        let label = lines.len() + 1;
        labels.insert(node as *const Formula, label);
        lines.push(format!("C{label}: {sentence}"));
    }
    if let Formula::Atom(e) = formula {
        lines.push(format!("C1: {} happens.", capitalized(*e)));
    }
    let root = lines.len();
    format!("{}\n\n{}", lines.join("\n"), instruction_line(root))
}

pub fn prompt(context: &str, hypothesis: &str) -> String {
    format!("{CONTEXT_HEADER}\n\n{context}\n\n{HYPOTHESIS_HEADER}\n\n{hypothesis}")
}

pub fn render(g: &EventGraph, formula: &Formula) -> RenderedProblem {
    let context = render_context(g);
    let hypothesis = render_hypothesis(formula);
    let prompt = prompt(&context, &hypothesis);
    RenderedProblem {
        context,
        hypothesis,
        prompt,
    }
}

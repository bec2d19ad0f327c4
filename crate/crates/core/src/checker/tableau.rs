//! On-the-fly tableau construction of a generalized Büchi automaton.
//!
//! Input formulas are first put in negation normal form over literals,
//! `&`, `|`, `X`, `F` and `G`. Nodes are expanded in the usual
//! Gerth–Peled–Vardi–Wolper style: each node carries the obligations still
//! to process (`new`), the ones already processed (`old`) and the ones
//! deferred to the next position (`next`). Completed nodes with equal
//! `old`/`next` sets are merged. Every `F ψ` contributes one acceptance set:
//! the nodes that either do not promise `F ψ` or already satisfy `ψ`.

use std::collections::{BTreeSet, HashMap};

use crate::ltl::{BinaryOp, Event, Formula, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Nnf {
    Lit(Event, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Eventually(usize),
    Always(usize),
}

#[derive(Debug, Default)]
pub(crate) struct Arena {
    nodes: Vec<Nnf>,
    index: HashMap<Nnf, usize>,
}

impl Arena {
    fn intern(&mut self, node: Nnf) -> usize {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        self.nodes.push(node);
        self.index.insert(node, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn get(&self, id: usize) -> Nnf {
        self.nodes[id]
    }

    /// Interns `formula` (negated when `negate`) in negation normal form.
    pub(crate) fn nnf(&mut self, formula: &Formula, negate: bool) -> usize {
        let node = match formula {
            Formula::Atom(e) => Nnf::Lit(*e, !negate),
            Formula::Unary(UnaryOp::Not, a) => return self.nnf(a, !negate),
            Formula::Unary(UnaryOp::Next, a) => Nnf::Next(self.nnf(a, negate)),
            Formula::Unary(UnaryOp::Eventually, a) => {
                let a = self.nnf(a, negate);
                if negate {
                    Nnf::Always(a)
                } else {
                    Nnf::Eventually(a)
                }
            }
            Formula::Unary(UnaryOp::Always, a) => {
                let a = self.nnf(a, negate);
                if negate {
                    Nnf::Eventually(a)
                } else {
                    Nnf::Always(a)
                }
            }
            Formula::Binary(op, a, b) => {
                let (na, nb, conj) = match (op, negate) {
                    (BinaryOp::And, false) => (false, false, true),
                    (BinaryOp::And, true) => (true, true, false),
                    (BinaryOp::Or, false) => (false, false, false),
                    (BinaryOp::Or, true) => (true, true, true),
                    (BinaryOp::Implies, false) => (true, false, false),
                    (BinaryOp::Implies, true) => (false, true, true),
                };
                let a = self.nnf(a, na);
                let b = self.nnf(b, nb);
                if conj {
                    Nnf::And(a, b)
                } else {
                    Nnf::Or(a, b)
                }
            }
        };
        self.intern(node)
    }
}

/// Incoming marker for initial nodes.
const INIT: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Pending {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct Completed {
    incoming: BTreeSet<usize>,
    old: BTreeSet<usize>,
}

/// A state labelled by the literals that must hold where it is visited.
#[derive(Debug, Clone)]
pub(crate) struct State {
    positive: Vec<Event>,
    negative: Vec<Event>,
}

impl State {
    /// Whether the state's literals hold at a position carrying `event`.
    pub(crate) fn admits(&self, event: Event) -> bool {
        self.positive.iter().all(|&e| e == event) && !self.negative.contains(&event)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Automaton {
    pub(crate) states: Vec<State>,
    pub(crate) initial: Vec<usize>,
    pub(crate) successors: Vec<Vec<usize>>,
    /// `accepting[k][q]`: state `q` is in acceptance set `k`.
    pub(crate) accepting: Vec<Vec<bool>>,
}

impl Automaton {
    /// Automaton accepting exactly the words that satisfy `formula`
    /// (or its negation when `negate`).
    pub(crate) fn build(formula: &Formula, negate: bool) -> Self {
        let mut arena = Arena::default();
        let root = arena.nnf(formula, negate);

        let mut completed: Vec<Completed> = Vec::new();
        let mut by_key: HashMap<(BTreeSet<usize>, BTreeSet<usize>), usize> = HashMap::new();
        let mut stack = vec![Pending {
            incoming: BTreeSet::from([INIT]),
            new: BTreeSet::from([root]),
            old: BTreeSet::new(),
            next: BTreeSet::new(),
        }];

        while let Some(mut node) = stack.pop() {
            let Some(eta) = node.new.pop_first() else {
                let key = (node.old.clone(), node.next.clone());
                if let Some(&id) = by_key.get(&key) {
                    completed[id].incoming.extend(node.incoming);
                } else {
                    let id = completed.len();
                    completed.push(Completed {
                        incoming: node.incoming,
                        old: node.old,
                    });
                    by_key.insert(key, id);
                    stack.push(Pending {
                        incoming: BTreeSet::from([id]),
                        new: node.next,
                        old: BTreeSet::new(),
                        next: BTreeSet::new(),
                    });
                }
                continue;
            };
            if node.old.contains(&eta) {
                stack.push(node);
                continue;
            }
            node.old.insert(eta);
            match arena.get(eta) {
                Nnf::Lit(e, polarity) => {
                    let complement = arena.index.get(&Nnf::Lit(e, !polarity));
                    if complement.is_some_and(|c| node.old.contains(c)) {
                        continue;
                    }
                    stack.push(node);
                }
                Nnf::And(a, b) => {
                    add_new(&mut node, a);
                    add_new(&mut node, b);
                    stack.push(node);
                }
                Nnf::Or(a, b) => {
                    let mut other = node.clone();
                    add_new(&mut node, a);
                    add_new(&mut other, b);
                    stack.push(other);
                    stack.push(node);
                }
                Nnf::Next(a) => {
                    node.next.insert(a);
                    stack.push(node);
                }
                Nnf::Eventually(a) => {
                    let mut defer = node.clone();
                    defer.next.insert(eta);
                    add_new(&mut node, a);
                    stack.push(defer);
                    stack.push(node);
                }
                Nnf::Always(a) => {
                    node.next.insert(eta);
                    add_new(&mut node, a);
                    stack.push(node);
                }
            }
        }

        let eventualities: Vec<(usize, usize)> = arena
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| match n {
                Nnf::Eventually(a) => Some((id, *a)),
                _ => None,
            })
            .collect();

        let mut states = Vec::with_capacity(completed.len());
        let mut successors = vec![Vec::new(); completed.len()];
        let mut initial = Vec::new();
        for (id, node) in completed.iter().enumerate() {
            let mut positive = Vec::new();
            let mut negative = Vec::new();
            for &f in &node.old {
                if let Nnf::Lit(e, polarity) = arena.get(f) {
                    if polarity {
                        positive.push(e);
                    } else {
                        negative.push(e);
                    }
                }
            }
            states.push(State { positive, negative });
            for &src in &node.incoming {
                if src == INIT {
                    initial.push(id);
                } else {
                    successors[src].push(id);
                }
            }
        }
        let accepting = eventualities
            .iter()
            .map(|&(ev, arg)| {
                completed
                    .iter()
                    .map(|n| !n.old.contains(&ev) || n.old.contains(&arg))
                    .collect()
            })
            .collect();

        Automaton {
            states,
            initial,
            successors,
            accepting,
        }
    }
}

fn add_new(node: &mut Pending, f: usize) {
    if !node.old.contains(&f) {
        node.new.insert(f);
    }
}

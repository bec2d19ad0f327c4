//! Ground-truth labelling: does a formula hold on every infinite path of the
//! totalized event graph, starting at the initial event?
//!
//! [`check`] builds a Büchi automaton for the negated formula, explores its
//! product with the Kripke structure and looks for a reachable strongly
//! connected component that meets every acceptance set. Such a component
//! yields a counterexample lasso. [`check_bruteforce`] is an independent
//! oracle that enumerates lassos and evaluates them directly.

mod bruteforce;
mod tableau;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::EventGraph;
use crate::ltl::{Event, Formula};

pub use bruteforce::{check_bruteforce, completeness_bound, BruteForceBounds, BruteForceError};
use tableau::Automaton;

/// Default cap on explored product states.
pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown atom {0} (structure has events 1..={1})")]
    UnknownAtom(Event, u32),
    #[error("product automaton exceeded {0} states")]
    StateLimit(usize),
}

/// Totalized transition system: sinks of the source graph step to themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeStructure {
    n: u32,
    initial: Event,
    successors: Vec<Vec<Event>>,
}

impl KripkeStructure {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn initial(&self) -> Event {
        self.initial
    }

    pub fn states(&self) -> Vec<Event> {
        crate::ltl::universe(self.n)
    }

    /// Successors of `e`, ascending and never empty. Panics on unknown events.
    pub fn successors(&self, e: Event) -> &[Event] {
        &self.successors[(e.0 - 1) as usize]
    }

    pub fn has_transition(&self, from: Event, to: Event) -> bool {
        self.successors(from).contains(&to)
    }

    pub fn predecessors(&self, e: Event) -> Vec<Event> {
        self.states()
            .into_iter()
            .filter(|&p| self.has_transition(p, e))
            .collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.successors.iter().all(|s| s.len() == 1)
    }

    fn ensure_atoms(&self, formula: &Formula) -> Result<(), CheckError> {
        match formula.atom_outside(self.n) {
            Some(e) => Err(CheckError::UnknownAtom(e, self.n)),
            None => Ok(()),
        }
    }
}

pub fn totalize(g: &EventGraph) -> KripkeStructure {
    let successors = g
        .events()
        .into_iter()
        .map(|e| {
            let s = g.successors(e).expect("event drawn from the graph's own universe");
            if s.is_empty() {
                vec![e]
            } else {
                s
            }
        })
        .collect();
    KripkeStructure {
        n: g.n(),
        initial: g.initial(),
        successors,
    }
}

/// An ultimately periodic path `stem · loop^ω`. The stem starts at the
/// initial state and is nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lasso {
    pub stem: Vec<Event>,
    #[serde(rename = "loop")]
    pub cycle: Vec<Event>,
}

impl Lasso {
    /// Rewrites an empty-stem lasso into the same word with a one-state stem.
    fn normalized(mut self) -> Self {
        if self.stem.is_empty() && !self.cycle.is_empty() {
            self.cycle.rotate_left(1);
            let first = *self.cycle.last().expect("nonempty");
            self.stem.push(first);
        }
        self
    }

    /// Whether this lasso is a path of `k` from its initial state.
    pub fn is_path_of(&self, k: &KripkeStructure) -> bool {
        if self.stem.first() != Some(&k.initial()) || self.cycle.is_empty() {
            return false;
        }
        let word: Vec<Event> = self.stem.iter().chain(&self.cycle).copied().collect();
        if word.iter().any(|e| e.0 == 0 || e.0 > k.n()) {
            return false;
        }
        word.windows(2).all(|w| k.has_transition(w[0], w[1]))
            && k.has_transition(*self.cycle.last().unwrap(), self.cycle[0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Lasso>,
    /// Set by the brute-force oracle when its bounds are below the
    /// completeness bound and the search was cut short.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl CheckResult {
    fn holds() -> Self {
        Self {
            holds: true,
            counterexample: None,
            warning: None,
        }
    }

    fn fails(lasso: Lasso) -> Self {
        Self {
            holds: false,
            counterexample: Some(lasso.normalized()),
            warning: None,
        }
    }
}

pub fn check(k: &KripkeStructure, formula: &Formula) -> Result<CheckResult, CheckError> {
    check_with_limit(k, formula, DEFAULT_STATE_LIMIT)
}

/// Graph label convenience: `check(totalize(g), formula).holds`.
pub fn label(g: &EventGraph, formula: &Formula) -> Result<bool, CheckError> {
    Ok(check(&totalize(g), formula)?.holds)
}

pub fn check_with_limit(k: &KripkeStructure, formula: &Formula, state_limit: usize) -> Result<CheckResult, CheckError> {
    k.ensure_atoms(formula)?;
    let automaton = Automaton::build(formula, true);
    let product = Product::explore(k, &automaton, state_limit)?;
    Ok(match product.accepting_lasso(&automaton) {
        Some(lasso) => CheckResult::fails(lasso),
        None => CheckResult::holds(),
    })
}

/// Reachable part of `K × A`, states numbered in breadth-first order.
struct Product {
    states: Vec<(Event, usize)>,
    successors: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
}

impl Product {
    fn explore(k: &KripkeStructure, a: &Automaton, limit: usize) -> Result<Self, CheckError> {
        let mut ids: HashMap<(Event, usize), usize> = HashMap::new();
        let mut states = Vec::new();
        let mut parent = Vec::new();
        let mut queue = VecDeque::new();

        let s0 = k.initial();
        for &q in &a.initial {
            if a.states[q].admits(s0) && !ids.contains_key(&(s0, q)) {
                ids.insert((s0, q), states.len());
                states.push((s0, q));
                parent.push(None);
                queue.push_back(states.len() - 1);
            }
        }
        if states.len() > limit {
            return Err(CheckError::StateLimit(limit));
        }

        let mut successors: Vec<Vec<usize>> = Vec::new();
        while let Some(id) = queue.pop_front() {
            let (s, q) = states[id];
            let mut out = Vec::new();
            for &t in k.successors(s) {
                for &r in &a.successors[q] {
                    if !a.states[r].admits(t) {
                        continue;
                    }
                    let next = match ids.get(&(t, r)) {
                        Some(&n) => n,
                        None => {
                            if states.len() >= limit {
                                return Err(CheckError::StateLimit(limit));
                            }
                            let n = states.len();
                            ids.insert((t, r), n);
                            states.push((t, r));
                            parent.push(Some(id));
                            queue.push_back(n);
                            n
                        }
                    };
                    out.push(next);
                }
            }
            if successors.len() <= id {
                successors.resize(id + 1, Vec::new());
            }
            successors[id] = out;
        }
        successors.resize(states.len(), Vec::new());
        Ok(Self {
            states,
            successors,
            parent,
        })
    }

    /// Tarjan's algorithm, iterative. Returns the component index of each state.
    fn components(&self) -> Vec<usize> {
        let n = self.states.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![usize::MAX; n];
        let mut stack = Vec::new();
        let mut next_index = 0;
        let mut next_comp = 0;

        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = next_index;
            low[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (v, ref mut edge)) = call.last_mut() {
                if let Some(&w) = self.successors[v].get(*edge) {
                    *edge += 1;
                    if index[w] == usize::MAX {
                        index[w] = next_index;
                        low[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
        comp
    }

    fn accepting_lasso(&self, a: &Automaton) -> Option<Lasso> {
        if self.states.is_empty() {
            return None;
        }
        let comp = self.components();
        let comp_count = comp.iter().max().map_or(0, |m| m + 1);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); comp_count];
        for (s, &c) in comp.iter().enumerate() {
            members[c].push(s);
        }

        let accepting = |c: usize| -> bool {
            let m = &members[c];
            let nontrivial = m.len() > 1 || self.successors[m[0]].contains(&m[0]);
            nontrivial && a.accepting.iter().all(|set| m.iter().any(|&s| set[self.states[s].1]))
        };

        // States are numbered breadth-first, so the smallest member of a
        // component is its closest state to the initial states.
        let entry = (0..self.states.len()).find(|&s| accepting(comp[s]))?;
        let c = comp[entry];

        let mut stem = Vec::new();
        let mut cur = self.parent[entry];
        while let Some(p) = cur {
            stem.push(p);
            cur = self.parent[p];
        }
        stem.reverse();

        let mut walk = vec![entry];
        let mut at = entry;
        for set in &a.accepting {
            if walk.iter().any(|&s| set[self.states[s].1]) {
                continue;
            }
            let hop = self.path_within(c, &comp, at, |s| set[self.states[s].1]);
            at = *hop.last().expect("component is strongly connected");
            walk.extend(hop);
        }
        let mut back = self.path_within(c, &comp, at, |s| s == entry);
        back.pop();
        walk.extend(back);

        let project = |ids: &[usize]| ids.iter().map(|&s| self.states[s].0).collect();
        Some(Lasso {
            stem: project(&stem),
            cycle: project(&walk),
        })
    }

    /// Shortest path of at least one step from `from` to a state satisfying
    /// `goal`, staying inside component `c`. Excludes `from`.
    fn path_within(&self, c: usize, comp: &[usize], from: usize, goal: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut prev: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        for &w in &self.successors[from] {
            if comp[w] == c && !prev.contains_key(&w) {
                prev.insert(w, from);
                queue.push_back(w);
            }
        }
        while let Some(v) = queue.pop_front() {
            if goal(v) {
                let mut path = vec![v];
                let mut cur = v;
                while prev[&cur] != from {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.reverse();
                return path;
            }
            for &w in &self.successors[v] {
                if comp[w] == c && !prev.contains_key(&w) {
                    prev.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        unreachable!("goal lies in the same strongly connected component")
    }
}

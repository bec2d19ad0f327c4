//! Lasso-enumeration oracle, independent of the automaton construction.
//!
//! Every lasso with a loop of at most `loop_bound` states and a stem of at
//! most `stem_bound` states is considered; the formula is evaluated on it
//! with the lasso semantics of [`crate::lasso`]. Two reductions keep the
//! enumeration tractable without skipping any lasso:
//!
//! * On a loop, the value of every subformula at a position depends only on
//!   the window of the next `d + 1` states (`d` = nesting depth of `X`)
//!   and on the set of windows occurring anywhere in the loop. Loops are
//!   therefore enumerated up to (start window, window set), keeping the
//!   shortest representative of each class.
//! * Stems are grown backwards from each loop; a stem position's values
//!   depend only on its state and the values at the following position, so
//!   stems are enumerated up to (state, value vector).

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use super::{CheckError, CheckResult, KripkeStructure, Lasso};
use crate::lasso::{eval_on_lasso, Compiled};
use crate::ltl::{Event, Formula};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceBounds {
    pub stem: usize,
    pub cycle: usize,
}

impl BruteForceBounds {
    /// Bounds equal to the completeness bound for `k` and `formula`.
    pub fn complete_for(k: &KripkeStructure, formula: &Formula) -> Self {
        let b = completeness_bound(k.n(), formula.operator_count());
        Self { stem: b, cycle: b }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("brute-force bounds must be at least 1")]
    InvalidBounds,
}

/// `n · 2^(m+1)`, saturating.
pub fn completeness_bound(n: u32, operators: usize) -> usize {
    let pow = 1usize.checked_shl((operators + 1) as u32).unwrap_or(usize::MAX);
    (n as usize).saturating_mul(pow)
}

pub fn check_bruteforce(
    k: &KripkeStructure,
    formula: &Formula,
    bounds: BruteForceBounds,
) -> Result<CheckResult, BruteForceError> {
    if bounds.stem == 0 || bounds.cycle == 0 {
        return Err(BruteForceError::InvalidBounds);
    }
    k.ensure_atoms(formula)?;
    let compiled = Compiled::new(formula);
    let root = compiled.root();

    let loops = enumerate_loops(k, formula.next_depth(), bounds.cycle);

    // Seeds: value vectors at the first loop position, one representative
    // loop each, in order of discovery (shortest loops first).
    let mut seeds: Vec<(Event, Vec<bool>, usize)> = Vec::new();
    let mut seen: HashSet<(Event, Vec<bool>)> = HashSet::new();
    for (idx, cycle) in loops.representatives.iter().enumerate() {
        let values = compiled
            .values_at_start(&[], cycle)
            .expect("enumerated loops are nonempty");
        if seen.insert((cycle[0], values.clone())) {
            seeds.push((cycle[0], values, idx));
        }
    }

    // Backward breadth-first search over stem positions. `toward[node]` is
    // the node at the following position, `None` for the loop entry.
    let k_initial = k.initial();
    let mut nodes: Vec<(Event, Vec<bool>, usize)> = Vec::new();
    let mut toward: Vec<Option<usize>> = Vec::new();
    let mut ids: HashMap<(Event, Vec<bool>), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for (state, values, rep) in seeds {
        ids.insert((state, values.clone()), nodes.len());
        nodes.push((state, values, rep));
        toward.push(None);
        queue.push_back((nodes.len() - 1, 0usize));
    }

    let mut stems_truncated = false;
    let mut witness = None;
    while let Some((id, depth)) = queue.pop_front() {
        let (state, ref values, _) = nodes[id];
        if state == k_initial && !values[root] {
            witness = Some(id);
            break;
        }
        let preds = k.predecessors(state);
        let values = values.clone();
        for p in preds {
            let prev = compiled.step_back(p, &values);
            if ids.contains_key(&(p, prev.clone())) {
                continue;
            }
            if depth + 1 > bounds.stem {
                stems_truncated = true;
                continue;
            }
            let rep = nodes[id].2;
            ids.insert((p, prev.clone()), nodes.len());
            nodes.push((p, prev, rep));
            toward.push(Some(id));
            queue.push_back((nodes.len() - 1, depth + 1));
        }
    }

    let Some(start) = witness else {
        let complete = BruteForceBounds::complete_for(k, formula);
        let below = bounds.stem < complete.stem || bounds.cycle < complete.cycle;
        let truncated = stems_truncated || loops.truncated;
        let warning = (below && truncated).then(|| {
            format!(
                "bounds (stem {}, loop {}) are below the completeness bound {} and the \
                 enumeration was cut short; `holds` may be wrong",
                bounds.stem, bounds.cycle, complete.stem
            )
        });
        return Ok(CheckResult {
            holds: true,
            counterexample: None,
            warning,
        });
    };

    let mut stem = Vec::new();
    let mut cur = start;
    while let Some(next) = toward[cur] {
        stem.push(nodes[cur].0);
        cur = next;
    }
    let cycle = loops.representatives[nodes[cur].2].clone();
    assert!(
        !eval_on_lasso(formula, &stem, &cycle).expect("nonempty loop"),
        "enumerated witness must falsify the formula"
    );
    Ok(CheckResult::fails(Lasso { stem, cycle }))
}

struct Loops {
    representatives: Vec<Vec<Event>>,
    truncated: bool,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct LoopKey {
    head: Vec<Event>,
    tail: Vec<Event>,
    windows: Vec<u64>,
}

/// Closed walks of `k` of length at most `bound`, one per equivalence class.
fn enumerate_loops(k: &KripkeStructure, depth: usize, bound: usize) -> Loops {
    let width = depth + 1;
    let mut representatives = Vec::new();
    let mut truncated = false;

    // Loops shorter than a window are listed explicitly.
    let mut short: Vec<Vec<Event>> = k.states().into_iter().map(|s| vec![s]).collect();
    for len in 1..=depth.min(bound) {
        let mut longer = Vec::new();
        for walk in &short {
            let last = *walk.last().unwrap();
            if k.has_transition(last, walk[0]) {
                representatives.push(walk.clone());
            }
            if len < depth {
                for &t in k.successors(last) {
                    let mut w = walk.clone();
                    w.push(t);
                    longer.push(w);
                }
            }
        }
        short = longer;
    }
    if bound <= depth {
        return Loops {
            representatives,
            truncated: true,
        };
    }

    // Index every window (path of `width` states).
    let mut windows: Vec<Vec<Event>> = k.states().into_iter().map(|s| vec![s]).collect();
    for _ in 1..width {
        windows = windows
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().unwrap();
                k.successors(last).iter().map(move |&t| {
                    let mut next = w.clone();
                    next.push(t);
                    next
                })
            })
            .collect();
    }
    let window_index: HashMap<Vec<Event>, usize> = windows.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let words = windows.len().div_ceil(64).max(1);
    let tail_len = depth.max(1);

    let mut visited: HashSet<LoopKey> = HashSet::new();
    let mut classes: HashSet<(Vec<Event>, Vec<u64>)> = HashSet::new();
    let mut queue: VecDeque<(LoopKey, Vec<Event>)> = VecDeque::new();
    for w in &windows {
        let mut bits = vec![0u64; words];
        set_bit(&mut bits, window_index[w]);
        let key = LoopKey {
            head: w.clone(),
            tail: w[w.len() - tail_len..].to_vec(),
            windows: bits,
        };
        if visited.insert(key.clone()) {
            queue.push_back((key, w.clone()));
        }
    }

    while let Some((key, walk)) = queue.pop_front() {
        let last = *walk.last().unwrap();
        if k.has_transition(last, key.head[0]) {
            let mut bits = key.windows.clone();
            let mut seq = key.tail[key.tail.len() - depth..].to_vec();
            seq.extend_from_slice(&key.head[..depth]);
            for j in 0..depth {
                set_bit(&mut bits, window_index[&seq[j..j + width]]);
            }
            if classes.insert((key.head.clone(), bits)) {
                representatives.push(walk.clone());
            }
        }
        for &t in k.successors(last) {
            let mut ext = key.tail.clone();
            ext.push(t);
            let mut bits = key.windows.clone();
            set_bit(&mut bits, window_index[&ext[ext.len() - width..]]);
            let next = LoopKey {
                head: key.head.clone(),
                tail: ext[ext.len() - tail_len..].to_vec(),
                windows: bits,
            };
            if visited.contains(&next) {
                continue;
            }
            if walk.len() >= bound {
                truncated = true;
                continue;
            }
            visited.insert(next.clone());
            let mut w = walk.clone();
            w.push(t);
            queue.push_back((next, w));
        }
    }

    Loops {
        representatives,
        truncated,
    }
}

fn set_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

//! Random directed event graphs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::Event;
use crate::rng::Stream;

pub const DEFAULT_EDGE_PROB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("invalid event count {0}: need at least 2 events")]
    InvalidN(u32),
    #[error("invalid edge probability {0}: must lie in (0, 1]")]
    InvalidProbability(f64),
    #[error("unknown event {0}")]
    UnknownEvent(u32),
    #[error("invalid graph: {0}")]
    Malformed(String),
}

/// Events `1..=n`, directed edges without self-loops, and an initial event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct EventGraph {
    n: u32,
    initial: Event,
    edges: BTreeSet<(u32, u32)>,
}

/// Wire form: `{"n": .., "initial": .., "edges": [[i, j], ...]}` with edges ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphRecord {
    n: u32,
    initial: u32,
    edges: Vec<[u32; 2]>,
}

impl From<EventGraph> for GraphRecord {
    fn from(g: EventGraph) -> Self {
        GraphRecord {
            n: g.n,
            initial: g.initial.0,
            edges: g.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl TryFrom<GraphRecord> for EventGraph {
    type Error = GraphError;

    fn try_from(r: GraphRecord) -> Result<Self, GraphError> {
        EventGraph::new(r.n, r.initial, r.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl EventGraph {
    /// Builds a validated graph. Duplicate edges collapse.
    pub fn new(n: u32, initial: u32, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidN(n));
        }
        if initial == 0 || initial > n {
            return Err(GraphError::UnknownEvent(initial));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            for v in [i, j] {
                if v == 0 || v > n {
                    return Err(GraphError::UnknownEvent(v));
                }
            }
            if i == j {
                return Err(GraphError::Malformed(format!("self-loop on event{i}")));
            }
            set.insert((i, j));
        }
        if set.is_empty() {
            return Err(GraphError::Malformed("graph has no edges".into()));
        }
        Ok(Self {
            n,
            initial: Event(initial),
            edges: set,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn initial(&self) -> Event {
        self.initial
    }

    pub fn events(&self) -> Vec<Event> {
        crate::ltl::universe(self.n)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Event, Event)> + '_ {
        self.edges.iter().map(|&(i, j)| (Event(i), Event(j)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: Event, to: Event) -> bool {
        self.edges.contains(&(from.0, to.0))
    }

    pub fn contains(&self, e: Event) -> bool {
        e.0 >= 1 && e.0 <= self.n
    }

    /// Direct successors of `event`, strictly ascending.
    pub fn successors(&self, event: Event) -> Result<Vec<Event>, GraphError> {
        if !self.contains(event) {
            return Err(GraphError::UnknownEvent(event.0));
        }
        Ok(self
            .edges
            .range((event.0, 0)..(event.0 + 1, 0))
            .map(|&(_, j)| Event(j))
            .collect())
    }

    pub fn is_sink(&self, event: Event) -> bool {
        self.edges.range((event.0, 0)..(event.0 + 1, 0)).next().is_none()
    }

    /// Same edges, different initial event.
    pub fn with_initial(&self, initial: Event) -> Result<Self, GraphError> {
        if !self.contains(initial) {
            return Err(GraphError::UnknownEvent(initial.0));
        }
        Ok(Self {
            initial,
            ..self.clone()
        })
    }
}

/// Samples a graph: each ordered pair `(i, j)`, `i != j`, visited in
/// lexicographic order, is kept with probability `edge_prob`. An empty
/// result is redrawn from the same stream; then the initial event is drawn
/// uniformly from `1..=n`.
pub fn generate_graph(n: u32, edge_prob: f64, seed: u64) -> Result<EventGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidN(n));
    }
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(GraphError::InvalidProbability(edge_prob));
    }
    let mut rng = Stream::new(seed);
    let edges = loop {
        let mut edges = BTreeSet::new();
        for i in 1..=n {
            for j in 1..=n {
                if i != j && rng.bernoulli(edge_prob) {
                    edges.insert((i, j));
                }
            }
        }
        if !edges.is_empty() {
            break edges;
        }
    };
    let initial = Event(1 + rng.below(n as u64) as u32);
    Ok(EventGraph { n, initial, edges })
}

//! Explicit reachability over canonical configurations of one signature.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::config::CanonicalConfiguration;
use crate::protocol::Protocol;
use crate::semantics::{predecessors, successors};

pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("node budget of {budget} configurations exhausted ({explored} expanded, {queued} still queued)")]
pub struct BudgetExceeded {
    pub budget: usize,
    pub explored: usize,
    pub queued: usize,
}

pub type NodeId = usize;

/// Lazily built configuration graph shared by one query. Interns every
/// configuration it touches and caches both adjacency directions.
pub struct StateGraph<'p> {
    protocol: &'p Protocol,
    budget: usize,
    index: HashMap<CanonicalConfiguration, NodeId>,
    nodes: Vec<CanonicalConfiguration>,
    succ: Vec<Option<Vec<NodeId>>>,
    pred: Vec<Option<Vec<NodeId>>>,
}

impl<'p> StateGraph<'p> {
    pub fn new(protocol: &'p Protocol, budget: usize) -> Self {
        StateGraph {
            protocol,
            budget,
            index: HashMap::new(),
            nodes: Vec::new(),
            succ: Vec::new(),
            pred: Vec::new(),
        }
    }

    pub fn protocol(&self) -> &'p Protocol {
        self.protocol
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn config(&self, n: NodeId) -> &CanonicalConfiguration {
        &self.nodes[n]
    }

    fn over_budget(&self, queued: usize) -> BudgetExceeded {
        BudgetExceeded { budget: self.budget, explored: self.nodes.len(), queued }
    }

    pub fn intern(&mut self, c: &CanonicalConfiguration) -> Result<NodeId, BudgetExceeded> {
        if let Some(&n) = self.index.get(c) {
            return Ok(n);
        }
        if self.nodes.len() >= self.budget {
            return Err(self.over_budget(1));
        }
        let n = self.nodes.len();
        self.index.insert(c.clone(), n);
        self.nodes.push(c.clone());
        self.succ.push(None);
        self.pred.push(None);
        Ok(n)
    }

    pub fn lookup(&self, c: &CanonicalConfiguration) -> Option<NodeId> {
        self.index.get(c).copied()
    }

    /// One-step neighbours of `n` in `dir`.
    pub fn neighbours(&mut self, n: NodeId, dir: Direction) -> Result<&[NodeId], BudgetExceeded> {
        let cached = match dir {
            Direction::Forward => self.succ[n].is_some(),
            Direction::Backward => self.pred[n].is_some(),
        };
        if !cached {
            let configs = match dir {
                Direction::Forward => successors(self.protocol, &self.nodes[n]),
                Direction::Backward => predecessors(self.protocol, &self.nodes[n]),
            };
            let mut ids = Vec::with_capacity(configs.len());
            for c in &configs {
                ids.push(self.intern(c)?);
            }
            match dir {
                Direction::Forward => self.succ[n] = Some(ids),
                Direction::Backward => self.pred[n] = Some(ids),
            }
        }
        Ok(match dir {
            Direction::Forward => self.succ[n].as_deref().unwrap(),
            Direction::Backward => self.pred[n].as_deref().unwrap(),
        })
    }

    /// Nodes reachable from `start` in `dir` (including `start`), BFS order.
    pub fn closure(&mut self, start: NodeId, dir: Direction) -> Result<Vec<NodeId>, BudgetExceeded> {
        let mut seen = HashSet::from([start]);
        let mut order = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            let next = match self.neighbours(n, dir) {
                Ok(next) => next.to_vec(),
                Err(mut e) => {
                    e.queued = queue.len() + 1;
                    return Err(e);
                }
            };
            for m in next {
                if seen.insert(m) {
                    order.push(m);
                    queue.push_back(m);
                }
            }
        }
        Ok(order)
    }
}

/// Post*(c) or Pre*(c); always contains `c`.
pub fn reach_set(
    p: &Protocol,
    c: &CanonicalConfiguration,
    dir: Direction,
    budget: usize,
) -> Result<Vec<CanonicalConfiguration>, BudgetExceeded> {
    let mut g = StateGraph::new(p, budget);
    let start = g.intern(c)?;
    let ids = g.closure(start, dir)?;
    let mut out: Vec<CanonicalConfiguration> = ids.into_iter().map(|n| g.config(n).clone()).collect();
    out.sort();
    Ok(out)
}

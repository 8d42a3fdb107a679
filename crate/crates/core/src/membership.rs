//! Recursive membership of configurations in expressions.
//!
//! `PreStar(F)` at `c` explores the forward closure of `c`, evaluates `F` on
//! it and propagates backwards; `PostStar` does the same against the
//! backward closure. Results for every configuration in a closure are
//! memoised, keyed by sub-expression and configuration, for the lifetime of
//! one [`Evaluator`].

use std::collections::{HashMap, VecDeque};

use crate::config::CanonicalConfiguration;
use crate::gre::Gre;
use crate::predicate::IntervalPredicate;
use crate::protocol::Protocol;
use crate::reach::{BudgetExceeded, Direction, NodeId, StateGraph};

/// Handle of an expression registered with an [`Evaluator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExprId(usize);

enum Node {
    Atom(IntervalPredicate),
    Union(usize, usize),
    Complement(usize),
    Star(Direction, usize),
}

pub struct Evaluator<'p> {
    graph: StateGraph<'p>,
    nodes: Vec<Node>,
    memo: HashMap<(usize, NodeId), bool>,
}

impl<'p> Evaluator<'p> {
    pub fn new(p: &'p Protocol, node_budget: usize) -> Self {
        Evaluator { graph: StateGraph::new(p, node_budget), nodes: Vec::new(), memo: HashMap::new() }
    }

    pub fn graph(&mut self) -> &mut StateGraph<'p> {
        &mut self.graph
    }

    pub fn add(&mut self, e: &Gre) -> ExprId {
        ExprId(self.flatten(e))
    }

    fn flatten(&mut self, e: &Gre) -> usize {
        let node = match e {
            Gre::Atom(phi) => Node::Atom(phi.clone()),
            Gre::Union(a, b) => {
                let a = self.flatten(a);
                let b = self.flatten(b);
                Node::Union(a, b)
            }
            Gre::Complement(a) => Node::Complement(self.flatten(a)),
            // PreStar(F) holds where F is forward-reachable.
            Gre::PreStar(a) => Node::Star(Direction::Forward, self.flatten(a)),
            Gre::PostStar(a) => Node::Star(Direction::Backward, self.flatten(a)),
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn member(&mut self, e: ExprId, c: &CanonicalConfiguration) -> Result<bool, BudgetExceeded> {
        let n = self.graph.intern(c)?;
        self.eval(e.0, n)
    }

    fn eval(&mut self, e: usize, n: NodeId) -> Result<bool, BudgetExceeded> {
        match self.nodes[e] {
            Node::Atom(ref phi) => Ok(phi.eval(self.graph.config(n))),
            Node::Union(a, b) => Ok(self.eval(a, n)? || self.eval(b, n)?),
            Node::Complement(a) => Ok(!self.eval(a, n)?),
            Node::Star(dir, f) => {
                if let Some(&v) = self.memo.get(&(e, n)) {
                    return Ok(v);
                }
                if self.eval(f, n)? {
                    self.memo.insert((e, n), true);
                    return Ok(true);
                }
                self.star(e, dir, f, n)
            }
        }
    }

    fn star(&mut self, e: usize, dir: Direction, f: usize, n: NodeId) -> Result<bool, BudgetExceeded> {
        let closure = self.graph.closure(n, dir)?;
        let local: HashMap<NodeId, usize> = closure.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut back: Vec<Vec<usize>> = vec![Vec::new(); closure.len()];
        for (i, &x) in closure.iter().enumerate() {
            for y in self.graph.neighbours(x, dir)? {
                back[local[y]].push(i);
            }
        }
        let mut hit = vec![false; closure.len()];
        let mut queue = VecDeque::new();
        for (i, &x) in closure.iter().enumerate() {
            if self.eval(f, x)? {
                hit[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &back[i] {
                if !hit[j] {
                    hit[j] = true;
                    queue.push_back(j);
                }
            }
        }
        for (i, &x) in closure.iter().enumerate() {
            self.memo.insert((e, x), hit[i]);
        }
        Ok(hit[0])
    }
}

/// One-shot membership test.
pub fn member(p: &Protocol, e: &Gre, c: &CanonicalConfiguration, node_budget: usize) -> Result<bool, BudgetExceeded> {
    let mut ev = Evaluator::new(p, node_budget);
    let id = ev.add(e);
    ev.member(id, c)
}

//! Outcomes of fair runs via bottom strongly connected components.

use std::collections::{BTreeSet, HashMap};

use crate::config::CanonicalConfiguration;
use crate::protocol::{Output, Protocol};
use crate::reach::{BudgetExceeded, Direction, NodeId, StateGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FairOutcome {
    StabilisesTop,
    StabilisesBot,
    NeverStabilises,
}

impl FairOutcome {
    pub fn stabilises(b: Output) -> FairOutcome {
        match b {
            Output::Top => FairOutcome::StabilisesTop,
            Output::Bot => FairOutcome::StabilisesBot,
        }
    }
}

/// A bottom SCC reachable from the start configuration.
#[derive(Clone, Debug)]
pub struct BottomComponent {
    pub members: Vec<NodeId>,
    pub all_top: bool,
    pub all_bot: bool,
}

impl BottomComponent {
    pub fn outcomes(&self) -> Vec<FairOutcome> {
        let mut out = Vec::new();
        if self.all_top {
            out.push(FairOutcome::StabilisesTop);
        }
        if self.all_bot {
            out.push(FairOutcome::StabilisesBot);
        }
        if out.is_empty() {
            out.push(FairOutcome::NeverStabilises);
        }
        out
    }
}

/// Strongly connected components of the subgraph induced by `nodes`
/// (iterative Tarjan). Edges leaving `nodes` are ignored.
pub fn tarjan(nodes: &[NodeId], edges: impl Fn(NodeId) -> Vec<NodeId>) -> Vec<Vec<NodeId>> {
    let local: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let adj: Vec<Vec<usize>> =
        nodes.iter().map(|&n| edges(n).into_iter().filter_map(|m| local.get(&m).copied()).collect()).collect();
    let n = nodes.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, next)) = call.last() {
            if next < adj[v].len() {
                let w = adj[v][next];
                call.last_mut().unwrap().1 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(nodes[w]);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Bottom SCCs of the graph of configurations reachable from `start`.
pub fn bottom_components(g: &mut StateGraph<'_>, start: NodeId) -> Result<Vec<BottomComponent>, BudgetExceeded> {
    let reachable = g.closure(start, Direction::Forward)?;
    let mut succ: HashMap<NodeId, Vec<NodeId>> = HashMap::with_capacity(reachable.len());
    for &n in &reachable {
        succ.insert(n, g.neighbours(n, Direction::Forward)?.to_vec());
    }
    let comps = tarjan(&reachable, |n| succ[&n].clone());
    let mut comp_of: HashMap<NodeId, usize> = HashMap::with_capacity(reachable.len());
    for (i, comp) in comps.iter().enumerate() {
        for &n in comp {
            comp_of.insert(n, i);
        }
    }
    let p = g.protocol();
    let mut out = Vec::new();
    for (i, comp) in comps.into_iter().enumerate() {
        let bottom = comp.iter().all(|n| succ[n].iter().all(|m| comp_of[m] == i));
        if !bottom {
            continue;
        }
        let all_top = comp.iter().all(|&n| g.config(n).is_consensus(p, Output::Top));
        let all_bot = comp.iter().all(|&n| g.config(n).is_consensus(p, Output::Bot));
        out.push(BottomComponent { members: comp, all_top, all_bot });
    }
    Ok(out)
}

/// The set of outcomes of fair runs starting in `c`.
pub fn fair_outcomes(
    p: &Protocol,
    c: &CanonicalConfiguration,
    budget: usize,
) -> Result<BTreeSet<FairOutcome>, BudgetExceeded> {
    let mut g = StateGraph::new(p, budget);
    let start = g.intern(c)?;
    fair_outcomes_in(&mut g, start)
}

/// As [`fair_outcomes`], reusing an existing graph.
pub fn fair_outcomes_in(g: &mut StateGraph<'_>, start: NodeId) -> Result<BTreeSet<FairOutcome>, BudgetExceeded> {
    Ok(bottom_components(g, start)?.iter().flat_map(BottomComponent::outcomes).collect())
}

/// True iff some fair run from `start` does not stabilise to `b`.
pub fn some_fair_run_avoids(g: &mut StateGraph<'_>, start: NodeId, b: Output) -> Result<bool, BudgetExceeded> {
    let comps = bottom_components(g, start)?;
    Ok(comps.iter().any(|comp| match b {
        Output::Top => !comp.all_top,
        Output::Bot => !comp.all_bot,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::reach::DEFAULT_NODE_BUDGET;
    use FairOutcome::*;

    fn outcomes(p: &Protocol, data: &[Vec<(usize, u32)>]) -> BTreeSet<FairOutcome> {
        let c = CanonicalConfiguration::from_data(p.num_states(), data);
        fair_outcomes(p, &c, DEFAULT_NODE_BUDGET).unwrap()
    }

    #[test]
    fn two_full_outcomes() {
        let p = catalog::two_full();
        assert_eq!(outcomes(&p, &[vec![(0, 1), (1, 1)], vec![(0, 1), (1, 1)]]), BTreeSet::from([StabilisesTop]));
        assert_eq!(outcomes(&p, &[vec![(0, 2)]]), BTreeSet::from([StabilisesBot]));
        assert_eq!(outcomes(&p, &[vec![(0, 1), (1, 1)], vec![(0, 1)]]), BTreeSet::from([StabilisesBot]));
    }

    #[test]
    fn xor_leader_two_singletons_stabilise_to_top() {
        let p = catalog::xor_leader();
        let l1 = p.state_id("L1").unwrap();
        assert_eq!(outcomes(&p, &[vec![(l1, 1)], vec![(l1, 1)]]), BTreeSet::from([StabilisesTop]));
        assert_eq!(outcomes(&p, &[vec![(l1, 2)]]), BTreeSet::from([StabilisesBot]));
    }

    #[test]
    fn empty_configuration_is_both_consensuses() {
        let p = catalog::two_full();
        assert_eq!(outcomes(&p, &[]), BTreeSet::from([StabilisesTop, StabilisesBot]));
    }

    #[test]
    fn literal_two_full_has_a_mixed_deadlock() {
        let p = catalog::two_full_stuck();
        let o = outcomes(&p, &[vec![(0, 1), (1, 1)], vec![(0, 1), (1, 1)]]);
        assert!(o.contains(&NeverStabilises));
    }

    #[test]
    fn tarjan_on_a_small_graph() {
        // 0 -> 1 -> 2 -> 0, 2 -> 3, 3 -> 3
        let edges = |n: usize| match n {
            0 => vec![1],
            1 => vec![2],
            2 => vec![0, 3],
            _ => vec![3],
        };
        let mut comps = tarjan(&[0, 1, 2, 3], edges);
        for c in comps.iter_mut() {
            c.sort();
        }
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3]]);
    }
}

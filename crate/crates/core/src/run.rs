//! Agent-level runs of immediate-observation protocols.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::protocol::{Guard, Protocol, StateId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentDecl {
    pub name: String,
    pub datum: String,
    pub start: StateId,
}

/// `actor` moves by `transition` while observing `observed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunStep {
    pub transition: usize,
    pub actor: usize,
    pub observed: usize,
}

/// Agents are referred to by their index in `agents`; identifiers are their
/// names, and "lowest identifier" means lexicographically smallest name.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConcreteRun {
    pub agents: Vec<AgentDecl>,
    pub steps: Vec<RunStep>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepFault {
    UnknownTransition(usize),
    UnknownAgent(usize),
    ActorIsObserved,
    NotImmediateObservation,
    GuardViolated(Guard),
    ActorState { expected: StateId, found: StateId },
    ObservedState { expected: StateId, found: StateId },
}

impl fmt::Display for StepFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepFault::UnknownTransition(t) => write!(f, "transition {t} does not exist"),
            StepFault::UnknownAgent(a) => write!(f, "agent #{a} does not exist"),
            StepFault::ActorIsObserved => f.write_str("an agent cannot observe itself"),
            StepFault::NotImmediateObservation => f.write_str("transition is not an immediate observation"),
            StepFault::GuardViolated(Guard::Eq) => f.write_str("guard = violated: agents carry different data"),
            StepFault::GuardViolated(Guard::Neq) => f.write_str("guard != violated: agents carry the same datum"),
            StepFault::ActorState { expected, found } => {
                write!(f, "actor is in state #{found}, transition expects #{expected}")
            }
            StepFault::ObservedState { expected, found } => {
                write!(f, "observed agent is in state #{found}, transition expects #{expected}")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("step {step}: {fault}")]
    InvalidStep { step: usize, fault: StepFault },
    #[error("agent `{0}` declared twice")]
    DuplicateAgent(String),
    #[error("agent `{name}` starts in unknown state #{state}")]
    UnknownStartState { name: String, state: StateId },
    #[error("datum `{0}` does not occur in the run")]
    UnknownDatum(String),
    #[error("configuration index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Per-datum counts of agents by (start, end) state.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trace(pub BTreeMap<(StateId, StateId), u32>);

/// Per-datum counts of agents by (start, state at some configuration, end).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SplitTrace(pub BTreeMap<(StateId, StateId, StateId), u32>);

impl SplitTrace {
    pub fn marginal(&self) -> Trace {
        let mut t = BTreeMap::new();
        for (&(a, _, c), &k) in &self.0 {
            *t.entry((a, c)).or_default() += k;
        }
        Trace(t)
    }
}

impl ConcreteRun {
    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn datum_of(&self, agent: usize) -> &str {
        &self.agents[agent].datum
    }

    /// Distinct data in identifier order.
    pub fn data(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.agents.iter().map(|a| a.datum.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Agents of `datum` in identifier order.
    pub fn agents_of(&self, datum: &str) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.agents.len()).filter(|&a| self.agents[a].datum == datum).collect();
        v.sort_by(|&a, &b| self.agents[a].name.cmp(&self.agents[b].name));
        v
    }

    pub fn start_states(&self) -> Vec<StateId> {
        self.agents.iter().map(|a| a.start).collect()
    }

    fn check_declarations(&self, p: &Protocol) -> Result<(), RunError> {
        let mut names = BTreeSet::new();
        for a in &self.agents {
            if !names.insert(a.name.as_str()) {
                return Err(RunError::DuplicateAgent(a.name.clone()));
            }
            if a.start >= p.num_states() {
                return Err(RunError::UnknownStartState { name: a.name.clone(), state: a.start });
            }
        }
        Ok(())
    }

    /// States of every agent at every configuration: entry `i` is the
    /// configuration before step `i` (0-based), the last entry the end.
    pub fn replay(&self, p: &Protocol) -> Result<Vec<Vec<StateId>>, RunError> {
        self.check_declarations(p)?;
        let mut cur = self.start_states();
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(cur.clone());
        for (i, s) in self.steps.iter().enumerate() {
            let fail = |fault| RunError::InvalidStep { step: i + 1, fault };
            let t = p.transitions.get(s.transition).ok_or_else(|| fail(StepFault::UnknownTransition(s.transition)))?;
            for a in [s.actor, s.observed] {
                if a >= self.agents.len() {
                    return Err(fail(StepFault::UnknownAgent(a)));
                }
            }
            if s.actor == s.observed {
                return Err(fail(StepFault::ActorIsObserved));
            }
            if !t.is_immediate_observation() {
                return Err(fail(StepFault::NotImmediateObservation));
            }
            let same = self.agents[s.actor].datum == self.agents[s.observed].datum;
            if same != (t.guard == Guard::Eq) {
                return Err(fail(StepFault::GuardViolated(t.guard)));
            }
            if cur[s.observed] != t.pre[0] {
                return Err(fail(StepFault::ObservedState { expected: t.pre[0], found: cur[s.observed] }));
            }
            if cur[s.actor] != t.pre[1] {
                return Err(fail(StepFault::ActorState { expected: t.pre[1], found: cur[s.actor] }));
            }
            cur[s.actor] = t.post[1];
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn end_states(&self, p: &Protocol) -> Result<Vec<StateId>, RunError> {
        Ok(self.replay(p)?.pop().expect("replay yields the start configuration"))
    }

    /// Canonical configuration of per-agent states.
    pub fn canonical(&self, num_states: usize, states: &[StateId]) -> CanonicalConfiguration {
        let mut per_datum: HashMap<&str, Vec<u32>> = HashMap::new();
        for (a, &q) in self.agents.iter().zip(states) {
            per_datum.entry(a.datum.as_str()).or_insert_with(|| vec![0; num_states])[q] += 1;
        }
        CanonicalConfiguration::from_profiles(num_states, per_datum.into_values().map(DatumProfile::from_counts))
    }

    pub fn start_configuration(&self, num_states: usize) -> CanonicalConfiguration {
        self.canonical(num_states, &self.start_states())
    }

    /// Agents that occur in the observed slot of some step.
    pub fn observed_agents(&self) -> BTreeSet<usize> {
        self.steps.iter().map(|s| s.observed).collect()
    }

    /// Data with an agent observed by an agent of another datum.
    pub fn externally_observed_data(&self) -> BTreeSet<String> {
        self.steps
            .iter()
            .filter(|s| self.agents[s.actor].datum != self.agents[s.observed].datum)
            .map(|s| self.agents[s.observed].datum.clone())
            .collect()
    }

    /// Largest number of observed agents sharing one datum.
    pub fn max_observed_per_datum(&self) -> usize {
        let mut per: HashMap<&str, usize> = HashMap::new();
        for a in self.observed_agents() {
            *per.entry(self.datum_of(a)).or_default() += 1;
        }
        per.into_values().max().unwrap_or(0)
    }

    pub fn max_agents_per_datum(&self) -> usize {
        let mut per: HashMap<&str, usize> = HashMap::new();
        for a in &self.agents {
            *per.entry(a.datum.as_str()).or_default() += 1;
        }
        per.into_values().max().unwrap_or(0)
    }
}

/// Replays `r` and returns its end configuration.
pub fn check_run(p: &Protocol, r: &ConcreteRun) -> Result<CanonicalConfiguration, RunError> {
    let end = r.end_states(p)?;
    Ok(r.canonical(p.num_states(), &end))
}

pub(crate) fn trace_from(r: &ConcreteRun, configs: &[Vec<StateId>], datum: &str) -> Trace {
    let end = configs.last().expect("nonempty replay");
    let mut t = BTreeMap::new();
    for a in r.agents_of(datum) {
        *t.entry((configs[0][a], end[a])).or_default() += 1;
    }
    Trace(t)
}

/// `i` is a 0-based configuration index here.
pub(crate) fn split_trace_from(r: &ConcreteRun, configs: &[Vec<StateId>], datum: &str, i: usize) -> SplitTrace {
    let end = configs.last().expect("nonempty replay");
    let mut t = BTreeMap::new();
    for a in r.agents_of(datum) {
        *t.entry((configs[0][a], configs[i][a], end[a])).or_default() += 1;
    }
    SplitTrace(t)
}

pub fn trace_of(p: &Protocol, r: &ConcreteRun, datum: &str) -> Result<Trace, RunError> {
    if !r.agents.iter().any(|a| a.datum == datum) {
        return Err(RunError::UnknownDatum(datum.to_string()));
    }
    Ok(trace_from(r, &r.replay(p)?, datum))
}

/// Split trace at the `i`-th configuration, `1 ≤ i ≤ |steps| + 1`.
pub fn split_trace_of(p: &Protocol, r: &ConcreteRun, datum: &str, i: usize) -> Result<SplitTrace, RunError> {
    if !r.agents.iter().any(|a| a.datum == datum) {
        return Err(RunError::UnknownDatum(datum.to_string()));
    }
    let len = r.steps.len() + 1;
    if i == 0 || i > len {
        return Err(RunError::IndexOutOfRange { index: i, len });
    }
    Ok(split_trace_from(r, &r.replay(p)?, datum, i - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn colours_run_is_valid_and_returns_to_q1() {
        let p = catalog::colours_protocol();
        let r = catalog::colours_run();
        let end = check_run(&p, &r).unwrap();
        assert_eq!(end, CanonicalConfiguration::from_data(2, &[vec![(0, 3)], vec![(0, 2)]]));
        assert_eq!(r.replay(&p).unwrap().len(), 7);
    }

    #[test]
    fn colours_run_blue_trace() {
        let p = catalog::colours_protocol();
        let r = catalog::colours_run();
        let t = trace_of(&p, &r, "blue").unwrap();
        assert_eq!(t, Trace(BTreeMap::from([((0, 0), 3)])));
        let m = trace_of(&p, &r, "magenta").unwrap();
        assert_eq!(m, Trace(BTreeMap::from([((1, 0), 2)])));
        for i in 1..=7 {
            assert_eq!(split_trace_of(&p, &r, "blue", i).unwrap().marginal(), t);
        }
        // At the first configuration the middle state is the start state.
        let first = split_trace_of(&p, &r, "magenta", 1).unwrap();
        assert!(first.0.keys().all(|&(a, b, _)| a == b));
        assert!(split_trace_of(&p, &r, "blue", 8).is_err());
    }

    #[test]
    fn eq_step_across_data_is_rejected_at_that_step() {
        let p = catalog::colours_protocol();
        let mut r = catalog::colours_run();
        // Step 1 (a observes c, same datum) redirected to observe d.
        r.steps[0].observed = r.agent_index("d").unwrap();
        let err = check_run(&p, &r).unwrap_err();
        assert_eq!(err, RunError::InvalidStep { step: 1, fault: StepFault::GuardViolated(Guard::Eq) });
    }

    #[test]
    fn wrong_source_state_and_self_observation_are_rejected() {
        let p = catalog::colours_protocol();
        let mut r = catalog::colours_run();
        r.steps.swap(0, 1);
        assert!(matches!(
            check_run(&p, &r),
            Err(RunError::InvalidStep { step: 1, fault: StepFault::ObservedState { .. } })
        ));
        let mut r = catalog::colours_run();
        r.steps[2].observed = r.steps[2].actor;
        assert_eq!(check_run(&p, &r), Err(RunError::InvalidStep { step: 3, fault: StepFault::ActorIsObserved }));
    }

    #[test]
    fn empty_run_ends_where_it_starts() {
        let p = catalog::colours_protocol();
        let mut r = catalog::colours_run();
        r.steps.clear();
        assert_eq!(check_run(&p, &r).unwrap(), r.start_configuration(2));
    }
}

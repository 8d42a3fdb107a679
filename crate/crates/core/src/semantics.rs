//! Step semantics on canonical configurations.

use thiserror::Error;

use crate::config::CanonicalConfiguration;
use crate::protocol::{Guard, Protocol, StateId, Transition};

/// A step: which transition fires and which profile entries supply the two
/// agents. `first` supplies the agent in `pre[0]`, `second` the one in `pre[1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepInstance {
    pub transition: usize,
    pub first: usize,
    pub second: usize,
    pub same_datum: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("transition {0} does not exist")]
    UnknownTransition(usize),
    #[error("profile entry {0} does not exist")]
    UnknownEntry(usize),
    #[error("guard {guard:?} does not match a {} step", if *same_datum { "same-datum" } else { "cross-datum" })]
    GuardMismatch { guard: Guard, same_datum: bool },
    #[error("same-datum step must use a single profile entry")]
    SplitSameDatum,
    #[error("profile entry {entry} has no spare agent in state #{state}")]
    MissingAgent { entry: usize, state: StateId },
    #[error("profile entry {0} stands for a single datum, a cross-datum step needs two")]
    SingleDatum(usize),
}

fn enabled_for(c: &CanonicalConfiguration, t: &Transition, index: usize, out: &mut Vec<StepInstance>) {
    let [q1, q2] = t.pre;
    let entries = c.entries();
    match t.guard {
        Guard::Eq => {
            for (i, (prof, _)) in entries.iter().enumerate() {
                let ok = if q1 == q2 { prof.count(q1) >= 2 } else { prof.count(q1) >= 1 && prof.count(q2) >= 1 };
                if ok {
                    out.push(StepInstance { transition: index, first: i, second: i, same_datum: true });
                }
            }
        }
        Guard::Neq => {
            for (i, (pi, ki)) in entries.iter().enumerate() {
                if pi.count(q1) == 0 {
                    continue;
                }
                for (j, (pj, _)) in entries.iter().enumerate() {
                    if pj.count(q2) == 0 || (i == j && *ki < 2) {
                        continue;
                    }
                    out.push(StepInstance { transition: index, first: i, second: j, same_datum: false });
                }
            }
        }
    }
}

/// All non-idle steps enabled in `c`, sorted.
pub fn enabled_steps(p: &Protocol, c: &CanonicalConfiguration) -> Vec<StepInstance> {
    let mut out = Vec::new();
    for (i, t) in p.transitions.iter().enumerate() {
        if !t.is_idle() {
            enabled_for(c, t, i, &mut out);
        }
    }
    out.sort();
    out.dedup();
    out
}

fn check(c: &CanonicalConfiguration, t: &Transition, s: &StepInstance) -> Result<(), StepError> {
    let entries = c.entries();
    for e in [s.first, s.second] {
        if e >= entries.len() {
            return Err(StepError::UnknownEntry(e));
        }
    }
    if (t.guard == Guard::Eq) != s.same_datum {
        return Err(StepError::GuardMismatch { guard: t.guard, same_datum: s.same_datum });
    }
    let [q1, q2] = t.pre;
    if s.same_datum {
        if s.first != s.second {
            return Err(StepError::SplitSameDatum);
        }
        let prof = &entries[s.first].0;
        if prof.count(q1) == 0 {
            return Err(StepError::MissingAgent { entry: s.first, state: q1 });
        }
        let need = if q1 == q2 { 2 } else { 1 };
        if prof.count(q2) < need {
            return Err(StepError::MissingAgent { entry: s.first, state: q2 });
        }
    } else {
        if s.first == s.second && entries[s.first].1 < 2 {
            return Err(StepError::SingleDatum(s.first));
        }
        if entries[s.first].0.count(q1) == 0 {
            return Err(StepError::MissingAgent { entry: s.first, state: q1 });
        }
        if entries[s.second].0.count(q2) == 0 {
            return Err(StepError::MissingAgent { entry: s.second, state: q2 });
        }
    }
    Ok(())
}

fn fire(c: &CanonicalConfiguration, t: &Transition, s: &StepInstance) -> CanonicalConfiguration {
    let entries = c.entries();
    if s.same_datum {
        let prof = entries[s.first].0.moved2(t.pre, t.post);
        c.rebuild(&[s.first], [prof])
    } else {
        let a = entries[s.first].0.moved(t.pre[0], t.post[0]);
        let b = entries[s.second].0.moved(t.pre[1], t.post[1]);
        c.rebuild(&[s.first, s.second], [a, b])
    }
}

/// Applies `s`, rejecting it with the failed precondition if it is not enabled.
pub fn apply_step(
    p: &Protocol,
    c: &CanonicalConfiguration,
    s: &StepInstance,
) -> Result<CanonicalConfiguration, StepError> {
    let t = p.transitions.get(s.transition).ok_or(StepError::UnknownTransition(s.transition))?;
    check(c, t, s)?;
    if t.is_idle() {
        return Ok(c.clone());
    }
    Ok(fire(c, t, s))
}

fn results(
    c: &CanonicalConfiguration,
    transitions: impl Iterator<Item = Transition>,
) -> Vec<CanonicalConfiguration> {
    let mut steps = Vec::new();
    let mut out = Vec::new();
    for t in transitions {
        if t.is_idle() {
            continue;
        }
        steps.clear();
        enabled_for(c, &t, 0, &mut steps);
        for s in &steps {
            let next = fire(c, &t, s);
            if &next != c {
                out.push(next);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Distinct configurations reachable in one non-trivial step.
pub fn successors(p: &Protocol, c: &CanonicalConfiguration) -> Vec<CanonicalConfiguration> {
    results(c, p.transitions.iter().copied())
}

/// Distinct configurations that reach `c` in one non-trivial step.
pub fn predecessors(p: &Protocol, c: &CanonicalConfiguration) -> Vec<CanonicalConfiguration> {
    results(c, p.transitions.iter().map(Transition::reversed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::enumerate::configurations_with_signature;

    fn ex24(data: &[Vec<(StateId, u32)>]) -> CanonicalConfiguration {
        CanonicalConfiguration::from_data(4, data)
    }

    #[test]
    fn full_datum_enables_exactly_two_eq_steps() {
        let p = catalog::two_full();
        let c = ex24(&[vec![(0, 1), (1, 1)]]);
        let steps = enabled_steps(&p, &c);
        assert_eq!(steps.len(), 2);
        assert!(steps.iter().all(|s| s.same_datum));
        let results: Vec<_> = steps.iter().map(|s| apply_step(&p, &c, s).unwrap()).collect();
        assert!(results.contains(&ex24(&[vec![(1, 1), (2, 1)]])));
        assert!(results.contains(&ex24(&[vec![(0, 1), (2, 1)]])));
    }

    #[test]
    fn single_agent_has_no_step() {
        let p = catalog::two_full();
        assert!(enabled_steps(&p, &ex24(&[vec![(2, 1)]])).is_empty());
    }

    #[test]
    fn identical_profiles_count_as_distinct_data() {
        let p = catalog::two_full();
        let c = ex24(&[vec![(2, 1)], vec![(2, 1)]]);
        let steps = enabled_steps(&p, &c);
        assert_eq!(steps.len(), 1);
        assert!(!steps[0].same_datum);
        assert_eq!(apply_step(&p, &c, &steps[0]).unwrap(), ex24(&[vec![(2, 1)], vec![(3, 1)]]));
    }

    #[test]
    fn rejected_steps_name_the_failed_precondition() {
        let p = catalog::two_full();
        let c = ex24(&[vec![(2, 1)]]);
        let neq = p.transitions.iter().position(|t| t.guard == Guard::Neq && t.pre == [2, 2]).unwrap();
        let s = StepInstance { transition: neq, first: 0, second: 0, same_datum: false };
        assert_eq!(apply_step(&p, &c, &s), Err(StepError::SingleDatum(0)));
        let s = StepInstance { transition: neq, first: 0, second: 0, same_datum: true };
        assert!(matches!(apply_step(&p, &c, &s), Err(StepError::GuardMismatch { .. })));
        let s = StepInstance { transition: 99, first: 0, second: 0, same_datum: true };
        assert_eq!(apply_step(&p, &c, &s), Err(StepError::UnknownTransition(99)));
    }

    #[test]
    fn idle_step_leaves_configuration_unchanged() {
        let mut p = catalog::two_full();
        p.transitions.push(Transition::new(0, 1, Guard::Eq, 0, 1));
        let c = ex24(&[vec![(0, 1), (1, 1)]]);
        let s = StepInstance { transition: p.transitions.len() - 1, first: 0, second: 0, same_datum: true };
        assert_eq!(apply_step(&p, &c, &s).unwrap(), c);
        assert!(enabled_steps(&p, &c).iter().all(|s| s.transition != p.transitions.len() - 1));
    }

    #[test]
    fn steps_preserve_signature_and_are_dual_to_backward_steps() {
        for p in [catalog::two_full(), catalog::xor_leader()] {
            let n = p.num_states();
            for sig in [vec![1, 1], vec![2, 1], vec![2, 2], vec![1, 1, 1], vec![3]] {
                let space = configurations_with_signature(n, &sig);
                for c in &space {
                    for s in enabled_steps(&p, c) {
                        assert_eq!(apply_step(&p, c, &s).unwrap().signature(), c.signature());
                    }
                    for d in successors(&p, c) {
                        assert!(predecessors(&p, &d).contains(c));
                    }
                    for d in predecessors(&p, c) {
                        assert!(successors(&p, &d).contains(c));
                    }
                }
            }
        }
    }
}

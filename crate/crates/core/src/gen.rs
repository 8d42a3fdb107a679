//! Seeded random generators for protocols, predicates, expressions and runs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::gre::Gre;
use crate::predicate::{Interval, IntervalPredicate, SimpleIntervalPredicate, Upper};
use crate::protocol::{Guard, Output, Protocol, StateId, Transition};
use crate::run::{AgentDecl, ConcreteRun, RunStep};

/// Random configuration with up to `max_data` data of 1..=`max_agents` agents.
pub fn configuration(rng: &mut impl Rng, num_states: usize, max_data: usize, max_agents: u32) -> CanonicalConfiguration {
    let data = rng.gen_range(0..=max_data);
    let profiles = (0..data).map(|_| {
        let mut counts = vec![0; num_states];
        for _ in 0..rng.gen_range(1..=max_agents) {
            counts[rng.gen_range(0..num_states)] += 1;
        }
        DatumProfile::from_counts(counts)
    });
    CanonicalConfiguration::from_profiles(num_states, profiles.collect::<Vec<_>>())
}

fn interval(rng: &mut impl Rng, max_lower: u32, max_upper: Option<u32>) -> Interval {
    let lo = rng.gen_range(0..=max_lower);
    match max_upper {
        Some(hi) if lo <= hi && !rng.gen_bool(0.4) => Interval::new(lo, Upper::Finite(rng.gen_range(lo..=hi))),
        _ => Interval::at_least(lo),
    }
}

/// Random simple predicate with width ≤ `max_width` and height ≤ `max_height`.
pub fn simple_predicate(
    rng: &mut impl Rng,
    num_states: usize,
    max_width: usize,
    max_height: u32,
) -> SimpleIntervalPredicate {
    simple_predicate_bounded(rng, num_states, max_width, max_height, Some(max_height))
}

/// Random simple predicate with lower bounds ≤ `max_lower` and finite upper
/// bounds ≤ `max_upper` (none at all when `max_upper` is `None`).
pub fn simple_predicate_bounded(
    rng: &mut impl Rng,
    num_states: usize,
    max_width: usize,
    max_lower: u32,
    max_upper: Option<u32>,
) -> SimpleIntervalPredicate {
    let width = rng.gen_range(0..=max_width);
    let mut s = SimpleIntervalPredicate::new(width);
    for var in 0..width {
        for q in 0..num_states {
            if rng.gen_bool(0.5) {
                s.constrain(var, q, interval(rng, max_lower, max_upper)).expect("well-formed interval");
            }
        }
    }
    s
}

/// Random boolean combination of simple predicates, nested up to `depth`.
pub fn predicate(
    rng: &mut impl Rng,
    num_states: usize,
    max_width: usize,
    max_height: u32,
    depth: u32,
) -> IntervalPredicate {
    predicate_bounded(rng, num_states, max_width, max_height, Some(max_height), depth)
}

/// Like [`predicate`], with the bounds of [`simple_predicate_bounded`].
pub fn predicate_bounded(
    rng: &mut impl Rng,
    num_states: usize,
    max_width: usize,
    max_lower: u32,
    max_upper: Option<u32>,
    depth: u32,
) -> IntervalPredicate {
    if depth == 0 || rng.gen_bool(0.4) {
        return simple_predicate_bounded(rng, num_states, max_width, max_lower, max_upper).into();
    }
    let sub = |rng: &mut _| predicate_bounded(rng, num_states, max_width, max_lower, max_upper, depth - 1);
    match rng.gen_range(0..3) {
        0 => sub(rng).negate(),
        1 => sub(rng).and(sub(rng)),
        _ => sub(rng).or(sub(rng)),
    }
}

/// Random immediate-observation protocol over `num_states` states.
pub fn ioppud(rng: &mut impl Rng, num_states: usize) -> Protocol {
    let states: Vec<String> = (0..num_states).map(|i| format!("q{i}")).collect();
    let mut initial = BTreeSet::new();
    for q in 0..num_states {
        if rng.gen_bool(0.5) {
            initial.insert(q);
        }
    }
    if initial.is_empty() {
        initial.insert(rng.gen_range(0..num_states));
    }
    let output = (0..num_states).map(|_| Some(if rng.gen_bool(0.5) { Output::Top } else { Output::Bot })).collect();
    let mut transitions = BTreeSet::new();
    if num_states > 1 {
        for _ in 0..rng.gen_range(1..=2 * num_states + 2) {
            let observed = rng.gen_range(0..num_states);
            let from = rng.gen_range(0..num_states);
            let mut to = rng.gen_range(0..num_states - 1);
            if to >= from {
                to += 1;
            }
            let guard = if rng.gen_bool(0.5) { Guard::Eq } else { Guard::Neq };
            transitions.insert(Transition::observation(observed, from, guard, to));
        }
    }
    Protocol { states, transitions: transitions.into_iter().collect(), initial, output }
}

/// Random expression tree of depth ≤ `depth` over small atoms.
pub fn gre(rng: &mut impl Rng, num_states: usize, depth: u32) -> Gre {
    if depth == 0 || rng.gen_bool(0.3) {
        return Gre::atom(predicate(rng, num_states, 2, 2, 1));
    }
    let sub = |rng: &mut _| gre(rng, num_states, depth - 1);
    match rng.gen_range(0..4) {
        0 => sub(rng).union(sub(rng)),
        1 => sub(rng).complement(),
        2 => sub(rng).post_star(),
        _ => sub(rng).pre_star(),
    }
}

/// Random valid run: agents `a0, a1, …` spread over data `d0, d1, …`, with
/// uniformly chosen enabled steps until `max_steps` or a deadlock.
pub fn run(rng: &mut impl Rng, p: &Protocol, num_agents: usize, num_data: usize, max_steps: usize) -> ConcreteRun {
    let num_data = num_data.clamp(1, num_agents.max(1));
    let width = num_agents.to_string().len();
    let mut agents: Vec<AgentDecl> = (0..num_agents)
        .map(|i| AgentDecl {
            name: format!("a{i:0width$}"),
            datum: format!("d{}", if i < num_data { i } else { rng.gen_range(0..num_data) }),
            start: rng.gen_range(0..p.num_states()),
        })
        .collect();
    agents.shuffle(rng);
    let mut state: Vec<StateId> = agents.iter().map(|a| a.start).collect();
    let mut steps = Vec::new();
    let mut options = Vec::new();
    for _ in 0..max_steps {
        options.clear();
        for (ti, t) in p.transitions.iter().enumerate() {
            if !t.is_immediate_observation() || t.is_idle() {
                continue;
            }
            for actor in 0..agents.len() {
                if state[actor] != t.pre[1] {
                    continue;
                }
                for observed in 0..agents.len() {
                    let same = agents[actor].datum == agents[observed].datum;
                    if observed != actor && state[observed] == t.pre[0] && same == (t.guard == Guard::Eq) {
                        options.push(RunStep { transition: ti, actor, observed });
                    }
                }
            }
        }
        let Some(&s) = options.choose(rng) else { break };
        state[s.actor] = p.transitions[s.transition].post[1];
        steps.push(s);
    }
    ConcreteRun { agents, steps }
}

//! Constructive run transformations: agent and data copycats, the agents
//! and data cores, and the normalisation pipeline that chains them.
//!
//! Every operation takes a valid run of an immediate-observation protocol
//! and returns a valid run. Ties are broken by lowest identifier (name).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_bigint::BigUint;
use thiserror::Error;

use crate::protocol::{Protocol, StateId};
use crate::run::{split_trace_from, trace_from, AgentDecl, ConcreteRun, RunError, RunStep, SplitTrace, Trace};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("protocol is not immediate observation")]
    NotImmediateObservation,
    #[error("invalid input run: {0}")]
    InvalidRun(#[from] RunError),
    #[error("agent `{0}` does not occur in the run")]
    UnknownAgent(String),
    #[error("agent `{0}` already occurs in the run")]
    AgentExists(String),
    #[error("datum `{0}` does not occur in the run")]
    UnknownDatum(String),
    #[error("datum `{0}` already occurs in the run")]
    DatumExists(String),
    #[error("datum `{datum}` has {agents} agents, more than K = {k}")]
    DatumTooLarge { datum: String, agents: usize, k: u32 },
}

fn validated(p: &Protocol, r: &ConcreteRun) -> Result<Vec<Vec<StateId>>, TransformError> {
    if !p.is_immediate_observation() {
        return Err(TransformError::NotImmediateObservation);
    }
    Ok(r.replay(p)?)
}

/// Appends `'` to `base` until it is not in `taken`.
fn fresh_name(base: String, taken: &HashSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Drops agents not in `keep` and renumbers steps; every step must only
/// mention kept agents.
fn restrict(agents: &[AgentDecl], steps: &[RunStep], keep: &[bool]) -> ConcreteRun {
    let mut index = vec![usize::MAX; agents.len()];
    let mut out = Vec::new();
    for (i, a) in agents.iter().enumerate() {
        if keep[i] {
            index[i] = out.len();
            out.push(a.clone());
        }
    }
    let steps = steps
        .iter()
        .map(|s| RunStep { transition: s.transition, actor: index[s.actor], observed: index[s.observed] })
        .collect();
    ConcreteRun { agents: out, steps }
}

fn copycat_unchecked(r: &ConcreteRun, a: usize, fresh: &str) -> ConcreteRun {
    let mut agents = r.agents.clone();
    agents.push(AgentDecl { name: fresh.to_string(), datum: r.agents[a].datum.clone(), start: r.agents[a].start });
    let copy = agents.len() - 1;
    let mut steps = Vec::with_capacity(r.steps.len());
    for s in &r.steps {
        steps.push(*s);
        if s.actor == a {
            steps.push(RunStep { actor: copy, ..*s });
        }
    }
    ConcreteRun { agents, steps }
}

/// Adds `fresh` on the datum of `a`, repeating each step of `a` right after
/// it. `fresh` is never observed.
pub fn agent_copycat(p: &Protocol, r: &ConcreteRun, a: &str, fresh: &str) -> Result<ConcreteRun, TransformError> {
    validated(p, r)?;
    let idx = r.agent_index(a).ok_or_else(|| TransformError::UnknownAgent(a.to_string()))?;
    if r.agent_index(fresh).is_some() {
        return Err(TransformError::AgentExists(fresh.to_string()));
    }
    Ok(copycat_unchecked(r, idx, fresh))
}

/// Agents grouped by (datum, start, end), each group sorted by name.
fn realisation_groups(r: &ConcreteRun, configs: &[Vec<StateId>]) -> BTreeMap<(String, StateId, StateId), Vec<usize>> {
    let end = configs.last().expect("nonempty replay");
    let mut groups: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for d in r.data() {
        for a in r.agents_of(&d) {
            groups.entry((d.clone(), configs[0][a], end[a])).or_default().push(a);
        }
    }
    groups
}

/// Reduces every (datum, start, end) class larger than `|Q|` to at most
/// `|Q|` agents.
pub fn agents_core(p: &Protocol, r: &ConcreteRun) -> Result<ConcreteRun, TransformError> {
    Ok(agents_core_with_origins(p, r)?.0)
}

/// As [`agents_core`]; also returns for each output step the 1-based index
/// of the input step it stems from.
pub fn agents_core_with_origins(p: &Protocol, r: &ConcreteRun) -> Result<(ConcreteRun, Vec<usize>), TransformError> {
    validated(p, r)?;
    let limit = p.num_states();
    let mut run = r.clone();
    let mut origins: Vec<usize> = (1..=r.steps.len()).collect();
    loop {
        let configs = run.replay(p)?;
        let groups = realisation_groups(&run, &configs);
        let Some(group) = groups.into_values().find(|g| g.len() > limit) else {
            return Ok((run, origins));
        };
        (run, origins) = shrink_agents(&run, &origins, &configs, &group);
    }
}

struct Representative {
    agent: usize,
    first: usize,
    last: usize,
    alpha: usize,
    beta: usize,
}

/// One class of same (datum, start, end) agents, `group` sorted by name.
fn shrink_agents(
    r: &ConcreteRun,
    origins: &[usize],
    configs: &[Vec<StateId>],
    group: &[usize],
) -> (ConcreteRun, Vec<usize>) {
    let mut in_group = vec![false; r.agents.len()];
    for &a in group {
        in_group[a] = true;
    }
    let visited: BTreeSet<StateId> = configs.iter().flat_map(|c| group.iter().map(|&a| c[a])).collect();
    let mut reps = Vec::new();
    let mut rep_of: HashMap<StateId, usize> = HashMap::new();
    for (k, &q) in visited.iter().enumerate() {
        let at = |i: usize| group.iter().copied().find(|&a| configs[i][a] == q);
        let first = (0..configs.len()).find(|&i| at(i).is_some()).expect("visited state");
        let last = (0..configs.len()).rev().find(|&i| at(i).is_some()).expect("visited state");
        let agent = group[k];
        rep_of.insert(q, agent);
        reps.push(Representative { agent, first, last, alpha: at(first).unwrap(), beta: at(last).unwrap() });
    }
    let mut steps = Vec::new();
    let mut new_origins = Vec::new();
    for (i, s) in r.steps.iter().enumerate() {
        let observed = if in_group[s.observed] { rep_of[&configs[i][s.observed]] } else { s.observed };
        if !in_group[s.actor] {
            steps.push(RunStep { observed, ..*s });
            new_origins.push(origins[i]);
        }
        for rep in &reps {
            if (i < rep.first && s.actor == rep.alpha) || (i >= rep.last && s.actor == rep.beta) {
                steps.push(RunStep { transition: s.transition, actor: rep.agent, observed });
                new_origins.push(origins[i]);
            }
        }
    }
    let mut keep = vec![true; r.agents.len()];
    for &a in &group[reps.len()..] {
        keep[a] = false;
    }
    (restrict(&r.agents, &steps, &keep), new_origins)
}

fn data_copycat_named(r: &ConcreteRun, d: &str, fresh_datum: &str, names: &HashMap<usize, String>) -> ConcreteRun {
    let mut agents = r.agents.clone();
    let mut copy = HashMap::new();
    for a in r.agents_of(d) {
        copy.insert(a, agents.len());
        agents.push(AgentDecl { name: names[&a].clone(), datum: fresh_datum.to_string(), start: r.agents[a].start });
    }
    let mut steps = Vec::with_capacity(r.steps.len());
    for s in &r.steps {
        steps.push(*s);
        if let Some(&c) = copy.get(&s.actor) {
            // Same-datum observations stay inside the copy.
            let observed = copy.get(&s.observed).copied().unwrap_or(s.observed);
            steps.push(RunStep { transition: s.transition, actor: c, observed });
        }
    }
    ConcreteRun { agents, steps }
}

/// Adds a datum `fresh_datum` whose agents mimic those of `d`; it is never
/// externally observed. New agents are named `__<fresh_datum>_<original>`.
pub fn data_copycat(p: &Protocol, r: &ConcreteRun, d: &str, fresh_datum: &str) -> Result<ConcreteRun, TransformError> {
    validated(p, r)?;
    if !r.agents.iter().any(|a| a.datum == d) {
        return Err(TransformError::UnknownDatum(d.to_string()));
    }
    if r.agents.iter().any(|a| a.datum == fresh_datum) {
        return Err(TransformError::DatumExists(fresh_datum.to_string()));
    }
    let mut taken: HashSet<String> = r.agents.iter().map(|a| a.name.clone()).collect();
    let mut names = HashMap::new();
    for a in r.agents_of(d) {
        let name = fresh_name(format!("__{fresh_datum}_{}", r.agents[a].name), &taken);
        taken.insert(name.clone());
        names.insert(a, name);
    }
    Ok(data_copycat_named(r, d, fresh_datum, &names))
}

/// `(K+1)^(|Q|³+|Q|²)`.
pub fn data_core_bound(k: u32, num_states: usize) -> BigUint {
    let q = num_states as u32;
    BigUint::from(k + 1).pow(q.pow(3) + q.pow(2))
}

fn trace_groups(r: &ConcreteRun, configs: &[Vec<StateId>]) -> BTreeMap<Trace, Vec<String>> {
    let mut groups: BTreeMap<Trace, Vec<String>> = BTreeMap::new();
    for d in r.data() {
        groups.entry(trace_from(r, configs, &d)).or_default().push(d);
    }
    groups
}

/// Reduces every set of data sharing one trace to one datum per split
/// trace realised by that set.
pub fn data_core(p: &Protocol, r: &ConcreteRun, k: u32) -> Result<ConcreteRun, TransformError> {
    let configs = validated(p, r)?;
    for d in r.data() {
        let agents = r.agents_of(&d).len();
        if agents > k as usize {
            return Err(TransformError::DatumTooLarge { datum: d, agents, k });
        }
    }
    let traces: Vec<Trace> = trace_groups(r, &configs).into_keys().collect();
    let mut run = r.clone();
    for tr in traces {
        let configs = run.replay(p)?;
        let data = trace_groups(&run, &configs).remove(&tr).unwrap_or_default();
        let split: HashMap<&str, Vec<SplitTrace>> = data
            .iter()
            .map(|d| (d.as_str(), (0..configs.len()).map(|i| split_trace_from(&run, &configs, d, i)).collect()))
            .collect();
        let realised: BTreeSet<&SplitTrace> = split.values().flatten().collect();
        if data.len() > realised.len() {
            run = shrink_data(&run, &configs, &data, &split, &realised.into_iter().cloned().collect::<Vec<_>>());
        }
    }
    Ok(run)
}

/// Pairs agents of two data with equal keys, both sides in name order.
fn pair_by_key(
    r: &ConcreteRun,
    from: &str,
    to: &str,
    key_from: impl Fn(usize) -> (StateId, StateId, StateId),
    key_to: impl Fn(usize) -> (StateId, StateId, StateId),
) -> HashMap<usize, usize> {
    let mut pool: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for b in r.agents_of(to).into_iter().rev() {
        pool.entry(key_to(b)).or_default().push(b);
    }
    r.agents_of(from)
        .into_iter()
        .map(|a| (a, pool.get_mut(&key_from(a)).and_then(Vec::pop).expect("matching split traces")))
        .collect()
}

struct SplitClass {
    first: usize,
    last: usize,
    delta: String,
    epsilon: String,
    /// δ-agent to η-agent.
    f_inv: HashMap<usize, usize>,
    /// ε-agent to η-agent.
    l_inv: HashMap<usize, usize>,
}

/// `data` share one trace and are sorted by name; `realised` is the sorted
/// list of their split traces.
fn shrink_data(
    r: &ConcreteRun,
    configs: &[Vec<StateId>],
    data: &[String],
    split: &HashMap<&str, Vec<SplitTrace>>,
    realised: &[SplitTrace],
) -> ConcreteRun {
    let end = configs.last().expect("nonempty replay");
    let mut classes = Vec::new();
    for (k, st) in realised.iter().enumerate() {
        let at = |i: usize| data.iter().find(|d| &split[d.as_str()][i] == st);
        let first = (0..configs.len()).find(|&i| at(i).is_some()).expect("realised");
        let last = (0..configs.len()).rev().find(|&i| at(i).is_some()).expect("realised");
        let delta = at(first).unwrap().clone();
        let epsilon = at(last).unwrap().clone();
        let eta = &data[k];
        let f = pair_by_key(r, eta, &delta, |a| (configs[0][a], 0, end[a]), |b| (configs[0][b], 0, end[b]));
        let g = pair_by_key(
            r,
            &delta,
            &epsilon,
            |a| (configs[0][a], configs[first][a], end[a]),
            |b| (configs[0][b], configs[last][b], end[b]),
        );
        let f_inv = f.iter().map(|(&e, &d)| (d, e)).collect();
        let l_inv = f.iter().map(|(&e, d)| (g[d], e)).collect();
        classes.push(SplitClass { first, last, delta, epsilon, f_inv, l_inv });
    }
    let index: HashMap<&SplitTrace, usize> = realised.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let member: HashSet<&str> = data.iter().map(String::as_str).collect();

    let mut steps = Vec::new();
    for (i, s) in r.steps.iter().enumerate() {
        let d_o = r.datum_of(s.observed);
        let rerouted = if member.contains(d_o) {
            let class = &classes[index[&split[d_o][i]]];
            let q = configs[i][s.observed];
            let witness = r
                .agents_of(&class.delta)
                .into_iter()
                .find(|&b| configs[class.first][b] == q)
                .expect("observed state is held by δ at its first index");
            class.f_inv[&witness]
        } else {
            s.observed
        };
        let d_a = r.datum_of(s.actor);
        if !member.contains(d_a) {
            steps.push(RunStep { observed: rerouted, ..*s });
            continue;
        }
        let eq = r.agents[s.actor].datum == r.agents[s.observed].datum;
        for class in &classes {
            let (map, actor) = if i < class.first && d_a == class.delta {
                (&class.f_inv, class.f_inv[&s.actor])
            } else if i >= class.last && d_a == class.epsilon {
                (&class.l_inv, class.l_inv[&s.actor])
            } else {
                continue;
            };
            let observed = if eq { map[&s.observed] } else { rerouted };
            steps.push(RunStep { transition: s.transition, actor, observed });
        }
    }
    let kept: HashSet<&str> = data[..realised.len()].iter().map(String::as_str).collect();
    let keep: Vec<bool> = r.agents.iter().map(|a| !member.contains(a.datum.as_str()) || kept.contains(a.datum.as_str())).collect();
    restrict(&r.agents, &steps, &keep)
}

/// Same start and end configuration as `r`, at most `|Q|³` observed agents
/// per datum and at most `(|Q|³+1)^(|Q|³+|Q|²)` externally observed data.
/// Agent names and their order are those of `r`.
pub fn normalize_run(p: &Protocol, r: &ConcreteRun) -> Result<ConcreteRun, TransformError> {
    let configs = validated(p, r)?;
    let k = (p.num_states() as u32).pow(3);
    let r1 = agents_core(p, r)?;
    let c1 = r1.replay(p)?;
    let r2 = data_core(p, &r1, k)?;
    let c2 = r2.replay(p)?;

    // Put back removed data, each as a copy of a survivor with its trace.
    let sources = trace_groups(&r2, &c2);
    let kept: HashSet<String> = r2.data().into_iter().collect();
    let (end1, end2) = (c1.last().unwrap(), c2.last().unwrap());
    let mut run = r2.clone();
    for d in r1.data().into_iter().filter(|d| !kept.contains(d)) {
        let src = &sources[&trace_from(&r1, &c1, &d)][0];
        let mut pool: BTreeMap<(StateId, StateId), Vec<usize>> = BTreeMap::new();
        for b in r1.agents_of(&d).into_iter().rev() {
            pool.entry((c1[0][b], end1[b])).or_default().push(b);
        }
        let names: HashMap<usize, String> = r2
            .agents_of(src)
            .into_iter()
            .map(|a| {
                let b = pool.get_mut(&(c2[0][a], end2[a])).and_then(Vec::pop).expect("equal traces");
                (run.agent_index(&r2.agents[a].name).unwrap(), r1.agents[b].name.clone())
            })
            .collect();
        run = data_copycat_named(&run, src, &d, &names);
    }

    // Put back removed agents as copycats of a same-class survivor.
    let end = configs.last().unwrap();
    let present: HashSet<String> = run.agents.iter().map(|a| a.name.clone()).collect();
    let class_of = |a: usize| (r.agents[a].datum.clone(), configs[0][a], end[a]);
    let mut survivor: BTreeMap<(String, StateId, StateId), usize> = BTreeMap::new();
    for a in 0..r.agents.len() {
        if present.contains(&r.agents[a].name) {
            let e = survivor.entry(class_of(a)).or_insert(a);
            if r.agents[a].name < r.agents[*e].name {
                *e = a;
            }
        }
    }
    for a in 0..r.agents.len() {
        if !present.contains(&r.agents[a].name) {
            let src = survivor[&class_of(a)];
            let idx = run.agent_index(&r.agents[src].name).unwrap();
            run = copycat_unchecked(&run, idx, &r.agents[a].name);
        }
    }
    Ok(reorder_like(&run, r))
}

/// Permutes the agents of `run` into the order of `like` (same name set).
fn reorder_like(run: &ConcreteRun, like: &ConcreteRun) -> ConcreteRun {
    let pos: HashMap<&str, usize> = like.agents.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
    let mut agents = like.agents.clone();
    let mut index = vec![0; run.agents.len()];
    for (i, a) in run.agents.iter().enumerate() {
        index[i] = pos[a.name.as_str()];
        agents[index[i]] = a.clone();
    }
    let steps = run
        .steps
        .iter()
        .map(|s| RunStep { transition: s.transition, actor: index[s.actor], observed: index[s.observed] })
        .collect();
    ConcreteRun { agents, steps }
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.

use std::collections::{BTreeSet, HashMap};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ppud_core::bounds::{alpha, beta, bound_report, f, g, poly1, poly2};
use ppud_core::container::{container_of, container_to_predicate, equiv, predicate_to_containers, Container};
use ppud_core::enumerate::{configurations, for_each_configuration, initial_configurations};
use ppud_core::fairness::{fair_outcomes, some_fair_run_avoids, FairOutcome};
use ppud_core::gre::{build_unstable_gre, build_wellspec_gre, Gre};
use ppud_core::membership::Evaluator;
use ppud_core::predicate::IntervalPredicate;
use ppud_core::reach::{Direction, StateGraph, DEFAULT_NODE_BUDGET};
use ppud_core::reduction::{compile_2cm, initial_config_2cm, violation_free, Counter, CounterMachine, Instruction, Role};
use ppud_core::run::{check_run, ConcreteRun};
use ppud_core::transform::{agents_core, agents_core_with_origins, data_core, data_core_bound, normalize_run};
use ppud_core::{catalog, gen, text, CanonicalConfiguration, Output, Protocol};

/// Criteria that cannot hold as stated; see the README. Their FAIL lines are
/// printed but do not fail the target.
const UNATTAINABLE: &[u32] = &[5, 10];

type Check = Result<String, String>;

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("took {:.1}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
    } else {
        Ok(())
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let p = catalog::two_full();
    let phi = catalog::two_full_predicate();
    let configs = initial_configurations(&p, 3, 2, false);
    for c in &configs {
        let out = fair_outcomes(&p, c, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        let expected = if phi.eval(c) { FairOutcome::StabilisesTop } else { FairOutcome::StabilisesBot };
        if out != BTreeSet::from([expected]) {
            return Err(format!("{c:?}: outcomes {out:?}, expected {{{expected:?}}}"));
        }
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("{} initial configurations, {:.2}s", configs.len(), start.elapsed().as_secs_f64()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut checked = 0;
    for i in 0..60 {
        let ns = rng.gen_range(1..=4);
        let p = gen::ioppud(&mut rng, ns);
        let mut ev = Evaluator::new(&p, DEFAULT_NODE_BUDGET);
        let ids = [Output::Top, Output::Bot].map(|b| (b, ev.add(&build_unstable_gre(&p, b))));
        let mut oracle = StateGraph::new(&p, DEFAULT_NODE_BUDGET);
        for c in initial_configurations(&p, 2, 2, false) {
            let node = oracle.intern(&c).map_err(|e| e.to_string())?;
            for (b, id) in ids {
                let by_expr = ev.member(id, &c).map_err(|e| e.to_string())?;
                let by_scc = some_fair_run_avoids(&mut oracle, node, b).map_err(|e| e.to_string())?;
                if by_expr != by_scc {
                    return Err(format!("protocol {i}, {c:?}, {b:?}: expression {by_expr}, scc {by_scc}"));
                }
                checked += 1;
            }
        }
    }
    within(Duration::from_secs(300), start)?;
    Ok(format!("60 protocols, {checked} (configuration, output) pairs, {:.2}s", start.elapsed().as_secs_f64()))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let p = catalog::xor_leader();
    let configs = initial_configurations(&p, 3, 2, false);
    for c in &configs {
        let out = fair_outcomes(&p, c, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        let even_singletons = c.num_data() % 2 == 0 && c.data().all(|d| d.total() == 1);
        let expected = if even_singletons { FairOutcome::StabilisesTop } else { FairOutcome::StabilisesBot };
        if out != BTreeSet::from([expected]) {
            return Err(format!("{c:?}: outcomes {out:?}, expected {{{expected:?}}}"));
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{} initial configurations, {:.2}s", configs.len(), start.elapsed().as_secs_f64()))
}

/// Every configuration over `ns` states with ≤ 3 data of ≤ 3 agents.
fn scale(ns: usize) -> Vec<CanonicalConfiguration> {
    configurations(ns, 3, 3)
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut containers_checked = 0;
    let mut pairs = 0u64;
    for ns in 1..=3 {
        let all = scale(ns);
        for n in 1..=2 {
            for m in 1..=2 {
                let conts: Vec<Container> = all.iter().map(|c| container_of(c, n, m)).collect();
                let mut classes: HashMap<&Container, usize> = HashMap::new();
                for (i, k) in conts.iter().enumerate() {
                    classes.entry(k).or_insert(i);
                }
                for (&k, &rep) in &classes {
                    let phi = container_to_predicate(k);
                    for (c2, k2) in all.iter().zip(&conts) {
                        // same container is the definition of equivalence
                        if phi.eval(c2) != (k2 == k) {
                            return Err(format!("|Q|={ns} n={n} M={m}: predicate of {:?} wrong on {c2:?}", all[rep]));
                        }
                        pairs += 1;
                    }
                    let back = predicate_to_containers(&phi, ns, n, m, 10_000_000).map_err(|e| e.to_string())?;
                    if back != vec![k.clone()] {
                        return Err(format!("|Q|={ns} n={n} M={m}: predicate_to_containers gave {} containers", back.len()));
                    }
                    containers_checked += 1;
                }
                if !all.iter().all(|c| equiv(c, &all[0], n, m) == (container_of(c, n, m) == conts[0])) {
                    return Err("equiv disagrees with container equality".into());
                }
            }
        }
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{containers_checked} containers, {pairs} predicate evaluations, {:.2}s", start.elapsed().as_secs_f64()))
}

/// Full check, then the same check restricted to finite upper bounds below n.
fn criterion_5() -> (Check, Check) {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(5);
    let mut counterexample = None;
    let mut disagreeing = 0;
    let mut sub_fail = None;
    for ns in 1..=3 {
        let all = scale(ns);
        let names = gen::ioppud(&mut StdRng::seed_from_u64(0), ns);
        let key = |n, m| -> Vec<Container> { all.iter().map(|c| container_of(c, n, m)).collect() };
        let keys: HashMap<(u32, u32), Vec<Container>> =
            [(1, 1), (1, 2), (2, 1), (2, 2)].into_iter().map(|(n, m)| ((n, m), key(n, m))).collect();
        for (&(n2, m2), fine) in &keys {
            for (&(n1, m1), coarse) in &keys {
                if n1 > n2 || m1 > m2 {
                    continue;
                }
                let mut seen: HashMap<&Container, &Container> = HashMap::new();
                for (f, c) in fine.iter().zip(coarse) {
                    if *seen.entry(f).or_insert(c) != c {
                        let e = format!("|Q|={ns}: ({n2},{m2})-equivalence does not refine ({n1},{m1})");
                        return (Err(e.clone()), Err(e));
                    }
                }
            }
        }
        let mut sorted: Vec<_> = keys.iter().collect();
        sorted.sort_by_key(|(k, _)| **k);
        for (&(n, m), conts) in sorted {
            let disagreement = |phi: &IntervalPredicate| {
                let mut value: HashMap<&Container, (bool, &CanonicalConfiguration)> = HashMap::new();
                for (c, k) in all.iter().zip(conts) {
                    let v = phi.eval(c);
                    let (w, other) = *value.entry(k).or_insert((v, c));
                    if w != v {
                        return Some((other.clone(), c.clone()));
                    }
                }
                None
            };
            for _ in 0..100 {
                let phi = gen::predicate(&mut rng, ns, m as usize, n, 2);
                if phi.height() > n || phi.width() > m as usize {
                    let e = "generator exceeded the requested height or width".to_string();
                    return (Err(e.clone()), Err(e));
                }
                if let Some((a, b)) = disagreement(&phi) {
                    disagreeing += 1;
                    counterexample.get_or_insert_with(|| {
                        format!(
                            "|Q|={ns} n={n} M={m}: `{}` holds on exactly one of [{}] and [{}]",
                            text::write_predicate(&names, &phi).trim_end().replace('\n', " "),
                            text::config_summary(&names, &a),
                            text::config_summary(&names, &b)
                        )
                    });
                }
                let below = gen::predicate_bounded(&mut rng, ns, m as usize, n, Some(n - 1), 2);
                if sub_fail.is_none() && disagreement(&below).is_some() {
                    sub_fail = Some(format!("|Q|={ns} n={n} M={m}: `{}`", text::write_predicate(&names, &below).trim_end()));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let full = match counterexample {
        None => Ok(format!("|Q| <= 3, n, M <= 2, 100 predicates per (n, M), {secs:.2}s")),
        Some(c) => Err(format!(
            "{disagreeing} of 1200 predicates separate equivalent configurations; first: {c}; a finite upper bound equal to n tells count n from n + 1"
        )),
    };
    let sub = match sub_fail {
        None => Ok("refinement holds and 1200 predicates with finite upper bounds < n agree on every class".to_string()),
        Some(e) => Err(format!("equivalent configurations disagree: {e}")),
    };
    (full, sub)
}

fn endpoints(p: &Protocol, r: &ConcreteRun) -> Result<(CanonicalConfiguration, CanonicalConfiguration), String> {
    let end = r.end_states(p).map_err(|e| e.to_string())?;
    Ok((r.start_configuration(p.num_states()), r.canonical(p.num_states(), &end)))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(6);
    let mut runs = 0;
    let mut shrunk = 0;
    while runs < 500 {
        let ns = rng.gen_range(2..=3);
        let p = gen::ioppud(&mut rng, ns);
        let agents = rng.gen_range(1..=30);
        let data = rng.gen_range(1..=6);
        let steps = rng.gen_range(0..=40);
        let r = gen::run(&mut rng, &p, agents, data, steps);
        check_run(&p, &r).map_err(|e| format!("generator produced an invalid run: {e}"))?;
        runs += 1;
        let q3 = ns.pow(3);
        let bound = data_core_bound(q3 as u32, ns);
        let fail = |what: &str| Err(format!("run {runs} (|Q|={ns}, {agents} agents, {data} data): {what}"));

        let a = agents_core(&p, &r).map_err(|e| e.to_string())?;
        if check_run(&p, &a).is_err() {
            return fail("agents_core output does not replay");
        }
        if a.max_agents_per_datum() > q3 {
            return fail("agents_core left more than |Q|^3 agents on a datum");
        }
        let k = r.max_agents_per_datum() as u32;
        let d = data_core(&p, &r, k).map_err(|e| e.to_string())?;
        if check_run(&p, &d).is_err() {
            return fail("data_core output does not replay");
        }
        if BigUint::from(d.data().len()) > data_core_bound(k, ns) {
            return fail("data_core kept too many data");
        }
        let nr = normalize_run(&p, &r).map_err(|e| e.to_string())?;
        if check_run(&p, &nr).is_err() {
            return fail("normalize_run output does not replay");
        }
        if endpoints(&p, &nr)? != endpoints(&p, &r)? {
            return fail("normalize_run changed the start or end configuration");
        }
        if nr.max_observed_per_datum() > q3 {
            return fail("normalize_run observes more than |Q|^3 agents of a datum");
        }
        if BigUint::from(nr.externally_observed_data().len()) > bound {
            return fail("normalize_run observes too many data");
        }
        if a.agents.len() < r.agents.len() {
            shrunk += 1;
        }
    }
    within(Duration::from_secs(300), start)?;
    Ok(format!("{runs} runs, agents_core shrank {shrunk}, {:.2}s", start.elapsed().as_secs_f64()))
}

fn criterion_7() -> Check {
    let p = catalog::colours_protocol();
    let input = catalog::colours_run();
    let (r, origins) = agents_core_with_origins(&p, &input).map_err(|e| e.to_string())?;
    check_run(&p, &r).map_err(|e| e.to_string())?;
    let names: Vec<&str> = r.agents.iter().map(|a| a.name.as_str()).collect();
    let steps: Vec<(&str, usize, &str)> = r
        .steps
        .iter()
        .map(|s| (r.agents[s.actor].name.as_str(), s.transition, r.agents[s.observed].name.as_str()))
        .collect();
    let expected = [("b", 0, "a"), ("d", 1, "b"), ("e", 1, "b"), ("b", 3, "a")];
    if names != ["a", "b", "d", "e"] || steps != expected || origins != [1, 2, 5, 6] {
        return Err(format!("agents {names:?}, steps {steps:?}, origins {origins:?}"));
    }
    // input steps 2 and 5 now both observe the blue representative b
    for (i, &o) in origins.iter().enumerate() {
        if (o == 2 || o == 5) && steps[i].2 != "b" {
            return Err(format!("input step {o} observes {}", steps[i].2));
        }
    }
    let was = input.agents[input.steps[1].observed].name.as_str();
    Ok(format!("5 -> 4 agents; input step 2 re-targeted from {was} to b, step 5 observes b"))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..100 {
        let ns = rng.gen_range(2..=4);
        let p = gen::ioppud(&mut rng, ns);
        let e = gen::gre(&mut rng, ns, 3);
        let mut c = gen::configuration(&mut rng, ns, 2, 2);
        while c.is_empty() {
            c = gen::configuration(&mut rng, ns, 2, 2);
        }
        let mut ev = Evaluator::new(&p, DEFAULT_NODE_BUDGET);
        let mut at = |x: &Gre| -> Result<bool, String> {
            let id = ev.add(x);
            ev.member(id, &c).map_err(|e| e.to_string())
        };
        let base = at(&e)?;
        let post = at(&e.clone().post_star())?;
        let pre = at(&e.clone().pre_star())?;
        let laws = [
            ("double complement", at(&e.clone().complement().complement())? == base),
            ("union idempotence", at(&e.clone().union(e.clone()))? == base),
            ("post* idempotence", at(&e.clone().post_star().post_star())? == post),
            ("pre* idempotence", at(&e.clone().pre_star().pre_star())? == pre),
            ("E in post*(E)", !base || post),
            ("E in pre*(E)", !base || pre),
        ];
        if let Some((law, _)) = laws.iter().find(|(_, ok)| !ok) {
            return Err(format!("triple {i}: {law} fails"));
        }
    }
    Ok(format!("100 triples, 6 laws each, {:.2}s", start.elapsed().as_secs_f64()))
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let cp = compile_2cm(&CounterMachine::new(vec![Instruction::Inc(Counter::X), Instruction::Halt]).unwrap())
        .map_err(|e| e.to_string())?;
    let c0 = initial_config_2cm(&cp, 1, 1);
    let sinks = cp.states_of(|r| r == Role::SinkBot);
    let halts = cp.states_of(|r| r == Role::Instruction(2));
    let mut g = StateGraph::new(&cp.protocol, DEFAULT_NODE_BUDGET);
    let s = g.intern(&c0).map_err(|e| e.to_string())?;
    let reached = g.closure(s, Direction::Forward).map_err(|e| e.to_string())?;
    let hit = reached.iter().any(|&n| {
        let c = g.config(n);
        sinks.iter().all(|&q| c.count_in(q) == 0) && halts.iter().any(|&q| c.count_in(q) > 0)
    });
    if !hit {
        return Err(format!("[inc x; halt]: no sink-free halting configuration among {} reachable", reached.len()));
    }

    let looping = compile_2cm(
        &CounterMachine::new(vec![Instruction::ZeroTest(Counter::X, 1), Instruction::Halt]).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let p = &looping.protocol;
    let init: Vec<_> = p.initial.iter().copied().collect();
    let mut total = 0u64;
    let mut clean = 0u64;
    let mut bad = None;
    let _ = for_each_configuration(p.num_states(), &init, 4, 3, |c| {
        total += 1;
        if c.is_empty() || !violation_free(&looping, &c) {
            return std::ops::ControlFlow::Continue(());
        }
        clean += 1;
        match fair_outcomes(p, &c, DEFAULT_NODE_BUDGET) {
            Ok(out) if out == BTreeSet::from([FairOutcome::StabilisesBot]) => std::ops::ControlFlow::Continue(()),
            Ok(out) => {
                bad = Some(format!("{c:?}: {out:?}"));
                std::ops::ControlFlow::Break(())
            }
            Err(e) => {
                bad = Some(e.to_string());
                std::ops::ControlFlow::Break(())
            }
        }
    });
    if let Some(b) = bad {
        return Err(format!("loop machine: {b}"));
    }
    within(Duration::from_secs(600), start)?;
    Ok(format!(
        "halting run found in {} configurations; loop machine: {clean} of {total} initial configurations violation-free, all StabilisesBot, {:.2}s",
        reached.len(),
        start.elapsed().as_secs_f64()
    ))
}

/// `Ok` on the attainable domain `n ≥ 2, M ≥ 1`; the full grid's verdict is
/// returned separately.
fn criterion_10() -> (Check, Check) {
    let mut f_fail = Vec::new();
    let mut g_fail = Vec::new();
    let mut attainable_fail = Vec::new();
    let mut points = 0;
    for s in 1..=10u64 {
        let p1 = poly1(s);
        let p2 = usize::try_from(&poly2(s)).unwrap();
        for n in 1..=10u64 {
            if f(s, n) > BigUint::from(n) * &p1 {
                f_fail.push((s, n));
            }
            let npow = num_traits::pow(BigUint::from(n), p2);
            for m in 1..=10u64 {
                points += 1;
                if g(s, n, m) > BigUint::from(m) * &npow {
                    g_fail.push((s, n, m));
                    if n >= 2 {
                        attainable_fail.push((s, n, m));
                    }
                }
            }
        }
        // α, β and the witness bound stay exact and factored
        let a = alpha(s, 3, 4);
        let b = beta(s, 3, 4);
        if a != BigUint::from(3u32) * num_traits::pow(p1.clone(), 4) || b.exponent != &p1 * poly2(s) * BigUint::from(16u32)
        {
            f_fail.push((s, 0));
        }
    }
    let p = catalog::two_full();
    let r = bound_report(&p, &build_wellspec_gre(&p, false), 2, 1);
    let witness_ok = r.witness_agent_bound.base == BigUint::from(r.norm);
    let sub = if attainable_fail.is_empty() && f_fail.is_empty() && witness_ok {
        Ok(format!("f and g inequalities hold on all {} points with n >= 2", points - 100))
    } else {
        Err(format!("f failures {f_fail:?}, g failures with n >= 2 {attainable_fail:?}"))
    };
    let full = if f_fail.is_empty() && g_fail.is_empty() {
        Ok(format!("all {points} points"))
    } else {
        let ns: BTreeSet<u64> = g_fail.iter().map(|x| x.1).collect();
        Err(format!(
            "g(n, M) <= M*n^poly2(|P|) fails at {} of {points} points, all with n in {ns:?}; at n = 1 the right side is M while g(1, M) > M for every polynomial",
            g_fail.len()
        ))
    };
    (full, sub)
}

/// Criteria with a restricted variant return (full, restricted).
fn split(check: fn() -> (Check, Check)) -> (Check, Option<Check>) {
    let (full, sub) = check();
    (full, Some(sub))
}

type Criterion = (u32, &'static str, &'static str, Box<dyn Fn() -> (Check, Option<Check>)>);

fn main() -> ExitCode {
    let plain = |check: fn() -> Check| (check(), None);
    let criteria: [Criterion; 10] = [
        (1, "example protocol outcomes match the two-full-data predicate", "", Box::new(move || plain(criterion_1))),
        (2, "expression membership matches the SCC fairness oracle", "", Box::new(move || plain(criterion_2))),
        (3, "leader-election protocol outcomes", "", Box::new(move || plain(criterion_3))),
        (4, "container predicate round trip", "", Box::new(move || plain(criterion_4))),
        (
            5,
            "equivalence refinement and predicate transfer",
            "finite upper bounds < n",
            Box::new(|| split(criterion_5)),
        ),
        (6, "run transformations on random runs", "", Box::new(move || plain(criterion_6))),
        (7, "five-agent run agents core golden", "", Box::new(move || plain(criterion_7))),
        (8, "expression algebra laws", "", Box::new(move || plain(criterion_8))),
        (9, "counter machine reduction", "", Box::new(move || plain(criterion_9))),
        (10, "bound inequalities on n, M, |P| <= 10", "n >= 2", Box::new(|| split(criterion_10))),
    ];
    let mut failed = false;
    for (id, name, restriction, check) in criteria {
        let (full, sub) = check();
        match &full {
            Ok(d) => println!("criterion {id:>2} PASS: {name}: {d}"),
            Err(d) => {
                println!("criterion {id:>2} FAIL: {name}: {d}");
                failed |= !UNATTAINABLE.contains(&id);
            }
        }
        // A restricted variant is always required to pass.
        match &sub {
            Some(Ok(d)) => println!("criterion {id:>2} ({restriction}) PASS: {d}"),
            Some(Err(d)) => {
                println!("criterion {id:>2} ({restriction}) FAIL: {d}");
                failed = true;
            }
            None => {}
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

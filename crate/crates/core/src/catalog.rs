//! Small reference protocols, predicates and runs.

use crate::predicate::{Interval, IntervalPredicate, SimpleIntervalPredicate};
use crate::protocol::{Guard, Protocol};
use crate::run::{AgentDecl, ConcreteRun, RunStep};

use Guard::{Eq, Neq};

fn two_full_with(absorbed: &[&'static str]) -> Protocol {
    let mut trans = vec![("q1", "q0", Eq, "q1", "q2"), ("q0", "q1", Eq, "q0", "q2"), ("q2", "q2", Neq, "q2", "q3")];
    for &q in absorbed {
        trans.push(("q3", q, Eq, "q3", "q3"));
        trans.push(("q3", q, Neq, "q3", "q3"));
    }
    Protocol::with_names(&["q0", "q1", "q2", "q3"], &["q0", "q1"], &["q3"], &trans)
}

/// Outputs ⊤ iff two data each have agents in both q0 and q1.
///
/// Once q3 is covered every other agent, q0 included, moves there.
pub fn two_full() -> Protocol {
    two_full_with(&["q0", "q1", "q2"])
}

/// Variant where only q1 and q2 agents are drawn to q3. Agents left in q0
/// get stuck, so it is not well-specified.
pub fn two_full_stuck() -> Protocol {
    two_full_with(&["q1", "q2"])
}

/// [`two_full`] plus a ⊥ copy `q4` of `q3`, entered nondeterministically.
pub fn two_full_nondeterministic() -> Protocol {
    let mut trans = vec![
        ("q1", "q0", Eq, "q1", "q2"),
        ("q0", "q1", Eq, "q0", "q2"),
        ("q2", "q2", Neq, "q2", "q3"),
        ("q2", "q2", Neq, "q2", "q4"),
    ];
    for q in ["q0", "q1", "q2"] {
        for sink in ["q3", "q4"] {
            trans.push((sink, q, Eq, sink, sink));
            trans.push((sink, q, Neq, sink, sink));
        }
    }
    Protocol::with_names(&["q0", "q1", "q2", "q3", "q4"], &["q0", "q1"], &["q3"], &trans)
}

/// `∃̇ x1, x2. #(q0,xi) ≥ 1 ∧ #(q1,xi) ≥ 1` over the states of [`two_full`].
pub fn two_full_predicate() -> IntervalPredicate {
    let mut s = SimpleIntervalPredicate::new(2);
    for var in 0..2 {
        for q in 0..2 {
            s.constrain(var, q, Interval::at_least(1)).expect("valid bound");
        }
    }
    s.into()
}

/// Leader election by XOR: ⊤ iff an even number of data appear and each has
/// exactly one agent. Not an immediate-observation protocol.
pub fn xor_leader() -> Protocol {
    let states = ["L0", "L1", "N0", "N1", "dead"];
    let l = |b: usize| ["L0", "L1"][b];
    let n = |b: usize| ["N0", "N1"][b];
    let mut trans = Vec::new();
    for b in 0..2 {
        for c in 0..2 {
            for g in [Eq, Neq] {
                trans.push((l(b), l(c), g, l(b ^ c), n(b ^ c)));
                if b != c {
                    trans.push((l(b), n(c), g, l(b), n(b)));
                }
            }
        }
    }
    for p in states {
        for q in states {
            if (p, q) != ("dead", "dead") {
                trans.push((p, q, Eq, "dead", "dead"));
            }
        }
    }
    for q in states {
        if q != "dead" {
            trans.push((q, "dead", Neq, "dead", "dead"));
        }
    }
    Protocol::with_names(&states, &["L1"], &["L0", "N0"], &trans)
}

/// Two-state protocol carrying the six transitions of the five-agent run.
pub fn colours_protocol() -> Protocol {
    Protocol::with_names(
        &["q1", "q2"],
        &["q1", "q2"],
        &["q1"],
        &[
            ("q1", "q1", Eq, "q1", "q2"),
            ("q2", "q2", Neq, "q2", "q1"),
            ("q1", "q1", Neq, "q1", "q2"),
            ("q1", "q2", Eq, "q1", "q1"),
        ],
    )
}

/// Five agents over two data: a, b, c (blue) in q1 and d, e (magenta) in q2.
pub fn colours_run() -> ConcreteRun {
    let agents = [("a", "blue", 0), ("b", "blue", 0), ("c", "blue", 0), ("d", "magenta", 1), ("e", "magenta", 1)]
        .iter()
        .map(|&(name, datum, start)| AgentDecl { name: name.into(), datum: datum.into(), start })
        .collect();
    let idx = |n: &str| ["a", "b", "c", "d", "e"].iter().position(|&x| x == n).unwrap();
    let steps = [("a", 0, "c"), ("d", 1, "a"), ("a", 1, "e"), ("b", 2, "d"), ("e", 1, "b"), ("b", 3, "a")]
        .iter()
        .map(|&(actor, transition, observed)| RunStep { transition, actor: idx(actor), observed: idx(observed) })
        .collect();
    ConcreteRun { agents, steps }
}

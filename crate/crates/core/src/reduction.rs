//! Compilation of two-counter machines into protocols with data whose
//! well-specification encodes non-halting.
//!
//! Every state is a main state paired with `R` or `o`, recording whether the
//! agent started in the reservoir. States are named `<main>@R` / `<main>@o`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::protocol::{Guard, Output, Protocol, StateId, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Counter {
    X,
    Y,
}

impl Counter {
    pub const BOTH: [Counter; 2] = [Counter::X, Counter::Y];

    pub fn letter(self) -> char {
        match self {
            Counter::X => 'x',
            Counter::Y => 'y',
        }
    }
}

/// Instruction targets are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instruction {
    Inc(Counter),
    Dec(Counter),
    ZeroTest(Counter, usize),
    Halt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterMachine {
    pub instructions: Vec<Instruction>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("machine has no instructions")]
    Empty,
    #[error("instruction {at} jumps to {target}, outside 1..={len}")]
    TargetOutOfRange { at: usize, target: usize, len: usize },
}

impl CounterMachine {
    pub fn new(instructions: Vec<Instruction>) -> Result<Self, MachineError> {
        let m = CounterMachine { instructions };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let len = self.instructions.len();
        if len == 0 {
            return Err(MachineError::Empty);
        }
        for (i, ins) in self.instructions.iter().enumerate() {
            if let Instruction::ZeroTest(_, target) = *ins {
                if target == 0 || target > len {
                    return Err(MachineError::TargetOutOfRange { at: i + 1, target, len });
                }
            }
        }
        Ok(())
    }
}

/// Phase of a counter-control agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Idle,
    Inc,
    Dec,
    Done,
    ZeroTest,
    IsZero,
    Positive,
}

impl Op {
    pub const ALL: [Op; 7] = [Op::Idle, Op::Inc, Op::Dec, Op::Done, Op::ZeroTest, Op::IsZero, Op::Positive];

    fn suffix(self) -> &'static str {
        match self {
            Op::Idle => "idle",
            Op::Inc => "inc",
            Op::Dec => "dec",
            Op::Done => "done",
            Op::ZeroTest => "zt",
            Op::IsZero => "eq0",
            Op::Positive => "gt0",
        }
    }
}

/// Main state, before pairing with the start flag. Instructions are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Instruction(usize),
    InstructionPrimed(usize),
    CounterValue(Counter),
    CounterControl(Counter, Op),
    Reservoir,
    Uniq,
    SinkBot,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Role::Instruction(m) => write!(f, "i{m}"),
            Role::InstructionPrimed(m) => write!(f, "i{m}'"),
            Role::CounterValue(c) => write!(f, "C{}", c.letter()),
            Role::CounterControl(c, op) => write!(f, "cc{}_{}", c.letter(), op.suffix()),
            Role::Reservoir => f.write_str("R"),
            Role::Uniq => f.write_str("Uniq"),
            Role::SinkBot => f.write_str("sink"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    StartedInR,
    StartedOther,
}

impl Origin {
    fn tag(self) -> &'static str {
        match self {
            Origin::StartedInR => "R",
            Origin::StartedOther => "o",
        }
    }
}

/// Transition families of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    InputViolation,
    CounterColourViolation,
    CounterControlViolation,
    ControlStateViolation,
    ConvertToSink,
    StartIncrement,
    Increment,
    EndOperation,
    StartDecrement,
    Decrement,
    ZeroTestStart,
    IsZero,
    Positive,
    EndZeroTestZero,
    EndZeroTestPositive,
}

impl Family {
    pub fn is_violation(self) -> bool {
        matches!(
            self,
            Family::InputViolation
                | Family::CounterColourViolation
                | Family::CounterControlViolation
                | Family::ControlStateViolation
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledProtocol {
    pub protocol: Protocol,
    /// Indexed by state.
    pub roles: Vec<(Role, Origin)>,
    /// Indexed by transition.
    pub families: Vec<Family>,
    pub machine: CounterMachine,
}

impl CompiledProtocol {
    pub fn state(&self, role: Role, origin: Origin) -> StateId {
        self.roles.iter().position(|&r| r == (role, origin)).expect("every role exists in both origins")
    }

    pub fn states_of(&self, pred: impl Fn(Role) -> bool) -> Vec<StateId> {
        (0..self.roles.len()).filter(|&q| pred(self.roles[q].0)).collect()
    }

    pub fn main_states(&self) -> Vec<Role> {
        main_roles(self.machine.instructions.len())
    }
}

fn main_roles(n: usize) -> Vec<Role> {
    let mut v: Vec<Role> = (1..=n).map(Role::Instruction).collect();
    v.extend((1..=n).map(Role::InstructionPrimed));
    v.extend(Counter::BOTH.map(Role::CounterValue));
    for c in Counter::BOTH {
        v.extend(Op::ALL.map(|op| Role::CounterControl(c, op)));
    }
    v.extend([Role::Reservoir, Role::Uniq, Role::SinkBot]);
    v
}

/// A rule over main states; `guard: None` stands for both guards.
struct Rule {
    pre: [Role; 2],
    guard: Option<Guard>,
    post: [Role; 2],
    family: Family,
}

fn rule(p: Role, p2: Role, guard: Option<Guard>, q: Role, q2: Role, family: Family) -> Rule {
    Rule { pre: [p, p2], guard, post: [q, q2], family }
}

fn rules(m: &CounterMachine) -> Vec<Rule> {
    use Role::*;
    let n = m.instructions.len();
    let mains = main_roles(n);
    let cm: Vec<Role> = mains.iter().copied().filter(|r| matches!(r, Instruction(_) | InstructionPrimed(_))).collect();
    let mut out = Vec::new();
    for c in Counter::BOTH {
        for b in Op::ALL {
            out.push(rule(CounterControl(c, b), CounterValue(c), Some(Guard::Neq), SinkBot, SinkBot, Family::CounterColourViolation));
            for b2 in Op::ALL {
                out.push(rule(CounterControl(c, b), CounterControl(c, b2), None, SinkBot, SinkBot, Family::CounterControlViolation));
            }
        }
    }
    for &q in &cm {
        for &q2 in &cm {
            out.push(rule(q, q2, None, SinkBot, SinkBot, Family::ControlStateViolation));
        }
    }
    for &q in &mains {
        out.push(rule(SinkBot, q, None, SinkBot, SinkBot, Family::ConvertToSink));
    }
    let next = |k: usize| (k < n).then_some(Instruction(k + 1));
    for (i, ins) in m.instructions.iter().enumerate() {
        let k = i + 1;
        match *ins {
            self::Instruction::Inc(c) => out.push(rule(
                Instruction(k),
                CounterControl(c, Op::Idle),
                None,
                InstructionPrimed(k),
                CounterControl(c, Op::Inc),
                Family::StartIncrement,
            )),
            self::Instruction::Dec(c) => out.push(rule(
                Instruction(k),
                CounterControl(c, Op::Idle),
                None,
                InstructionPrimed(k),
                CounterControl(c, Op::Dec),
                Family::StartDecrement,
            )),
            self::Instruction::ZeroTest(c, target) => {
                out.push(rule(
                    Instruction(k),
                    CounterControl(c, Op::Idle),
                    None,
                    InstructionPrimed(k),
                    CounterControl(c, Op::ZeroTest),
                    Family::ZeroTestStart,
                ));
                out.push(rule(
                    InstructionPrimed(k),
                    CounterControl(c, Op::IsZero),
                    None,
                    Instruction(target),
                    CounterControl(c, Op::Idle),
                    Family::EndZeroTestZero,
                ));
                if let Some(to) = next(k) {
                    out.push(rule(
                        InstructionPrimed(k),
                        CounterControl(c, Op::Positive),
                        None,
                        to,
                        CounterControl(c, Op::Idle),
                        Family::EndZeroTestPositive,
                    ));
                }
            }
            self::Instruction::Halt => {}
        }
    }
    for c in Counter::BOTH {
        let cc = |op| CounterControl(c, op);
        out.push(rule(cc(Op::Inc), Reservoir, Some(Guard::Eq), cc(Op::Done), CounterValue(c), Family::Increment));
        out.push(rule(cc(Op::Dec), CounterValue(c), Some(Guard::Eq), cc(Op::Done), Reservoir, Family::Decrement));
        out.push(rule(cc(Op::ZeroTest), Uniq, None, Reservoir, cc(Op::IsZero), Family::IsZero));
        out.push(rule(cc(Op::ZeroTest), CounterValue(c), None, cc(Op::Positive), CounterValue(c), Family::Positive));
        for k in 1..=n {
            if let Some(to) = next(k) {
                out.push(rule(cc(Op::Done), InstructionPrimed(k), None, cc(Op::Idle), to, Family::EndOperation));
            }
        }
    }
    out
}

/// Builds the protocol. Syntactically idle transitions and transitions whose
/// target instruction does not exist are omitted; the first family to emit a
/// transition names it.
pub fn compile_2cm(m: &CounterMachine) -> Result<CompiledProtocol, MachineError> {
    m.validate()?;
    let mains = main_roles(m.instructions.len());
    let origins = [Origin::StartedInR, Origin::StartedOther];
    let mut roles = Vec::new();
    for &r in &mains {
        for o in origins {
            roles.push((r, o));
        }
    }
    let id = |r: Role, o: Origin| roles.iter().position(|&x| x == (r, o)).unwrap();
    let states: Vec<String> = roles.iter().map(|(r, o)| format!("{r}@{}", o.tag())).collect();

    let mut seen = BTreeSet::new();
    let mut transitions = Vec::new();
    let mut families = Vec::new();
    let mut push = |t: Transition, family: Family| {
        if !t.is_idle() && seen.insert(t) {
            transitions.push(t);
            families.push(family);
        }
    };
    for r in rules(m) {
        let guards = match r.guard {
            Some(g) => vec![g],
            None => vec![Guard::Eq, Guard::Neq],
        };
        for o1 in origins {
            for o2 in origins {
                for &g in &guards {
                    // Same-datum pairs of non-reservoir agents only violate.
                    if g == Guard::Eq && o1 == Origin::StartedOther && o2 == Origin::StartedOther {
                        continue;
                    }
                    push(
                        Transition::new(id(r.pre[0], o1), id(r.pre[1], o2), g, id(r.post[0], o1), id(r.post[1], o2)),
                        r.family,
                    );
                }
            }
        }
    }
    let other = Origin::StartedOther;
    for &p in &mains {
        for &p2 in &mains {
            let sink = id(Role::SinkBot, other);
            push(Transition::new(id(p, other), id(p2, other), Guard::Eq, sink, sink), Family::InputViolation);
        }
    }

    let initial = [
        (Role::Reservoir, Origin::StartedInR),
        (Role::Uniq, other),
        (Role::CounterControl(Counter::X, Op::Idle), other),
        (Role::CounterControl(Counter::Y, Op::Idle), other),
        (Role::Instruction(1), other),
    ]
    .iter()
    .map(|&(r, o)| id(r, o))
    .collect();
    let output = roles
        .iter()
        .map(|&(r, _)| match r {
            Role::Instruction(k) if m.instructions[k - 1] == Instruction::Halt => Some(Output::Top),
            _ => Some(Output::Bot),
        })
        .collect();
    let protocol = Protocol { states, transitions, initial, output };
    Ok(CompiledProtocol { protocol, roles, families, machine: m.clone() })
}

/// One agent in `i1`, one in each idle counter control and one `Uniq` agent
/// on each of `uniq_data` further data, all on pairwise distinct data; every
/// datum also carries `reservoir_per_datum` reservoir agents.
pub fn initial_config_2cm(cp: &CompiledProtocol, uniq_data: usize, reservoir_per_datum: u32) -> CanonicalConfiguration {
    assert!(uniq_data >= 1, "at least one Uniq datum");
    let ns = cp.protocol.num_states();
    let other = Origin::StartedOther;
    let reservoir = cp.state(Role::Reservoir, Origin::StartedInR);
    let leaders = [
        Role::Instruction(1),
        Role::CounterControl(Counter::X, Op::Idle),
        Role::CounterControl(Counter::Y, Op::Idle),
    ];
    let profile = |q: StateId| {
        let mut counts = vec![0; ns];
        counts[q] += 1;
        counts[reservoir] += reservoir_per_datum;
        DatumProfile::from_counts(counts)
    };
    let mut profiles: Vec<DatumProfile> = leaders.iter().map(|&r| profile(cp.state(r, other))).collect();
    profiles.extend((0..uniq_data).map(|_| profile(cp.state(Role::Uniq, other))));
    CanonicalConfiguration::from_profiles(ns, profiles)
}

/// True when no violation transition is enabled in `c`.
pub fn violation_free(cp: &CompiledProtocol, c: &CanonicalConfiguration) -> bool {
    crate::semantics::enabled_steps(&cp.protocol, c).iter().all(|s| !cp.families[s.transition].is_violation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::for_each_configuration;
    use crate::fairness::{fair_outcomes, FairOutcome};
    use crate::reach::{reach_set, Direction, DEFAULT_NODE_BUDGET};
    use crate::semantics::enabled_steps;
    use std::ops::ControlFlow;
    use Instruction::*;

    fn inc_halt() -> CompiledProtocol {
        compile_2cm(&CounterMachine::new(vec![Inc(Counter::X), Halt]).unwrap()).unwrap()
    }

    fn zero_loop() -> CompiledProtocol {
        compile_2cm(&CounterMachine::new(vec![ZeroTest(Counter::X, 1)]).unwrap()).unwrap()
    }

    #[test]
    fn machine_validation() {
        assert_eq!(CounterMachine::new(vec![]), Err(MachineError::Empty));
        assert_eq!(
            CounterMachine::new(vec![ZeroTest(Counter::Y, 3), Halt]),
            Err(MachineError::TargetOutOfRange { at: 1, target: 3, len: 2 })
        );
    }

    #[test]
    fn shape_of_compiled_protocol() {
        for cp in [inc_halt(), zero_loop()] {
            let n = cp.machine.instructions.len();
            assert_eq!(cp.protocol.num_states(), 2 * (2 * n + 2 + 14 + 3));
            assert!(cp.protocol.validate().is_empty());
            let top: Vec<StateId> = cp.protocol.states_with_output(Output::Top);
            let halts: Vec<StateId> = cp.states_of(|r| matches!(r, Role::Instruction(k) if cp.machine.instructions[k - 1] == Halt));
            assert_eq!(top, halts);
        }
        let cp = inc_halt();
        assert_eq!(cp.protocol.state_name(cp.state(Role::InstructionPrimed(1), Origin::StartedOther)), "i1'@o");
        assert_eq!(cp.protocol.state_name(cp.state(Role::CounterControl(Counter::Y, Op::Positive), Origin::StartedInR)), "ccy_gt0@R");
    }

    #[test]
    fn sink_is_absorbing_and_converts_everything() {
        let cp = inc_halt();
        let sinks = cp.states_of(|r| r == Role::SinkBot);
        for t in &cp.protocol.transitions {
            for k in 0..2 {
                if sinks.contains(&t.pre[k]) {
                    assert!(sinks.contains(&t.post[k]));
                }
            }
        }
        for &s in &sinks {
            for q in 0..cp.protocol.num_states() {
                // Sink pairs are syntactically idle.
                if sinks.contains(&q) {
                    continue;
                }
                for g in [Guard::Eq, Guard::Neq] {
                    assert!(cp.protocol.transitions.iter().any(|t| t.pre == [s, q] && t.guard == g && sinks.contains(&t.post[1])));
                }
            }
        }
    }

    #[test]
    fn input_violation_overrides_same_datum_pairs_of_other_agents() {
        let cp = inc_halt();
        let sink = cp.state(Role::SinkBot, Origin::StartedOther);
        let others = cp.states_of(|_| true).into_iter().filter(|&q| cp.roles[q].1 == Origin::StartedOther).collect::<Vec<_>>();
        for (i, t) in cp.protocol.transitions.iter().enumerate() {
            if t.guard == Guard::Eq && others.contains(&t.pre[0]) && others.contains(&t.pre[1]) {
                assert_eq!(t.post, [sink, sink]);
                assert!(cp.families[i] == Family::InputViolation || t.pre.contains(&sink));
            }
        }
    }

    #[test]
    fn initial_configuration_layout() {
        let cp = inc_halt();
        let c = initial_config_2cm(&cp, 1, 1);
        let reservoir = cp.state(Role::Reservoir, Origin::StartedInR);
        assert_eq!(c.num_agents() - c.count_in(reservoir), 4);
        assert_eq!(c.num_data(), 4);
        assert!(c.is_initial(&cp.protocol));
        assert!(violation_free(&cp, &c));
    }

    #[test]
    fn inc_then_halt_reaches_halt_without_sink() {
        let cp = inc_halt();
        let halt = cp.state(Role::Instruction(2), Origin::StartedOther);
        let sinks = cp.states_of(|r| r == Role::SinkBot);
        let reach = reach_set(&cp.protocol, &initial_config_2cm(&cp, 1, 1), Direction::Forward, DEFAULT_NODE_BUDGET).unwrap();
        assert!(reach.iter().any(|c| c.count_in(halt) == 1 && sinks.iter().all(|&s| c.count_in(s) == 0)));
    }

    #[test]
    fn observations_hold_on_explored_edges() {
        let cp = compile_2cm(
            &CounterMachine::new(vec![Inc(Counter::X), ZeroTest(Counter::X, 4), Dec(Counter::X), Halt]).unwrap(),
        )
        .unwrap();
        let role = |q: StateId| cp.roles[q].0;
        let groups: Vec<Box<dyn Fn(Role) -> bool>> = vec![
            Box::new(|r| matches!(r, Role::Instruction(_) | Role::InstructionPrimed(_))),
            Box::new(|r| matches!(r, Role::CounterControl(Counter::X, _))),
            Box::new(|r| matches!(r, Role::CounterControl(Counter::Y, _))),
        ];
        let reach = reach_set(&cp.protocol, &initial_config_2cm(&cp, 2, 2), Direction::Forward, DEFAULT_NODE_BUDGET).unwrap();
        let mut edges = 0;
        for c in &reach {
            for s in enabled_steps(&cp.protocol, c) {
                edges += 1;
                let t = cp.protocol.transitions[s.transition];
                let pre = t.pre.map(role);
                let post = t.post.map(role);
                if post.contains(&Role::SinkBot) {
                    continue;
                }
                for g in &groups {
                    assert_eq!(pre.iter().filter(|&&r| g(r)).count(), post.iter().filter(|&&r| g(r)).count());
                }
                for k in 0..2 {
                    let counter = |r: Role| matches!(r, Role::CounterValue(_));
                    if counter(pre[k]) != counter(post[k]) {
                        let cv = if let Role::CounterValue(c) = pre[k] { c } else if let Role::CounterValue(c) = post[k] { c } else { unreachable!() };
                        assert!(matches!(pre[1 - k], Role::CounterControl(c, _) if c == cv));
                        assert!(s.same_datum);
                    }
                }
            }
        }
        assert!(edges > 0);
    }

    #[test]
    fn non_halting_loop_stabilises_to_bot() {
        let cp = zero_loop();
        let p = &cp.protocol;
        let init: Vec<StateId> = p.initial.iter().copied().collect();
        let mut checked = 0;
        let flow: ControlFlow<()> = for_each_configuration(p.num_states(), &init, 2, 2, |c| {
            if !c.is_empty() && violation_free(&cp, &c) {
                checked += 1;
                assert_eq!(fair_outcomes(p, &c, DEFAULT_NODE_BUDGET).unwrap(), BTreeSet::from([FairOutcome::StabilisesBot]));
            }
            ControlFlow::Continue(())
        });
        assert!(flow.is_continue() && checked > 0);
    }
}

//! Protocols: states, guarded pairwise transitions, initial states and outputs.

use std::collections::BTreeSet;
use std::fmt;

/// Index of a state in [`Protocol::states`].
pub type StateId = usize;

/// Data condition of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    /// Both agents carry the same datum.
    Eq,
    /// The agents carry different data.
    Neq,
}

impl Guard {
    pub fn symbol(self) -> &'static str {
        match self {
            Guard::Eq => "=",
            Guard::Neq => "!=",
        }
    }
}

/// Boolean output of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Top,
    Bot,
}

impl Output {
    pub const BOTH: [Output; 2] = [Output::Top, Output::Bot];

    pub fn negate(self) -> Output {
        match self {
            Output::Top => Output::Bot,
            Output::Bot => Output::Top,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Output::Top => "top",
            Output::Bot => "bot",
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// `((pre[0], pre[1]), guard, (post[0], post[1]))`.
///
/// Agent 0 is the observed agent in the immediate-observation shape, agent 1
/// is the one that moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub pre: [StateId; 2],
    pub guard: Guard,
    pub post: [StateId; 2],
}

impl Transition {
    pub fn new(q1: StateId, q2: StateId, guard: Guard, q3: StateId, q4: StateId) -> Self {
        Transition { pre: [q1, q2], guard, post: [q3, q4] }
    }

    /// `q_from →[observed, guard] q_to`.
    pub fn observation(observed: StateId, from: StateId, guard: Guard, to: StateId) -> Self {
        Transition::new(observed, from, guard, observed, to)
    }

    pub fn is_idle(&self) -> bool {
        self.pre == self.post
    }

    pub fn is_immediate_observation(&self) -> bool {
        self.pre[0] == self.post[0]
    }

    /// The syntactic reverse `(q3,q4) → (q1,q2)` used for backward exploration.
    pub fn reversed(&self) -> Transition {
        Transition { pre: self.post, guard: self.guard, post: self.pre }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub states: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial: BTreeSet<StateId>,
    /// Indexed by state. `None` only in malformed protocols.
    pub output: Vec<Option<Output>>,
}

/// One violated protocol invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    DuplicateState(String),
    UnknownStateInTransition { transition: usize, state: StateId },
    UnknownInitialState(StateId),
    EmptyInitialSet,
    MissingOutput(String),
    OutputTableSize { expected: usize, found: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateState(s) => write!(f, "state `{s}` declared twice"),
            Diagnostic::UnknownStateInTransition { transition, state } => {
                write!(f, "transition {transition} references unknown state #{state}")
            }
            Diagnostic::UnknownInitialState(s) => write!(f, "initial state #{s} is not a state"),
            Diagnostic::EmptyInitialSet => f.write_str("no initial state"),
            Diagnostic::MissingOutput(s) => write!(f, "state `{s}` has no output"),
            Diagnostic::OutputTableSize { expected, found } => {
                write!(f, "output table has {found} entries for {expected} states")
            }
        }
    }
}

impl Protocol {
    /// Builds a protocol from state names; `output` lists the states whose
    /// output is ⊤, all others output ⊥.
    pub fn with_names(
        states: &[&str],
        initial: &[&str],
        top: &[&str],
        transitions: &[(&str, &str, Guard, &str, &str)],
    ) -> Protocol {
        let states: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let id = |name: &str| {
            states
                .iter()
                .position(|s| s == name)
                .unwrap_or_else(|| panic!("unknown state `{name}`"))
        };
        let initial = initial.iter().map(|s| id(s)).collect();
        let output = states
            .iter()
            .map(|s| Some(if top.contains(&s.as_str()) { Output::Top } else { Output::Bot }))
            .collect();
        let transitions = transitions
            .iter()
            .map(|&(a, b, g, c, d)| Transition::new(id(a), id(b), g, id(c), id(d)))
            .collect();
        Protocol { states, transitions, initial, output }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Size metric |P|, the number of states.
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn is_initial(&self, q: StateId) -> bool {
        self.initial.contains(&q)
    }

    /// Output of `q`; panics on malformed protocols.
    pub fn output_of(&self, q: StateId) -> Output {
        self.output[q].expect("protocol output is total")
    }

    pub fn states_with_output(&self, b: Output) -> Vec<StateId> {
        (0..self.num_states()).filter(|&q| self.output[q] == Some(b)).collect()
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let n = self.states.len();
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.as_str()) {
                diags.push(Diagnostic::DuplicateState(s.clone()));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let mut bad: Vec<StateId> = t.pre.iter().chain(t.post.iter()).copied().filter(|&q| q >= n).collect();
            bad.dedup();
            for state in bad {
                diags.push(Diagnostic::UnknownStateInTransition { transition: i, state });
            }
        }
        if self.initial.is_empty() {
            diags.push(Diagnostic::EmptyInitialSet);
        }
        for &q in &self.initial {
            if q >= n {
                diags.push(Diagnostic::UnknownInitialState(q));
            }
        }
        if self.output.len() != n {
            diags.push(Diagnostic::OutputTableSize { expected: n, found: self.output.len() });
        } else {
            for (q, o) in self.output.iter().enumerate() {
                if o.is_none() {
                    diags.push(Diagnostic::MissingOutput(self.states[q].clone()));
                }
            }
        }
        diags
    }

    pub fn is_immediate_observation(&self) -> bool {
        self.transitions.iter().all(Transition::is_immediate_observation)
    }
}

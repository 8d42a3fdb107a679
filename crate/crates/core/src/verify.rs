//! Bounded emptiness and the verification problems built on it.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::config::CanonicalConfiguration;
use crate::enumerate::for_each_configuration;
use crate::gre::{self, Gre};
use crate::membership::Evaluator;
use crate::predicate::IntervalPredicate;
use crate::protocol::{Output, Protocol, StateId};
use crate::reach::{BudgetExceeded, DEFAULT_NODE_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    pub max_data: usize,
    pub max_agents_per_datum: u32,
}

impl SearchBounds {
    pub fn new(max_data: usize, max_agents_per_datum: u32) -> Self {
        assert!(max_data >= 1 && max_agents_per_datum >= 1, "search bounds must be positive");
        SearchBounds { max_data, max_agents_per_datum }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub node_budget: usize,
    /// Whether the empty configuration counts as initial.
    pub include_empty: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { node_budget: DEFAULT_NODE_BUDGET, include_empty: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No member within the bounds.
    Empty { up_to: SearchBounds },
    NonEmpty { witness: CanonicalConfiguration },
    Inconclusive { reason: BudgetExceeded, checked: usize },
}

impl Verdict {
    pub fn is_empty(&self) -> bool {
        matches!(self, Verdict::Empty { .. })
    }

    pub fn witness(&self) -> Option<&CanonicalConfiguration> {
        match self {
            Verdict::NonEmpty { witness } => Some(witness),
            _ => None,
        }
    }
}

/// Enumerates configurations within `bounds` in (agents, data, canonical)
/// order and returns the first member of `e`.
pub fn emptiness(p: &Protocol, e: &Gre, bounds: SearchBounds, opts: VerifyOptions) -> Verdict {
    let mut ev = Evaluator::new(p, opts.node_budget);
    let id = ev.add(e);
    let all: Vec<StateId> = (0..p.num_states()).collect();
    let mut checked = 0;
    let flow = for_each_configuration(p.num_states(), &all, bounds.max_data, bounds.max_agents_per_datum, |c| {
        checked += 1;
        match ev.member(id, &c) {
            Ok(true) => ControlFlow::Break(Verdict::NonEmpty { witness: c }),
            Ok(false) => ControlFlow::Continue(()),
            Err(reason) => ControlFlow::Break(Verdict::Inconclusive { reason, checked }),
        }
    });
    match flow {
        ControlFlow::Break(v) => v,
        ControlFlow::Continue(()) => Verdict::Empty { up_to: bounds },
    }
}

pub fn check_well_specification(p: &Protocol, bounds: SearchBounds, opts: VerifyOptions) -> Verdict {
    emptiness(p, &gre::build_wellspec_gre(p, opts.include_empty), bounds, opts)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("predicate mentions non-initial state `{0}`")]
    NonInitialState(String),
}

/// One emptiness verdict per output value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectnessReport {
    pub top: Verdict,
    pub bot: Verdict,
}

impl CorrectnessReport {
    pub fn is_correct(&self) -> bool {
        self.top.is_empty() && self.bot.is_empty()
    }

    pub fn verdict(&self, b: Output) -> &Verdict {
        match b {
            Output::Top => &self.top,
            Output::Bot => &self.bot,
        }
    }
}

/// Checks that `p` computes `phi` on initial configurations within `bounds`.
pub fn check_correctness(
    p: &Protocol,
    phi: &IntervalPredicate,
    bounds: SearchBounds,
    opts: VerifyOptions,
) -> Result<CorrectnessReport, VerifyError> {
    if let Some(&q) = phi.states().iter().find(|&&q| !p.is_initial(q)) {
        return Err(VerifyError::NonInitialState(p.states.get(q).cloned().unwrap_or_else(|| format!("#{q}"))));
    }
    let run = |b| emptiness(p, &gre::build_correctness_gre(p, phi, b, opts.include_empty), bounds, opts);
    Ok(CorrectnessReport { top: run(Output::Top), bot: run(Output::Bot) })
}

/// Non-emptiness means some configuration of `e1` can reach `e2`.
pub fn check_set_reachability(p: &Protocol, e1: &Gre, e2: &Gre, bounds: SearchBounds, opts: VerifyOptions) -> Verdict {
    emptiness(p, &gre::build_set_reach_gre(e1, e2), bounds, opts)
}

/// Emptiness means `home` is reachable from every configuration reachable
/// from an initial one.
pub fn check_home_space(p: &Protocol, home: &Gre, bounds: SearchBounds, opts: VerifyOptions) -> Verdict {
    check_home_space_from(p, &gre::build_init_gre(p, opts.include_empty), home, bounds, opts)
}

/// As [`check_home_space`] with an arbitrary set of start configurations.
pub fn check_home_space_from(
    p: &Protocol,
    from: &Gre,
    home: &Gre,
    bounds: SearchBounds,
    opts: VerifyOptions,
) -> Verdict {
    emptiness(p, &gre::build_home_space_gre(from, home), bounds, opts)
}

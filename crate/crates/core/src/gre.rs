//! Generalised reachability expressions and the derived verification queries.

use crate::predicate::{IntervalPredicate, SimpleIntervalPredicate};
use crate::protocol::{Output, Protocol, StateId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gre {
    Atom(IntervalPredicate),
    Union(Box<Gre>, Box<Gre>),
    Complement(Box<Gre>),
    PostStar(Box<Gre>),
    PreStar(Box<Gre>),
}

impl Gre {
    pub fn atom(phi: IntervalPredicate) -> Gre {
        Gre::Atom(phi)
    }

    pub fn union(self, other: Gre) -> Gre {
        Gre::Union(Box::new(self), Box::new(other))
    }

    pub fn complement(self) -> Gre {
        Gre::Complement(Box::new(self))
    }

    pub fn post_star(self) -> Gre {
        Gre::PostStar(Box::new(self))
    }

    pub fn pre_star(self) -> Gre {
        Gre::PreStar(Box::new(self))
    }

    /// `compl(union(compl a, compl b))`; the left operand is evaluated first.
    pub fn intersect(self, other: Gre) -> Gre {
        self.complement().union(other.complement()).complement()
    }

    /// Operator count.
    pub fn length(&self) -> usize {
        match self {
            Gre::Atom(_) => 0,
            Gre::Union(a, b) => 1 + a.length() + b.length(),
            Gre::Complement(a) | Gre::PostStar(a) | Gre::PreStar(a) => 1 + a.length(),
        }
    }

    pub fn atoms(&self) -> Vec<&IntervalPredicate> {
        match self {
            Gre::Atom(phi) => vec![phi],
            Gre::Union(a, b) => {
                let mut v = a.atoms();
                v.extend(b.atoms());
                v
            }
            Gre::Complement(a) | Gre::PostStar(a) | Gre::PreStar(a) => a.atoms(),
        }
    }

    /// Largest width or height of an atom.
    pub fn norm(&self) -> u64 {
        self.atoms().iter().map(|phi| (phi.width() as u64).max(phi.height() as u64)).max().unwrap_or(0)
    }
}

/// `¬ ⋁_{q ∈ states} ∃x. #(q,x) ≥ 1`: no agent sits in any of `states`.
fn absent(states: impl IntoIterator<Item = StateId>) -> IntervalPredicate {
    IntervalPredicate::any(states.into_iter().map(IntervalPredicate::presence)).negate()
}

/// The b-consensus configurations.
pub fn output_predicate(p: &Protocol, b: Output) -> IntervalPredicate {
    absent((0..p.num_states()).filter(|&q| p.output[q] != Some(b)))
}

/// Configurations with at least one agent.
pub fn nonempty_predicate() -> IntervalPredicate {
    SimpleIntervalPredicate::new(1).into()
}

/// Initial configurations; the empty configuration only when `include_empty`.
pub fn initial_predicate(p: &Protocol, include_empty: bool) -> IntervalPredicate {
    let init = absent((0..p.num_states()).filter(|&q| !p.is_initial(q)));
    if include_empty {
        init
    } else {
        init.and(nonempty_predicate())
    }
}

pub fn build_output_gre(p: &Protocol, b: Output) -> Gre {
    Gre::atom(output_predicate(p, b))
}

/// Configurations from which every reachable configuration is a b-consensus.
pub fn build_stable_gre(p: &Protocol, b: Output) -> Gre {
    build_output_gre(p, b).complement().pre_star().complement()
}

/// Configurations from which some fair run does not stabilise to `b`.
pub fn build_unstable_gre(p: &Protocol, b: Output) -> Gre {
    build_stable_gre(p, b).pre_star().complement().pre_star()
}

pub fn build_init_gre(p: &Protocol, include_empty: bool) -> Gre {
    Gre::atom(initial_predicate(p, include_empty))
}

/// Initial configurations that can fail to stabilise to ⊤ and to ⊥.
pub fn build_wellspec_gre(p: &Protocol, include_empty: bool) -> Gre {
    build_init_gre(p, include_empty)
        .intersect(build_unstable_gre(p, Output::Top))
        .intersect(build_unstable_gre(p, Output::Bot))
}

/// Inputs where `phi` says `b` but some fair run does not stabilise to `b`.
pub fn build_correctness_gre(p: &Protocol, phi: &IntervalPredicate, b: Output, include_empty: bool) -> Gre {
    let expected = match b {
        Output::Top => phi.clone(),
        Output::Bot => phi.clone().negate(),
    };
    build_init_gre(p, include_empty).intersect(Gre::atom(expected)).intersect(build_unstable_gre(p, b))
}

pub fn build_set_reach_gre(e1: &Gre, e2: &Gre) -> Gre {
    e1.clone().intersect(e2.clone().pre_star())
}

/// Configurations reachable from `from` that cannot reach `home`.
pub fn build_home_space_gre(from: &Gre, home: &Gre) -> Gre {
    from.clone().post_star().intersect(home.clone().pre_star().complement())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::config::CanonicalConfiguration;

    #[test]
    fn output_predicate_on_two_full() {
        let p = catalog::two_full();
        let all_q3 = CanonicalConfiguration::from_data(4, &[vec![(3, 2)], vec![(3, 1)]]);
        let mixed = CanonicalConfiguration::from_data(4, &[vec![(3, 2)], vec![(0, 1)]]);
        let empty = CanonicalConfiguration::empty(4);
        let top = output_predicate(&p, Output::Top);
        let bot = output_predicate(&p, Output::Bot);
        assert!(top.eval(&all_q3) && !bot.eval(&all_q3));
        assert!(!top.eval(&mixed) && !bot.eval(&mixed));
        assert!(top.eval(&empty) && bot.eval(&empty));
    }

    #[test]
    fn empty_disjunction_means_no_constraint() {
        let p = Protocol::with_names(&["a"], &["a"], &["a"], &[]);
        let c = CanonicalConfiguration::from_data(1, &[vec![(0, 3)]]);
        assert!(output_predicate(&p, Output::Top).eval(&c));
        assert!(!output_predicate(&p, Output::Bot).eval(&c));
    }

    #[test]
    fn initial_predicate_and_empty_flag() {
        let p = catalog::two_full();
        let empty = CanonicalConfiguration::empty(4);
        let init = CanonicalConfiguration::from_data(4, &[vec![(0, 1), (1, 2)]]);
        let not_init = CanonicalConfiguration::from_data(4, &[vec![(0, 1), (2, 1)]]);
        assert!(!initial_predicate(&p, false).eval(&empty));
        assert!(initial_predicate(&p, true).eval(&empty));
        assert!(initial_predicate(&p, false).eval(&init));
        assert!(!initial_predicate(&p, true).eval(&not_init));
    }

    #[test]
    fn length_and_norm() {
        let p = catalog::two_full();
        let s = build_stable_gre(&p, Output::Top);
        assert_eq!(s.length(), 3);
        assert_eq!(s.norm(), 1);
        let e = Gre::atom(catalog::two_full_predicate()).union(s);
        assert_eq!(e.length(), 4);
        assert_eq!(e.norm(), 2);
    }
}

//! Interval predicates and their evaluation on canonical configurations.
//!
//! Dotted quantifiers range over pairwise distinct appearing data.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::matching;
use crate::protocol::StateId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Upper {
    Finite(u32),
    Infinite,
}

/// `[lo, hi]` over agent counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: Upper,
}

impl Interval {
    pub const ANY: Interval = Interval { lo: 0, hi: Upper::Infinite };

    pub fn new(lo: u32, hi: Upper) -> Interval {
        Interval { lo, hi }
    }

    pub fn exactly(k: u32) -> Interval {
        Interval { lo: k, hi: Upper::Finite(k) }
    }

    pub fn at_least(k: u32) -> Interval {
        Interval { lo: k, hi: Upper::Infinite }
    }

    pub fn contains(&self, k: u32) -> bool {
        k >= self.lo
            && match self.hi {
                Upper::Finite(h) => k <= h,
                Upper::Infinite => true,
            }
    }

    pub fn is_well_formed(&self) -> bool {
        match self.hi {
            Upper::Finite(h) => self.lo <= h,
            Upper::Infinite => true,
        }
    }

    fn max_finite(&self) -> u32 {
        match self.hi {
            Upper::Finite(h) => h.max(self.lo),
            Upper::Infinite => self.lo,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredicateError {
    #[error("variable {var} out of range for width {width}")]
    UnknownVariable { var: usize, width: usize },
    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: u32, hi: u32 },
}

/// `∃̇ x1..xm. ⋀_{q∈S, j} #(q, xj) ∈ [A_{q,j}, B_{q,j}]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimpleIntervalPredicate {
    scope: BTreeSet<StateId>,
    columns: Vec<BTreeMap<StateId, Interval>>,
}

impl SimpleIntervalPredicate {
    /// Width-`m` predicate without constraints.
    pub fn new(width: usize) -> Self {
        SimpleIntervalPredicate { scope: BTreeSet::new(), columns: vec![BTreeMap::new(); width] }
    }

    /// The width-0 predicate, true on every configuration.
    pub fn truth() -> Self {
        Self::new(0)
    }

    /// Adds `q` to the scope without constraining it.
    pub fn extend_scope(&mut self, q: StateId) {
        self.scope.insert(q);
    }

    /// Sets the interval of `#(q, x_var)`; `q` joins the scope.
    pub fn constrain(&mut self, var: usize, q: StateId, iv: Interval) -> Result<(), PredicateError> {
        if var >= self.columns.len() {
            return Err(PredicateError::UnknownVariable { var, width: self.columns.len() });
        }
        if let (false, Upper::Finite(hi)) = (iv.is_well_formed(), iv.hi) {
            return Err(PredicateError::EmptyInterval { lo: iv.lo, hi });
        }
        self.scope.insert(q);
        if iv == Interval::ANY {
            self.columns[var].remove(&q);
        } else {
            self.columns[var].insert(q, iv);
        }
        Ok(())
    }

    pub fn with(mut self, var: usize, q: StateId, iv: Interval) -> Self {
        self.constrain(var, q, iv).expect("valid constraint");
        self
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn scope(&self) -> &BTreeSet<StateId> {
        &self.scope
    }

    pub fn interval(&self, var: usize, q: StateId) -> Interval {
        self.columns[var].get(&q).copied().unwrap_or(Interval::ANY)
    }

    /// Explicit (non-default) constraints of one variable.
    pub fn column(&self, var: usize) -> &BTreeMap<StateId, Interval> {
        &self.columns[var]
    }

    pub fn height(&self) -> u32 {
        self.columns.iter().flat_map(|c| c.values()).map(Interval::max_finite).max().unwrap_or(0)
    }

    /// Largest finite upper bound, if any.
    pub fn max_finite_upper(&self) -> Option<u32> {
        let uppers = self.columns.iter().flat_map(|c| c.values());
        uppers.filter_map(|iv| match iv.hi {
            Upper::Finite(h) => Some(h),
            Upper::Infinite => None,
        })
        .max()
    }

    /// `|S| · m · max(1, ⌈log2(h+1)⌉)`.
    pub fn size(&self) -> u64 {
        let h = self.height();
        let bits = (u32::BITS - h.leading_zeros()).max(1) as u64;
        self.scope.len() as u64 * self.width() as u64 * bits
    }

    fn column_accepts(&self, var: usize, prof: &DatumProfile) -> bool {
        self.columns[var].iter().all(|(&q, iv)| iv.contains(prof.count(q)))
    }

    pub fn eval(&self, c: &CanonicalConfiguration) -> bool {
        let m = self.width();
        if m == 0 {
            return true;
        }
        if (m as u64) > c.num_data() as u64 {
            return false;
        }
        let entries = c.entries();
        if self.columns.iter().all(|col| col == &self.columns[0]) {
            let fitting: u64 =
                entries.iter().filter(|(p, _)| self.column_accepts(0, p)).map(|(_, k)| *k as u64).sum();
            return fitting >= m as u64;
        }
        let capacity: Vec<u32> = entries.iter().map(|(_, k)| *k).collect();
        let compatible: Vec<Vec<bool>> =
            (0..m).map(|j| entries.iter().map(|(p, _)| self.column_accepts(j, p)).collect()).collect();
        matching::saturates(&capacity, &compatible)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IntervalPredicate {
    Simple(SimpleIntervalPredicate),
    Not(Box<IntervalPredicate>),
    And(Box<IntervalPredicate>, Box<IntervalPredicate>),
    Or(Box<IntervalPredicate>, Box<IntervalPredicate>),
}

/// Width, height and size of a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metrics {
    pub width: usize,
    pub height: u32,
    pub size: u64,
}

impl From<SimpleIntervalPredicate> for IntervalPredicate {
    fn from(s: SimpleIntervalPredicate) -> Self {
        IntervalPredicate::Simple(s)
    }
}

impl IntervalPredicate {
    pub fn truth() -> Self {
        IntervalPredicate::Simple(SimpleIntervalPredicate::truth())
    }

    pub fn falsity() -> Self {
        Self::truth().negate()
    }

    pub fn negate(self) -> Self {
        IntervalPredicate::Not(Box::new(self))
    }

    pub fn and(self, other: IntervalPredicate) -> Self {
        IntervalPredicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: IntervalPredicate) -> Self {
        IntervalPredicate::Or(Box::new(self), Box::new(other))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn all(parts: impl IntoIterator<Item = IntervalPredicate>) -> Self {
        parts.into_iter().reduce(Self::and).unwrap_or_else(Self::truth)
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn any(parts: impl IntoIterator<Item = IntervalPredicate>) -> Self {
        parts.into_iter().reduce(Self::or).unwrap_or_else(Self::falsity)
    }

    /// `∃x. #(q, x) ≥ 1`.
    pub fn presence(q: StateId) -> Self {
        SimpleIntervalPredicate::new(1).with(0, q, Interval::at_least(1)).into()
    }

    pub fn eval(&self, c: &CanonicalConfiguration) -> bool {
        match self {
            IntervalPredicate::Simple(s) => s.eval(c),
            IntervalPredicate::Not(a) => !a.eval(c),
            IntervalPredicate::And(a, b) => a.eval(c) && b.eval(c),
            IntervalPredicate::Or(a, b) => a.eval(c) || b.eval(c),
        }
    }

    pub fn leaves(&self) -> Vec<&SimpleIntervalPredicate> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match p {
                IntervalPredicate::Simple(s) => out.push(s),
                IntervalPredicate::Not(a) => stack.push(a),
                IntervalPredicate::And(a, b) | IntervalPredicate::Or(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        out
    }

    fn operators(&self) -> u64 {
        match self {
            IntervalPredicate::Simple(_) => 0,
            IntervalPredicate::Not(a) => 1 + a.operators(),
            IntervalPredicate::And(a, b) | IntervalPredicate::Or(a, b) => 1 + a.operators() + b.operators(),
        }
    }

    pub fn width(&self) -> usize {
        self.leaves().iter().map(|s| s.width()).max().unwrap_or(0)
    }

    pub fn height(&self) -> u32 {
        self.leaves().iter().map(|s| s.height()).max().unwrap_or(0)
    }

    pub fn max_finite_upper(&self) -> Option<u32> {
        self.leaves().iter().filter_map(|s| s.max_finite_upper()).max()
    }

    pub fn metrics(&self) -> Metrics {
        let leaves = self.leaves();
        Metrics {
            width: leaves.iter().map(|s| s.width()).max().unwrap_or(0),
            height: leaves.iter().map(|s| s.height()).max().unwrap_or(0),
            size: leaves.iter().map(|s| s.size()).sum::<u64>() + self.operators(),
        }
    }

    /// States in the scope of some leaf.
    pub fn states(&self) -> BTreeSet<StateId> {
        self.leaves().iter().flat_map(|s| s.scope().iter().copied()).collect()
    }
}

pub fn eval_simple(psi: &SimpleIntervalPredicate, c: &CanonicalConfiguration) -> bool {
    psi.eval(c)
}

pub fn eval_predicate(phi: &IntervalPredicate, c: &CanonicalConfiguration) -> bool {
    phi.eval(c)
}

pub fn predicate_metrics(phi: &IntervalPredicate) -> Metrics {
    phi.metrics()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::gen;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn cfg(data: &[Vec<(StateId, u32)>]) -> CanonicalConfiguration {
        CanonicalConfiguration::from_data(4, data)
    }

    /// Tries every injective map from variables to data.
    fn brute_force(psi: &SimpleIntervalPredicate, c: &CanonicalConfiguration) -> bool {
        fn rec(psi: &SimpleIntervalPredicate, data: &[&DatumProfile], var: usize, used: &mut Vec<bool>) -> bool {
            if var == psi.width() {
                return true;
            }
            for d in 0..data.len() {
                if used[d] || !psi.column(var).iter().all(|(&q, iv)| iv.contains(data[d].count(q))) {
                    continue;
                }
                used[d] = true;
                let ok = rec(psi, data, var + 1, used);
                used[d] = false;
                if ok {
                    return true;
                }
            }
            false
        }
        let data: Vec<&DatumProfile> = c.data().collect();
        rec(psi, &data, 0, &mut vec![false; data.len()])
    }

    #[test]
    fn two_full_predicate() {
        let phi = catalog::two_full_predicate();
        assert!(phi.eval(&cfg(&[vec![(0, 1), (1, 1)], vec![(0, 1), (1, 1)]])));
        assert!(!phi.eval(&cfg(&[vec![(0, 2)]])));
        assert!(!phi.eval(&cfg(&[vec![(0, 1), (1, 1)], vec![(0, 1)]])));
        let m = phi.metrics();
        assert_eq!((m.width, m.height), (2, 1));
    }

    #[test]
    fn width_zero_is_true_everywhere() {
        let t = IntervalPredicate::truth();
        assert!(t.eval(&CanonicalConfiguration::empty(4)));
        assert!(t.eval(&cfg(&[vec![(3, 5)]])));
        assert!(!IntervalPredicate::falsity().eval(&CanonicalConfiguration::empty(4)));
        let m = t.metrics();
        assert_eq!((m.width, m.height, m.size), (0, 0, 0));
    }

    #[test]
    fn metrics_follow_max_and_sum_rules() {
        let a = SimpleIntervalPredicate::new(2).with(0, 0, Interval::at_least(1)).with(1, 1, Interval::exactly(3));
        let b = SimpleIntervalPredicate::new(3).with(2, 2, Interval::new(1, Upper::Finite(4)));
        // |S|=2, m=2, h=3 -> 2*2*2; |S|=1, m=3, h=4 -> 1*3*3
        assert_eq!(a.size(), 8);
        assert_eq!(b.size(), 9);
        let phi = IntervalPredicate::from(a).and(IntervalPredicate::from(b).negate());
        assert_eq!(phi.metrics(), Metrics { width: 3, height: 4, size: 8 + 9 + 2 });
    }

    #[test]
    fn identical_profiles_supply_distinct_data() {
        let two = SimpleIntervalPredicate::new(2).with(0, 2, Interval::at_least(1)).with(1, 2, Interval::at_least(1));
        assert!(two.eval(&cfg(&[vec![(2, 1)], vec![(2, 1)]])));
        assert!(!two.eval(&cfg(&[vec![(2, 2)]])));
    }

    #[test]
    fn empty_interval_is_rejected() {
        let mut s = SimpleIntervalPredicate::new(1);
        assert_eq!(
            s.constrain(0, 0, Interval::new(3, Upper::Finite(1))),
            Err(PredicateError::EmptyInterval { lo: 3, hi: 1 })
        );
        assert!(matches!(s.constrain(4, 0, Interval::ANY), Err(PredicateError::UnknownVariable { .. })));
    }

    #[test]
    fn contradiction_is_false_on_random_configurations() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let psi: IntervalPredicate = gen::simple_predicate(&mut rng, 4, 3, 3).into();
            let c = gen::configuration(&mut rng, 4, 4, 3);
            assert!(!psi.clone().and(psi.negate()).eval(&c));
        }
    }

    proptest! {
        #[test]
        fn matching_agrees_with_injective_enumeration(seed in any::<u64>()) {
            let mut rng = StdRng::seed_from_u64(seed);
            let psi = gen::simple_predicate(&mut rng, 3, 4, 2);
            let c = gen::configuration(&mut rng, 3, 6, 3);
            prop_assert_eq!(psi.eval(&c), brute_force(&psi, &c));
        }

        #[test]
        fn moving_a_count_within_its_interval_keeps_truth(seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = StdRng::seed_from_u64(seed);
            let psi = SimpleIntervalPredicate::new(1)
                .with(0, 0, Interval::new(1, Upper::Finite(3)))
                .with(0, 1, Interval::at_least(2));
            let c = gen::configuration(&mut rng, 3, 4, 5);
            if psi.eval(&c) {
                // Raise or lower q0 of a witnessing datum inside [1,3].
                let data: Vec<DatumProfile> = c.data().cloned().collect();
                let w = data.iter().position(|d| (1..=3).contains(&d.count(0)) && d.count(1) >= 2).unwrap();
                let mut counts = data[w].counts().to_vec();
                counts[0] = rng.gen_range(1..=3);
                let mut moved = data.clone();
                moved[w] = DatumProfile::from_counts(counts);
                prop_assert!(psi.eval(&CanonicalConfiguration::from_profiles(3, moved)));
            }
        }
    }
}

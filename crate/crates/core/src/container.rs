//! n-boxes and (n, M)-containers.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::predicate::{Interval, IntervalPredicate, SimpleIntervalPredicate, Upper};

/// Per-state counts truncated at `n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NBox {
    n: u32,
    values: Box<[u32]>,
}

impl NBox {
    pub fn new(n: u32, values: Vec<u32>) -> Result<NBox, ContainerError> {
        if n == 0 {
            return Err(ContainerError::ZeroThreshold);
        }
        if let Some(&v) = values.iter().find(|&&v| v > n) {
            return Err(ContainerError::BoxValueTooLarge { value: v, n });
        }
        Ok(NBox { n, values: values.into_boxed_slice() })
    }

    pub fn threshold(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// A datum whose counts are exactly the box values.
    pub fn profile(&self) -> DatumProfile {
        DatumProfile::from_counts(self.values.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Container {
    num_states: usize,
    n: u32,
    m: u32,
    counts: BTreeMap<NBox, u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContainerError {
    #[error("thresholds must be at least 1")]
    ZeroThreshold,
    #[error("box value {value} exceeds n = {n}")]
    BoxValueTooLarge { value: u32, n: u32 },
    #[error("box count {count} exceeds M = {m}")]
    CountTooLarge { count: u32, m: u32 },
    #[error("box does not match the container's threshold or state count")]
    ShapeMismatch,
    #[error("predicate has height {height} and width {width}, beyond (n, M) = ({n}, {m})")]
    PredicateTooLarge { height: u32, width: usize, n: u32, m: u32 },
    #[error("finite upper bound {bound} is not below n = {n}; counts from n up share a box value")]
    UpperBoundNotBelowN { bound: u32, n: u32 },
    #[error("container enumeration budget of {0} exhausted")]
    BudgetExceeded(u64),
}

impl Container {
    pub fn new(num_states: usize, n: u32, m: u32) -> Result<Container, ContainerError> {
        if n == 0 || m == 0 {
            return Err(ContainerError::ZeroThreshold);
        }
        Ok(Container { num_states, n, m, counts: BTreeMap::new() })
    }

    /// Sets the count of `b`; zero removes it.
    pub fn set(&mut self, b: NBox, count: u32) -> Result<(), ContainerError> {
        if b.n != self.n || b.values.len() != self.num_states {
            return Err(ContainerError::ShapeMismatch);
        }
        if count > self.m {
            return Err(ContainerError::CountTooLarge { count, m: self.m });
        }
        if count == 0 {
            self.counts.remove(&b);
        } else {
            self.counts.insert(b, count);
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn count(&self, b: &NBox) -> u32 {
        self.counts.get(b).copied().unwrap_or(0)
    }

    /// Boxes with a positive count, in canonical order.
    pub fn counts(&self) -> &BTreeMap<NBox, u32> {
        &self.counts
    }

    /// `count` fresh data per box, each with the box's exact profile.
    pub fn representative(&self) -> CanonicalConfiguration {
        CanonicalConfiguration::from_weighted(self.num_states, self.counts.iter().map(|(b, &k)| (b.profile(), k)))
    }
}

pub fn box_of(profile: &DatumProfile, n: u32) -> NBox {
    assert!(n >= 1, "n must be positive");
    NBox { n, values: profile.counts().iter().map(|&k| k.min(n)).collect() }
}

pub fn container_of(c: &CanonicalConfiguration, n: u32, m: u32) -> Container {
    let mut cont = Container::new(c.num_states(), n, m).expect("positive thresholds");
    for (prof, k) in c.entries() {
        *cont.counts.entry(box_of(prof, n)).or_default() += k;
    }
    for v in cont.counts.values_mut() {
        *v = (*v).min(m);
    }
    cont
}

pub fn equiv(c1: &CanonicalConfiguration, c2: &CanonicalConfiguration, n: u32, m: u32) -> bool {
    container_of(c1, n, m) == container_of(c2, n, m)
}

/// All n-boxes over `num_states` states, zero box first.
pub fn all_boxes(num_states: usize, n: u32) -> Vec<NBox> {
    let mut out = vec![Vec::new()];
    for _ in 0..num_states {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                (0..=n).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    let mut boxes: Vec<NBox> = out.into_iter().map(|v| NBox { n, values: v.into_boxed_slice() }).collect();
    boxes.sort();
    boxes
}

/// `∃̇ x1..xk` whose data all have box `b`.
pub fn at_least_predicate(b: &NBox, k: u32) -> SimpleIntervalPredicate {
    let mut s = SimpleIntervalPredicate::new(k as usize);
    for (q, &v) in b.values.iter().enumerate() {
        s.extend_scope(q);
        let iv = if v < b.n { Interval::exactly(v) } else { Interval::new(v, Upper::Infinite) };
        for var in 0..k as usize {
            s.constrain(var, q, iv).expect("well-formed interval");
        }
    }
    s
}

/// Predicate whose models are exactly the configurations with this container.
pub fn container_to_predicate(cont: &Container) -> IntervalPredicate {
    let parts = all_boxes(cont.num_states, cont.n).into_iter().map(|b| {
        let k = cont.count(&b);
        let at_least: IntervalPredicate = at_least_predicate(&b, k).into();
        if k < cont.m {
            at_least.and(IntervalPredicate::from(at_least_predicate(&b, k + 1)).negate())
        } else {
            at_least
        }
    });
    IntervalPredicate::all(parts.collect::<Vec<_>>())
}

pub const DEFAULT_CONTAINER_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tri {
    True,
    False,
    Unknown,
}

fn tri_eval(phi: &IntervalPredicate, lower: &CanonicalConfiguration, upper: &CanonicalConfiguration) -> Tri {
    match phi {
        IntervalPredicate::Simple(s) => {
            if s.eval(lower) {
                Tri::True
            } else if !s.eval(upper) {
                Tri::False
            } else {
                Tri::Unknown
            }
        }
        IntervalPredicate::Not(a) => match tri_eval(a, lower, upper) {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        },
        IntervalPredicate::And(a, b) => match tri_eval(a, lower, upper) {
            Tri::False => Tri::False,
            l => match (l, tri_eval(b, lower, upper)) {
                (_, Tri::False) => Tri::False,
                (Tri::True, Tri::True) => Tri::True,
                _ => Tri::Unknown,
            },
        },
        IntervalPredicate::Or(a, b) => match tri_eval(a, lower, upper) {
            Tri::True => Tri::True,
            l => match (l, tri_eval(b, lower, upper)) {
                (_, Tri::True) => Tri::True,
                (Tri::False, Tri::False) => Tri::False,
                _ => Tri::Unknown,
            },
        },
    }
}

/// The (n, M)-containers whose configurations satisfy `phi`.
///
/// Walks the container space box by box. Simple predicates are monotone in
/// the set of data, so a partial assignment is decided early when `phi`
/// already holds with the unassigned boxes empty, or already fails with
/// every unassigned box at count M. Leaves are decided on the canonical
/// representative. `budget` caps visited search nodes plus results.
///
/// Needs height ≤ n, width ≤ M and every finite upper bound below n. A
/// bound of exactly n would tell count n from n + 1, which one n-box can't.
pub fn predicate_to_containers(
    phi: &IntervalPredicate,
    num_states: usize,
    n: u32,
    m: u32,
    budget: u64,
) -> Result<Vec<Container>, ContainerError> {
    if n == 0 || m == 0 {
        return Err(ContainerError::ZeroThreshold);
    }
    let (height, width) = (phi.height(), phi.width());
    if height > n || width > m as usize {
        return Err(ContainerError::PredicateTooLarge { height, width, n, m });
    }
    if let Some(bound) = phi.max_finite_upper().filter(|&b| b >= n) {
        return Err(ContainerError::UpperBoundNotBelowN { bound, n });
    }
    // The zero box never holds an appearing datum.
    let boxes: Vec<NBox> = all_boxes(num_states, n).into_iter().filter(|b| !b.is_zero()).collect();
    let mut search = Search { phi, boxes: &boxes, num_states, n, m, budget, spent: 0, out: Vec::new() };
    let mut counts = Vec::with_capacity(boxes.len());
    search.walk(&mut counts)?;
    search.out.sort();
    Ok(search.out)
}

struct Search<'a> {
    phi: &'a IntervalPredicate,
    boxes: &'a [NBox],
    num_states: usize,
    n: u32,
    m: u32,
    budget: u64,
    spent: u64,
    out: Vec<Container>,
}

impl Search<'_> {
    fn charge(&mut self, amount: u64) -> Result<(), ContainerError> {
        self.spent = self.spent.saturating_add(amount);
        if self.spent > self.budget {
            Err(ContainerError::BudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn config(&self, counts: &[u32], rest: u32) -> CanonicalConfiguration {
        let weighted = self.boxes.iter().enumerate().map(|(i, b)| (b.profile(), counts.get(i).copied().unwrap_or(rest)));
        CanonicalConfiguration::from_weighted(self.num_states, weighted.collect::<Vec<_>>())
    }

    fn emit(&mut self, counts: &[u32]) {
        let mut cont = Container::new(self.num_states, self.n, self.m).expect("positive thresholds");
        for (b, &k) in self.boxes.iter().zip(counts) {
            if k > 0 {
                cont.counts.insert(b.clone(), k);
            }
        }
        self.out.push(cont);
    }

    fn walk(&mut self, counts: &mut Vec<u32>) -> Result<(), ContainerError> {
        self.charge(1)?;
        if counts.len() == self.boxes.len() {
            if self.phi.eval(&self.config(counts, 0)) {
                self.charge(1)?;
                self.emit(counts);
            }
            return Ok(());
        }
        match tri_eval(self.phi, &self.config(counts, 0), &self.config(counts, self.m)) {
            Tri::False => Ok(()),
            Tri::True => self.emit_all(counts),
            Tri::Unknown => {
                for k in 0..=self.m {
                    counts.push(k);
                    self.walk(counts)?;
                    counts.pop();
                }
                Ok(())
            }
        }
    }

    fn emit_all(&mut self, counts: &mut Vec<u32>) -> Result<(), ContainerError> {
        if counts.len() == self.boxes.len() {
            self.charge(1)?;
            self.emit(counts);
            return Ok(());
        }
        for k in 0..=self.m {
            counts.push(k);
            self.emit_all(counts)?;
            counts.pop();
        }
        Ok(())
    }
}

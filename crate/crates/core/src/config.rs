//! Canonical, datum-anonymous configurations.

use crate::protocol::{Output, Protocol, StateId};

/// Agent counts of one datum, dense over the protocol's states.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DatumProfile(Box<[u32]>);

impl DatumProfile {
    pub fn zero(num_states: usize) -> Self {
        DatumProfile(vec![0; num_states].into_boxed_slice())
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        DatumProfile(counts.into_boxed_slice())
    }

    pub fn from_pairs(num_states: usize, pairs: &[(StateId, u32)]) -> Self {
        let mut p = DatumProfile::zero(num_states);
        for &(q, k) in pairs {
            p.0[q] += k;
        }
        p
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn count(&self, q: StateId) -> u32 {
        self.0[q]
    }

    pub fn num_states(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// States with a positive count, in state order.
    pub fn support(&self) -> impl Iterator<Item = (StateId, u32)> + '_ {
        self.0.iter().enumerate().filter(|(_, &k)| k > 0).map(|(q, &k)| (q, k))
    }

    pub(crate) fn moved(&self, from: StateId, to: StateId) -> DatumProfile {
        let mut counts = self.0.clone();
        counts[from] -= 1;
        counts[to] += 1;
        DatumProfile(counts)
    }

    pub(crate) fn moved2(&self, from: [StateId; 2], to: [StateId; 2]) -> DatumProfile {
        let mut counts = self.0.clone();
        counts[from[0]] -= 1;
        counts[from[1]] -= 1;
        counts[to[0]] += 1;
        counts[to[1]] += 1;
        DatumProfile(counts)
    }
}

/// Sorted multiset of per-datum agent counts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature(pub Vec<u32>);

/// A configuration up to renaming of data and agents: a multiset of nonempty
/// profiles, kept sorted with explicit multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalConfiguration {
    num_states: usize,
    entries: Vec<(DatumProfile, u32)>,
}

impl CanonicalConfiguration {
    pub fn empty(num_states: usize) -> Self {
        CanonicalConfiguration { num_states, entries: Vec::new() }
    }

    pub fn from_profiles(num_states: usize, profiles: impl IntoIterator<Item = DatumProfile>) -> Self {
        Self::from_weighted(num_states, profiles.into_iter().map(|p| (p, 1)))
    }

    pub fn from_weighted(num_states: usize, profiles: impl IntoIterator<Item = (DatumProfile, u32)>) -> Self {
        let mut entries: Vec<(DatumProfile, u32)> = profiles
            .into_iter()
            .filter(|(p, k)| *k > 0 && !p.is_empty())
            .inspect(|(p, _)| assert_eq!(p.num_states(), num_states, "profile width mismatch"))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(DatumProfile, u32)> = Vec::with_capacity(entries.len());
        for (p, k) in entries {
            match merged.last_mut() {
                Some((last, m)) if *last == p => *m += k,
                _ => merged.push((p, k)),
            }
        }
        CanonicalConfiguration { num_states, entries: merged }
    }

    /// One `(state, count)` list per datum.
    pub fn from_data(num_states: usize, data: &[Vec<(StateId, u32)>]) -> Self {
        Self::from_profiles(num_states, data.iter().map(|d| DatumProfile::from_pairs(num_states, d)))
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Distinct profiles with their multiplicities, in canonical order.
    pub fn entries(&self) -> &[(DatumProfile, u32)] {
        &self.entries
    }

    /// Every appearing datum's profile, repeated by multiplicity.
    pub fn data(&self) -> impl Iterator<Item = &DatumProfile> + '_ {
        self.entries.iter().flat_map(|(p, k)| std::iter::repeat_n(p, *k as usize))
    }

    pub fn num_data(&self) -> usize {
        self.entries.iter().map(|(_, k)| *k as usize).sum()
    }

    pub fn num_agents(&self) -> u32 {
        self.entries.iter().map(|(p, k)| p.total() * k).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signature(&self) -> Signature {
        let mut sig: Vec<u32> = self.data().map(DatumProfile::total).collect();
        sig.sort_unstable();
        Signature(sig)
    }

    /// Number of agents in `q` over all data.
    pub fn count_in(&self, q: StateId) -> u32 {
        self.entries.iter().map(|(p, k)| p.count(q) * k).sum()
    }

    pub fn occupied_states(&self) -> Vec<StateId> {
        (0..self.num_states).filter(|&q| self.count_in(q) > 0).collect()
    }

    pub fn max_agents_per_datum(&self) -> u32 {
        self.entries.iter().map(|(p, _)| p.total()).max().unwrap_or(0)
    }

    /// Every agent outputs `b`; vacuously true on the empty configuration.
    pub fn is_consensus(&self, p: &Protocol, b: Output) -> bool {
        self.entries.iter().all(|(prof, _)| prof.support().all(|(q, _)| p.output[q] == Some(b)))
    }

    /// All agents sit in initial states (the empty configuration qualifies).
    pub fn is_initial(&self, p: &Protocol) -> bool {
        self.entries.iter().all(|(prof, _)| prof.support().all(|(q, _)| p.is_initial(q)))
    }

    /// Removes one datum from each listed entry index (an index may repeat)
    /// and adds the given profiles.
    pub(crate) fn rebuild(&self, removals: &[usize], additions: impl IntoIterator<Item = DatumProfile>) -> Self {
        let mut mult: Vec<u32> = self.entries.iter().map(|(_, k)| *k).collect();
        for &i in removals {
            mult[i] -= 1;
        }
        let kept = self.entries.iter().zip(mult).map(|((p, _), k)| (p.clone(), k));
        Self::from_weighted(self.num_states, kept.chain(additions.into_iter().map(|p| (p, 1))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(data: &[Vec<(StateId, u32)>]) -> CanonicalConfiguration {
        CanonicalConfiguration::from_data(3, data)
    }

    #[test]
    fn identical_profiles_merge() {
        let c = cfg(&[vec![(0, 1)], vec![(0, 1)], vec![(1, 2)]]);
        assert_eq!(c.entries().len(), 2);
        assert_eq!(c.num_data(), 3);
        assert_eq!(c.num_agents(), 4);
        assert_eq!(c.signature(), Signature(vec![1, 1, 2]));
    }

    #[test]
    fn empty_profiles_are_dropped() {
        let c = cfg(&[vec![], vec![(2, 0)]]);
        assert!(c.is_empty());
        assert_eq!(c, CanonicalConfiguration::empty(3));
    }

    #[test]
    fn consensus_is_vacuous_on_empty() {
        let p = crate::catalog::two_full();
        let e = CanonicalConfiguration::empty(4);
        assert!(e.is_consensus(&p, Output::Top));
        assert!(e.is_consensus(&p, Output::Bot));
    }

    proptest! {
        #[test]
        fn canonical_form_ignores_datum_order(
            data in prop::collection::vec(prop::collection::vec((0usize..3, 0u32..3), 0..3), 0..5),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = CanonicalConfiguration::from_data(3, &data);
            let mut shuffled = data.clone();
            shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
            for d in shuffled.iter_mut() {
                d.reverse();
            }
            let b = CanonicalConfiguration::from_data(3, &shuffled);
            prop_assert_eq!(a, b);
        }
    }
}

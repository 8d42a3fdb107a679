//! Exhaustive enumeration of profiles and configurations.

use std::ops::ControlFlow;

use crate::config::{CanonicalConfiguration, DatumProfile};
use crate::protocol::{Protocol, StateId};

/// Profiles over `allowed` states with total agent count exactly `total`,
/// in canonical order.
pub fn profiles_with_total(num_states: usize, allowed: &[StateId], total: u32) -> Vec<DatumProfile> {
    fn rec(allowed: &[StateId], left: u32, counts: &mut Vec<u32>, out: &mut Vec<DatumProfile>) {
        match allowed {
            [] => {
                if left == 0 {
                    out.push(DatumProfile::from_counts(counts.clone()));
                }
            }
            [q, rest @ ..] => {
                for k in 0..=left {
                    counts[*q] = k;
                    rec(rest, left - k, counts, out);
                }
                counts[*q] = 0;
            }
        }
    }
    let mut out = Vec::new();
    let mut counts = vec![0; num_states];
    rec(allowed, total, &mut counts, &mut out);
    out.sort();
    out
}

/// Nonempty profiles over `allowed` with at most `max_total` agents.
pub fn profiles_up_to(num_states: usize, allowed: &[StateId], max_total: u32) -> Vec<DatumProfile> {
    let mut out: Vec<DatumProfile> =
        (1..=max_total).flat_map(|t| profiles_with_total(num_states, allowed, t)).collect();
    out.sort();
    out
}

/// Visits every configuration over `allowed` states with at most `max_data`
/// data and at most `max_agents` agents per datum, the empty configuration
/// included, ordered by total agent count, then data count, then canonical
/// order of the profile sequence. Stops early on `Break`.
pub fn for_each_configuration<B>(
    num_states: usize,
    allowed: &[StateId],
    max_data: usize,
    max_agents: u32,
    mut visit: impl FnMut(CanonicalConfiguration) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let profiles = profiles_up_to(num_states, allowed, max_agents);
    let totals: Vec<u32> = profiles.iter().map(DatumProfile::total).collect();
    let max_total = max_data as u32 * max_agents;
    let mut chosen: Vec<usize> = Vec::new();
    for total in 0..=max_total {
        for k in 0..=max_data {
            if (k as u32) > total || total > k as u32 * max_agents {
                continue;
            }
            chosen.clear();
            let flow = choose(&profiles, &totals, 0, k, total, &mut chosen, &mut |idx: &[usize]| {
                visit(CanonicalConfiguration::from_profiles(num_states, idx.iter().map(|&i| profiles[i].clone())))
            });
            flow?;
        }
    }
    ControlFlow::Continue(())
}

fn choose<B>(
    profiles: &[DatumProfile],
    totals: &[u32],
    from: usize,
    k: usize,
    total: u32,
    chosen: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if k == 0 {
        return if total == 0 { emit(chosen) } else { ControlFlow::Continue(()) };
    }
    for i in from..profiles.len() {
        // Every later pick weighs at least one agent.
        if totals[i] > total || total - totals[i] < (k as u32 - 1) {
            continue;
        }
        chosen.push(i);
        let flow = choose(profiles, totals, i, k - 1, total - totals[i], chosen, emit);
        chosen.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

/// All configurations over every state within the bounds, in enumeration order.
pub fn configurations(num_states: usize, max_data: usize, max_agents: u32) -> Vec<CanonicalConfiguration> {
    let all: Vec<StateId> = (0..num_states).collect();
    configurations_over(num_states, &all, max_data, max_agents)
}

pub fn configurations_over(
    num_states: usize,
    allowed: &[StateId],
    max_data: usize,
    max_agents: u32,
) -> Vec<CanonicalConfiguration> {
    let mut out = Vec::new();
    let _ = for_each_configuration::<()>(num_states, allowed, max_data, max_agents, |c| {
        out.push(c);
        ControlFlow::Continue(())
    });
    out
}

/// Initial configurations of `p` within the bounds; the empty configuration
/// is listed first when `include_empty` is set.
pub fn initial_configurations(
    p: &Protocol,
    max_data: usize,
    max_agents: u32,
    include_empty: bool,
) -> Vec<CanonicalConfiguration> {
    let init: Vec<StateId> = p.initial.iter().copied().collect();
    let mut out = configurations_over(p.num_states(), &init, max_data, max_agents);
    if !include_empty {
        out.retain(|c| !c.is_empty());
    }
    out
}

/// Every configuration over all states whose signature is `sig`.
pub fn configurations_with_signature(num_states: usize, sig: &[u32]) -> Vec<CanonicalConfiguration> {
    let all: Vec<StateId> = (0..num_states).collect();
    let mut sizes: Vec<u32> = sig.to_vec();
    sizes.sort_unstable();
    let mut groups: Vec<(u32, usize)> = Vec::new();
    for s in sizes {
        match groups.last_mut() {
            Some((t, m)) if *t == s => *m += 1,
            _ => groups.push((s, 1)),
        }
    }
    // Multisets of profiles per distinct datum size, then their product.
    let mut partial: Vec<Vec<DatumProfile>> = vec![Vec::new()];
    for (size, mult) in groups {
        let options = profiles_with_total(num_states, &all, size);
        let mut picks = Vec::new();
        multisets(options.len(), mult, 0, &mut Vec::new(), &mut picks);
        let mut next = Vec::with_capacity(partial.len() * picks.len());
        for base in &partial {
            for pick in &picks {
                let mut v = base.clone();
                v.extend(pick.iter().map(|&i| options[i].clone()));
                next.push(v);
            }
        }
        partial = next;
    }
    let mut out: Vec<CanonicalConfiguration> =
        partial.into_iter().map(|ps| CanonicalConfiguration::from_profiles(num_states, ps)).collect();
    out.sort();
    out
}

fn multisets(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in from..n {
        cur.push(i);
        multisets(n, k, i, cur, out);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn configuration_counts_match_multiset_formula() {
        // 19 nonempty profiles over 3 states with at most 3 agents.
        let configs = configurations(3, 3, 3);
        assert_eq!(profiles_up_to(3, &[0, 1, 2], 3).len(), 19);
        assert_eq!(configs.len() as u64, binom(19 + 3, 3));
        let mut sorted = configs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), configs.len());
        assert!(configs[0].is_empty());
    }

    #[test]
    fn enumeration_is_ordered_by_agents_then_data() {
        let configs = configurations(2, 3, 2);
        let keys: Vec<(u32, usize)> = configs.iter().map(|c| (c.num_agents(), c.num_data())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn signature_space_is_exactly_the_matching_configurations() {
        let sig = [1, 2, 2];
        let by_sig = configurations_with_signature(3, &sig);
        let mut filtered: Vec<_> =
            configurations(3, 3, 2).into_iter().filter(|c| c.signature().0 == sig.to_vec()).collect();
        filtered.sort();
        assert_eq!(by_sig, filtered);
    }

    #[test]
    fn initial_configurations_stay_in_initial_states() {
        let p = crate::catalog::two_full();
        let init = initial_configurations(&p, 3, 2, false);
        // 5 nonempty profiles over {q0,q1} with at most 2 agents.
        assert_eq!(init.len() as u64, binom(5 + 3, 3) - 1);
        assert!(init.iter().all(|c| c.is_initial(&p) && !c.is_empty()));
    }
}

//! Bipartite b-matching between variables and capacitated groups.

/// Whether every variable can be assigned to a compatible group such that
/// no group receives more variables than its capacity.
pub(crate) fn saturates(capacity: &[u32], compatible: &[Vec<bool>]) -> bool {
    let vars = compatible.len();
    if vars == 0 {
        return true;
    }
    let total: u64 = capacity.iter().map(|&c| c as u64).sum();
    if total < vars as u64 {
        return false;
    }
    // Slots are copies of groups; no group needs more slots than variables.
    let mut slot_group = Vec::new();
    for (g, &c) in capacity.iter().enumerate() {
        for _ in 0..(c as usize).min(vars) {
            slot_group.push(g);
        }
    }
    let mut owner: Vec<Option<usize>> = vec![None; slot_group.len()];
    for v in 0..vars {
        let mut visited = vec![false; slot_group.len()];
        if !augment(v, compatible, &slot_group, &mut owner, &mut visited) {
            return false;
        }
    }
    true
}

fn augment(
    v: usize,
    compatible: &[Vec<bool>],
    slot_group: &[usize],
    owner: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for s in 0..slot_group.len() {
        if visited[s] || !compatible[v][slot_group[s]] {
            continue;
        }
        visited[s] = true;
        let free = match owner[s] {
            None => true,
            Some(w) => augment(w, compatible, slot_group, owner, visited),
        };
        if free {
            owner[s] = Some(v);
            return true;
        }
    }
    false
}

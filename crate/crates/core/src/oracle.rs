//! Exhaustive reference procedures used for differential testing and by the
//! CLI's `--oracle` switch. Both are exponential and refuse large inputs.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Phylogeny, StateId};
use crate::network::{build_network, Labeling, NetVertex, NetworkError, Summary};
use crate::temporal::ConstraintSystem;

pub const DEFAULT_ADMISSIBLE_LIMIT: usize = 12;
pub const DEFAULT_FEASIBLE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("instance too large for the oracle: {size} exceeds limit {limit}")]
pub struct InstanceTooLarge {
    pub size: usize,
    pub limit: usize,
}

/// Tries every assignment of the global state set to the non-leaf network
/// vertices, per character, in canonical order (last vertex varies fastest)
/// and returns the first whose classes are all rooted.
pub fn oracle_admissible(
    phylogeny: &Phylogeny,
    summary: &Summary,
    limit: usize,
) -> Result<Option<Labeling>, NetworkError> {
    let network = build_network(phylogeny, summary)?;
    let vertices = network.vertices().to_vec();
    let free: Vec<usize> = (0..vertices.len())
        .filter(|&i| !network.is_leaf(vertices[i]))
        .collect();
    if free.len() > limit {
        return Err(NetworkError::InstanceTooLarge {
            size: free.len(),
            limit,
        });
    }
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (a, b) in network.edges() {
        let ia = vertices.binary_search(&a).expect("edge endpoint");
        let ib = vertices.binary_search(&b).expect("edge endpoint");
        adjacency[ia].push(ib);
    }
    let states = phylogeny.states().len();

    let mut rows = Vec::new();
    for c in phylogeny.character_ids() {
        let mut row: Vec<StateId> = vertices
            .iter()
            .map(|v| match v {
                NetVertex::Tree(t) => phylogeny.label(*t, c).unwrap_or(StateId(0)),
                NetVertex::Up(_) => StateId(0),
            })
            .collect();
        let mut found = every_class_has_a_root(&adjacency, &row);
        while !found && advance(&mut row, &free, states) {
            found = every_class_has_a_root(&adjacency, &row);
        }
        if !found {
            return Ok(None);
        }
        rows.push(row);
    }
    Ok(Some(Labeling::from_rows(vertices, rows)))
}

/// Next assignment of the free positions, last position fastest; `false`
/// after the final one.
fn advance(row: &mut [StateId], free: &[usize], states: usize) -> bool {
    for &i in free.iter().rev() {
        if row[i].0 + 1 < states {
            row[i] = StateId(row[i].0 + 1);
            return true;
        }
        row[i] = StateId(0);
    }
    false
}

fn every_class_has_a_root(adjacency: &[Vec<usize>], row: &[StateId]) -> bool {
    let states: BTreeSet<StateId> = row.iter().copied().collect();
    states.into_iter().all(|s| {
        let members: Vec<usize> = (0..row.len()).filter(|&i| row[i] == s).collect();
        members.iter().any(|&r| {
            let mut seen = vec![false; row.len()];
            seen[r] = true;
            let mut stack = vec![r];
            while let Some(v) = stack.pop() {
                for &w in &adjacency[v] {
                    if row[w] == s && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            members.iter().all(|&m| seen[m])
        })
    })
}

/// Decides feasibility by enumerating every simple cycle of the constraint
/// graph (after merging equal variables) and looking for one whose bounds
/// sum below zero, or to zero through a strict constraint.
pub fn oracle_feasible(sys: &ConstraintSystem, limit: usize) -> Result<bool, InstanceTooLarge> {
    let n = sys.variables().len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for &(a, b) in sys.equalities() {
            let m = label[a].min(label[b]);
            if label[a] != m || label[b] != m {
                label[a] = m;
                label[b] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let reps: Vec<usize> = label.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let m = reps.len();
    if m > limit {
        return Err(InstanceTooLarge { size: m, limit });
    }
    let node = |v: usize| reps.binary_search(&label[v]).expect("representative");

    // best[(from, to)] = smallest (bound, -strict) over parallel constraints
    let mut best: Vec<Vec<Option<(i64, i64)>>> = vec![vec![None; m]; m];
    for c in sys.constraints() {
        let (from, to) = (node(c.y), node(c.x));
        let w = (c.bound, -(c.strict as i64));
        let slot = &mut best[from][to];
        if slot.is_none_or(|old| w < old) {
            *slot = Some(w);
        }
    }
    let bad = |w: (i64, i64)| w < (0, 0);
    for (v, row) in best.iter().enumerate() {
        if row[v].is_some_and(bad) {
            return Ok(false);
        }
    }
    for start in 0..m {
        let mut on_path = vec![false; m];
        on_path[start] = true;
        if bad_cycle_from(&best, start, start, (0, 0), &mut on_path) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn bad_cycle_from(
    best: &[Vec<Option<(i64, i64)>>],
    start: usize,
    at: usize,
    acc: (i64, i64),
    on_path: &mut [bool],
) -> bool {
    for next in start..best.len() {
        let Some(w) = best[at][next] else { continue };
        let total = (acc.0 + w.0, acc.1 + w.1);
        if next == start {
            if at != start && total < (0, 0) {
                return true;
            }
            continue;
        }
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        let found = bad_cycle_from(best, start, next, total, on_path);
        on_path[next] = false;
        if found {
            return true;
        }
    }
    false
}

use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::brg::Brg;

/// Why the target set is not reached almost surely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReachWitness {
    /// Non-final states the players can jointly keep the play in forever.
    EndComponent { states: Vec<usize> },
    /// A non-final state without any boundary action.
    Deadlock { state: usize },
}

impl fmt::Display for ReachWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReachWitness::EndComponent { states } => {
                let ids: Vec<String> = states.iter().map(|s| format!("s{s}")).collect();
                write!(f, "end component {{{}}} avoids the final states", ids.join(", "))
            }
            ReachWitness::Deadlock { state } => write!(f, "non-final state s{state} has no action"),
        }
    }
}

/// Treats every choice as adversarial and looks for an end component among
/// the non-final states. None exists iff every strategy pair reaches the
/// final states with probability one.
pub fn check_assumption_reach(brg: &Brg) -> Result<(), ReachWitness> {
    let n = brg.len();
    for s in 0..n {
        if !brg.states[s].is_final && brg.transitions[s].is_empty() {
            return Err(ReachWitness::Deadlock { state: s });
        }
    }
    let mut alive: Vec<bool> = brg.states.iter().map(|s| !s.is_final).collect();
    // Per state, the actions still kept inside the candidate set.
    let mut acts: Vec<Vec<usize>> = (0..n)
        .map(|s| (0..brg.transitions[s].len()).collect())
        .collect();

    loop {
        for s in 0..n {
            if alive[s] {
                acts[s].retain(|&j| brg.transitions[s][j].successors.iter().all(|(t, _)| alive[*t]));
            }
        }
        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let nodes: Vec<NodeIndex> = (0..n).map(|s| g.add_node(s)).collect();
        for s in (0..n).filter(|&s| alive[s]) {
            for &j in &acts[s] {
                for (t, _) in &brg.transitions[s][j].successors {
                    g.add_edge(nodes[s], nodes[*t], ());
                }
            }
        }
        let mut scc_of = vec![usize::MAX; n];
        for (i, comp) in tarjan_scc(&g).iter().enumerate() {
            for v in comp {
                scc_of[g[*v]] = i;
            }
        }
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            let before = acts[s].len();
            acts[s].retain(|&j| {
                brg.transitions[s][j]
                    .successors
                    .iter()
                    .all(|(t, _)| scc_of[*t] == scc_of[s])
            });
            changed |= acts[s].len() != before;
            if acts[s].is_empty() {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut first: Option<Vec<usize>> = None;
    let survivors: Vec<usize> = (0..n).filter(|&s| alive[s]).collect();
    if let Some(&s0) = survivors.first() {
        // Report the end component containing the smallest surviving state.
        let mut comp = vec![s0];
        let mut stack = vec![s0];
        while let Some(s) = stack.pop() {
            for &j in &acts[s] {
                for (t, _) in &brg.transitions[s][j].successors {
                    if !comp.contains(t) {
                        comp.push(*t);
                        stack.push(*t);
                    }
                }
            }
        }
        comp.sort_unstable();
        first = Some(comp);
    }
    match first {
        Some(states) => Err(ReachWitness::EndComponent { states }),
        None => Ok(()),
    }
}

//! The boundary region graph and exploration of its reachable part.
//!
//! A state pairs a concrete configuration `(ℓ, ν)` with a region `ζ` whose
//! closure contains `ν`. Actions `((b, c, a), ζ_a)` wait until clock `c`
//! reaches `b` and fire `a`, landing in (the closure of) `ζ_a`.

mod actions;
mod dot;

pub use actions::{boundary_actions, reward, transition_distribution, BoundaryAction, BoundaryKind};
pub use dot::{dump, export_dot, BrgDump};

use std::collections::{HashMap, VecDeque};

use crate::clock::{ClockRegion, ClockValuation};
use crate::error::{Error, Result};
use crate::model::{ConcreteState, GameArena, Player};
use crate::rational::Rational;

pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BrgState {
    pub location: usize,
    pub valuation: ClockValuation,
    pub region: ClockRegion,
    pub owner: Player,
    pub is_final: bool,
}

#[derive(Debug, Clone)]
pub struct BrgTransition {
    pub action: BoundaryAction,
    pub reward: Rational,
    /// Successor state indices with exact probabilities summing to 1.
    pub successors: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone)]
pub struct Brg {
    pub states: Vec<BrgState>,
    /// Per state, its boundary actions in canonical order.
    pub transitions: Vec<Vec<BrgTransition>>,
    pub initial: usize,
    index: HashMap<(usize, ClockValuation, ClockRegion), usize>,
}

impl Brg {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn find(&self, location: usize, valuation: &ClockValuation, region: &ClockRegion) -> Option<usize> {
        self.index
            .get(&(location, valuation.clone(), region.clone()))
            .copied()
    }

    /// The state `((ℓ, ν), (ℓ, [ν]))` standing for a concrete configuration.
    pub fn find_concrete(&self, arena: &GameArena, s: &ConcreteState) -> Option<usize> {
        let region = arena.ctx().region_of(&s.valuation).ok()?;
        self.find(s.location, &s.valuation, &region)
    }
}

/// `|L| · (k+1)^|C| · |regions|`, the size bound for graphs explored from
/// integer-valued roots.
pub fn finiteness_bound(arena: &GameArena) -> usize {
    let ctx = arena.ctx();
    arena.pta.locations.len()
        * (ctx.k() as usize + 1).pow(ctx.len() as u32)
        * ctx.all_regions().len()
}

/// Explores from the concrete configuration `initial`, i.e. from
/// `((ℓ₀, ν₀), (ℓ₀, [ν₀]))`.
pub fn explore(arena: &GameArena, initial: &ConcreteState, cap: usize) -> Result<Brg> {
    if !initial.valuation.satisfies(arena.invariant(initial.location)) {
        return Err(Error::Precondition(format!(
            "initial state {} violates the location invariant",
            arena.display_state(initial)
        )));
    }
    let region = arena.ctx().region_of(&initial.valuation)?;
    explore_rooted(arena, initial.location, &initial.valuation, &region, cap)
}

/// Explores from an arbitrary state `((ℓ, ν), (ℓ, ζ))` with `ν ∈ CLOS(ζ)`.
pub fn explore_rooted(
    arena: &GameArena,
    location: usize,
    valuation: &ClockValuation,
    region: &ClockRegion,
    cap: usize,
) -> Result<Brg> {
    let ctx = arena.ctx();
    if !region.closure_contains(valuation) {
        return Err(Error::Precondition(format!(
            "valuation {} is not in the closure of region {}",
            ctx.display_valuation(valuation),
            region.display(ctx)
        )));
    }
    if !ctx.satisfies(region, arena.invariant(location))? {
        return Err(Error::Precondition(format!(
            "region {} violates the invariant of {}",
            region.display(ctx),
            arena.location_name(location)
        )));
    }

    let mut brg = Brg {
        states: Vec::new(),
        transitions: Vec::new(),
        initial: 0,
        index: HashMap::new(),
    };
    let mut action_cache: HashMap<(usize, ClockRegion), Vec<BoundaryAction>> = HashMap::new();
    let mut queue = VecDeque::new();

    let intern = |brg: &mut Brg, st: BrgState, queue: &mut VecDeque<usize>| -> Result<usize> {
        let key = (st.location, st.valuation.clone(), st.region.clone());
        if let Some(&i) = brg.index.get(&key) {
            return Ok(i);
        }
        if brg.states.len() >= cap {
            return Err(Error::StateCap { cap });
        }
        let i = brg.states.len();
        brg.states.push(st);
        brg.transitions.push(Vec::new());
        brg.index.insert(key, i);
        queue.push_back(i);
        Ok(i)
    };

    let root = make_state(arena, location, valuation.clone(), region.clone());
    brg.initial = intern(&mut brg, root, &mut queue)?;

    while let Some(i) = queue.pop_front() {
        let st = brg.states[i].clone();
        let acts = action_cache
            .entry((st.location, st.region.clone()))
            .or_insert_with(|| boundary_actions(arena, st.location, &st.region))
            .clone();
        let mut transitions = Vec::with_capacity(acts.len());
        for act in acts {
            let r = reward(&st, &act)?;
            let mut successors = Vec::new();
            for (next, p) in transition_distribution(arena, &st, &act) {
                let j = intern(&mut brg, next, &mut queue)?;
                successors.push((j, p));
            }
            transitions.push(BrgTransition {
                action: act,
                reward: r,
                successors,
            });
        }
        brg.transitions[i] = transitions;
    }
    Ok(brg)
}

pub(crate) fn make_state(
    arena: &GameArena,
    location: usize,
    valuation: ClockValuation,
    region: ClockRegion,
) -> BrgState {
    BrgState {
        location,
        valuation,
        region,
        owner: arena.owner(location),
        is_final: arena.is_final(location),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use num_traits::{One, Zero};

    #[test]
    fn m1_explores_finitely_with_integer_valuations() {
        let m = fixtures::m1();
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        assert!(brg.len() <= finiteness_bound(&m.arena));
        assert!(brg.states.iter().any(|s| s.is_final));
        for s in &brg.states {
            assert!(s.valuation.values().iter().all(|v| v.is_integer()));
        }
    }

    #[test]
    fn m2_contains_the_retry_cycle() {
        let m = fixtures::m2();
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        let root = &brg.transitions[brg.initial];
        assert_eq!(root.len(), 1);
        assert!(root[0].successors.iter().any(|(j, _)| *j == brg.initial));
    }

    #[test]
    fn initial_state_must_satisfy_invariant() {
        let m = fixtures::m2();
        let bad = ConcreteState {
            location: m.initial.location,
            valuation: m.arena.ctx().valuation(vec![crate::rational::ratio(3, 2)]).unwrap(),
        };
        assert!(matches!(
            explore(&m.arena, &bad, DEFAULT_STATE_CAP),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn state_cap_is_enforced() {
        let m = fixtures::m1();
        assert!(matches!(explore(&m.arena, &m.initial, 2), Err(Error::StateCap { cap: 2 })));
    }

    #[test]
    fn structural_invariants_hold_on_fixtures() {
        for (name, m) in fixtures::all() {
            let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
            for (i, st) in brg.states.iter().enumerate() {
                assert!(st.region.closure_contains(&st.valuation), "{name} state {i}");
                for tr in &brg.transitions[i] {
                    let total: Rational = tr.successors.iter().map(|(_, p)| p).sum();
                    assert!(total.is_one(), "{name}: probabilities sum to {total}");
                    assert!(tr.reward >= Rational::zero());
                }
            }
        }
    }
}

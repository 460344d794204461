use num_traits::{Signed, Zero};

use super::{ConcreteState, GameArena, TimedAction};
use crate::error::{Error, Result};
use crate::rational::{int, Rational};

/// `(t, a) ∈ A(ℓ, ν)`: the invariant holds on every region crossed while
/// delaying, `ν + t` stays within `k` and satisfies `E(ℓ, a)`.
pub fn timed_action_allowed(arena: &GameArena, s: &ConcreteState, ta: &TimedAction) -> Result<bool> {
    let pta = &arena.pta;
    if ta.action >= pta.actions.len() {
        return Err(Error::Domain(format!("unknown action index {}", ta.action)));
    }
    if ta.delay.is_negative() {
        return Ok(false);
    }
    let Some(edge) = pta.edge(s.location, ta.action) else {
        return Ok(false);
    };
    let ctx = arena.ctx();
    let k = int(ctx.k() as i64);
    let after = s.valuation.shifted(&ta.delay);
    if after.values().iter().any(|x| *x > k) {
        return Ok(false);
    }
    let from = ctx.region_of(&s.valuation)?;
    let to = ctx.region_of(&after)?;
    let inv = arena.invariant(s.location);
    for r in ctx.future_chain(&from) {
        if !ctx.satisfies(&r, inv)? {
            return Ok(false);
        }
        if r == to {
            return Ok(after.satisfies(&edge.guard));
        }
    }
    Err(Error::Internal("delayed region not found on the time-successor chain".into()))
}

/// The distribution `p((ℓ, ν), (t, a))`, aggregated over branches that
/// produce the same successor. Outcomes keep first-occurrence order.
pub fn concrete_step(
    arena: &GameArena,
    s: &ConcreteState,
    ta: &TimedAction,
) -> Result<Vec<(ConcreteState, Rational)>> {
    if !timed_action_allowed(arena, s, ta)? {
        return Err(Error::Precondition(format!(
            "timed action ({}, {}) not allowed at {}",
            ta.delay,
            arena.pta.actions[ta.action],
            arena.display_state(s)
        )));
    }
    let edge = arena.pta.edge(s.location, ta.action).expect("allowed action has an edge");
    let after = s.valuation.shifted(&ta.delay);
    let mut out: Vec<(ConcreteState, Rational)> = Vec::new();
    for b in &edge.branches {
        let next = ConcreteState {
            location: b.target,
            valuation: after.reset(&b.resets),
        };
        match out.iter_mut().find(|(st, _)| *st == next) {
            Some((_, p)) => *p += &b.prob,
            None => out.push((next, b.prob.clone())),
        }
    }
    out.retain(|(_, p)| !p.is_zero());
    Ok(out)
}

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{make_state, BrgState};
use crate::clock::ClockRegion;
use crate::error::{Error, Result};
use crate::model::GameArena;
use crate::rational::{int, Rational};

/// Which boundary of the target region the action stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// The target is thin and reached exactly.
    Thin,
    /// Lower boundary of a thick target (entered from its thin predecessor).
    Infimum,
    /// Upper boundary of a thick target (left into its thin successor).
    Supremum,
}

/// `((b, c, a), ζ_a)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryAction {
    pub b: u32,
    pub clock: usize,
    pub action: usize,
    pub target: ClockRegion,
    pub kind: BoundaryKind,
}

impl BoundaryAction {
    /// Regions are keyed by their representative point, which for one clock
    /// is time order: `{1}` before `1<c<2`.
    fn key(&self) -> (usize, u32, usize, Vec<Rational>) {
        (self.action, self.b, self.clock, self.target.representative())
    }

    pub fn display(&self, arena: &GameArena) -> String {
        let ctx = arena.ctx();
        format!(
            "(({}, {}, {}), {})",
            self.b,
            ctx.clock_name(self.clock),
            arena.pta.actions[self.action],
            self.target.display(ctx)
        )
    }
}

impl PartialOrd for BoundaryAction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BoundaryAction {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// `Â(ℓ, ζ)` in canonical order `(a, b, c, ζ_a)`.
///
/// Future regions are scanned while the invariant of `ℓ` holds. A thin
/// enabled region yields one action; a thick one yields its infimum and
/// supremum boundaries. When the thick region is `ζ` itself its lower
/// boundary lies in the past, so the infimum action uses the thin
/// predecessor's coordinates and its delay clamps to zero (fire at once).
pub fn boundary_actions(arena: &GameArena, location: usize, region: &ClockRegion) -> Vec<BoundaryAction> {
    let ctx = arena.ctx();
    let inv = arena.invariant(location);
    let chain = ctx.future_chain(region);
    let coords = |thin: &ClockRegion| -> (u32, usize) {
        let c = thin.zero_block()[0];
        (thin.integer_part(c), c)
    };
    let mut out = Vec::new();
    for (i, z) in chain.iter().enumerate() {
        if !ctx.satisfies(z, inv).unwrap_or(false) {
            break;
        }
        for edge in arena.pta.edges_from(location) {
            if !ctx.satisfies(z, &edge.guard).unwrap_or(false) {
                continue;
            }
            let mut push = |(b, clock): (u32, usize), kind| {
                out.push(BoundaryAction {
                    b,
                    clock,
                    action: edge.action,
                    target: z.clone(),
                    kind,
                })
            };
            if z.is_thin() {
                push(coords(z), BoundaryKind::Thin);
            } else {
                let below = if i > 0 {
                    chain[i - 1].clone()
                } else {
                    ctx.time_predecessor(z).expect("thick region has a predecessor")
                };
                push(coords(&below), BoundaryKind::Infimum);
                let above = ctx.time_successor(z).expect("thick region has a successor");
                push(coords(&above), BoundaryKind::Supremum);
            }
        }
    }
    out.sort();
    out.dedup_by(|a, b| a.key() == b.key());
    out
}

/// Delay `b − ν(c)`; the zero-clamped case only arises for the immediate
/// infimum action of a thick source region.
pub(crate) fn delay(state: &BrgState, act: &BoundaryAction) -> Result<Rational> {
    let t = int(act.b as i64) - state.valuation.get(act.clock);
    if t.is_negative() {
        if act.kind == BoundaryKind::Infimum && act.target == state.region {
            return Ok(Rational::zero());
        }
        return Err(Error::Internal(format!(
            "negative delay {t} for boundary action with b={} at a reachable state",
            act.b
        )));
    }
    Ok(t)
}

/// `π̂(s, α) = b − ν(c)`.
pub fn reward(state: &BrgState, act: &BoundaryAction) -> Result<Rational> {
    delay(state, act)
}

/// `p̂(· | s, α)`: apply every branch of `δ(ℓ, a)` to `ν_a = ν + delay`
/// and to the target region, aggregating equal successors.
pub fn transition_distribution(
    arena: &GameArena,
    state: &BrgState,
    act: &BoundaryAction,
) -> Vec<(BrgState, Rational)> {
    let ctx = arena.ctx();
    let t = delay(state, act).unwrap_or_else(|_| Rational::zero());
    let fired = state.valuation.shifted(&t);
    let edge = arena
        .pta
        .edge(state.location, act.action)
        .expect("boundary action refers to an existing edge");
    let mut out: Vec<(BrgState, Rational)> = Vec::new();
    for br in &edge.branches {
        let next = make_state(
            arena,
            br.target,
            fired.reset(&br.resets),
            ctx.reset_region(&act.target, &br.resets),
        );
        match out.iter_mut().find(|(s, _)| *s == next) {
            Some((_, p)) => *p += &br.prob,
            None => out.push((next, br.prob.clone())),
        }
    }
    out.retain(|(_, p)| !p.is_zero());
    out
}

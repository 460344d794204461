use std::collections::BTreeMap;

use serde::Serialize;

use crate::brg::{boundary_actions, BoundaryAction, BoundaryKind, Brg};
use crate::clock::{ClockRegion, ClockValuation};
use crate::model::{GameArena, Player};
use crate::rational::{int, Rational};
use crate::{Error, Result};

use super::reach::check_assumption_reach;
use super::value::{ExactValues, ExtValue};

/// `e` or `e - ν(c)` with integer `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SimpleForm {
    Constant { e: i64 },
    Slope { e: i64, clock: usize },
}

impl SimpleForm {
    pub fn eval(&self, v: &ClockValuation) -> Rational {
        match *self {
            SimpleForm::Constant { e } => int(e),
            SimpleForm::Slope { e, clock } => int(e) - v.get(clock),
        }
    }

    pub fn display(&self, clocks: &[String]) -> String {
        match *self {
            SimpleForm::Constant { e } => e.to_string(),
            SimpleForm::Slope { e, clock } => format!("{e} - {}", clocks[clock]),
        }
    }
}

/// Value of one (location, region) pair: `None` means `+∞`.
pub type RegionValue = Option<SimpleForm>;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionForm {
    pub location: usize,
    pub region: ClockRegion,
    pub value: RegionValue,
    /// Optimal boundary action in canonical order, absent for final or stuck pairs.
    pub action: Option<BoundaryAction>,
}

impl RegionForm {
    pub fn eval(&self, v: &ClockValuation) -> ExtValue {
        match &self.value {
            Some(f) => ExtValue::Finite(f.eval(v)),
            None => ExtValue::Infinite,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaSimpleSolution {
    pub regions: Vec<RegionForm>,
    pub values: ExactValues,
    pub iterations: usize,
}

impl TaSimpleSolution {
    pub fn form(&self, location: usize, region: &ClockRegion) -> Option<&RegionForm> {
        self.regions
            .iter()
            .find(|r| r.location == location && &r.region == region)
    }
}

/// Form of `t + g(ν')` as a function of the source valuation, where `ν'` is
/// reached through `act` and `resets`.
fn compose(act: &BoundaryAction, source: &ClockRegion, resets: &[usize], g: SimpleForm) -> SimpleForm {
    let immediate = act.kind == BoundaryKind::Infimum && act.target == *source;
    let b = i64::from(act.b);
    match (immediate, g) {
        (true, SimpleForm::Constant { .. }) => g,
        (true, SimpleForm::Slope { e, clock }) if resets.contains(&clock) => SimpleForm::Constant { e },
        (true, SimpleForm::Slope { .. }) => g,
        (false, SimpleForm::Constant { e }) => SimpleForm::Slope { e: b + e, clock: act.clock },
        (false, SimpleForm::Slope { e, clock }) if resets.contains(&clock) => {
            SimpleForm::Slope { e: b + e, clock: act.clock }
        }
        (false, SimpleForm::Slope { .. }) => g,
    }
}

struct Node {
    location: usize,
    region: ClockRegion,
    is_final: bool,
    owner: Player,
    witness: ClockValuation,
    moves: Vec<(BoundaryAction, Vec<usize>, usize)>,
}

/// Computes the value of a timed-automaton game region by region as a
/// simple function, iterating from `0` on final pairs and `+∞` elsewhere.
pub fn solve_ta_simple(arena: &GameArena, brg: &Brg) -> Result<TaSimpleSolution> {
    if !arena.pta.is_timed_automaton() {
        return Err(Error::Precondition("model has probabilistic branches; not a timed automaton".into()));
    }
    check_assumption_reach(brg).map_err(Error::Assumption)?;
    let ctx = arena.ctx();

    let mut keys: BTreeMap<(usize, ClockRegion), usize> = BTreeMap::new();
    for st in &brg.states {
        let n = keys.len();
        keys.entry((st.location, st.region.clone())).or_insert(n);
    }
    let mut order: Vec<((usize, ClockRegion), usize)> = keys.iter().map(|(k, &i)| (k.clone(), i)).collect();
    order.sort_by_key(|(_, i)| *i);

    let mut nodes = Vec::with_capacity(order.len());
    for ((location, region), _) in order {
        let witness = ctx.valuation(region.representative())?;
        let mut moves = Vec::new();
        if !arena.is_final(location) {
            for act in boundary_actions(arena, location, &region) {
                let edge = arena
                    .pta
                    .edge(location, act.action)
                    .ok_or_else(|| Error::Internal("boundary action without an edge".into()))?;
                let br = &edge.branches[0];
                let succ_region = ctx.reset_region(&act.target, &br.resets);
                let succ = *keys.get(&(br.target, succ_region)).ok_or_else(|| {
                    Error::Internal(format!("successor of {} missing from the graph", arena.location_name(location)))
                })?;
                moves.push((act, br.resets.clone(), succ));
            }
        }
        nodes.push(Node {
            is_final: arena.is_final(location),
            owner: arena.owner(location),
            location,
            region,
            witness,
            moves,
        });
    }

    let mut cur: Vec<RegionValue> = nodes
        .iter()
        .map(|n| n.is_final.then_some(SimpleForm::Constant { e: 0 }))
        .collect();
    let mut choice: Vec<Option<usize>> = vec![None; nodes.len()];
    let cap = 2 * nodes.len() + 2;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut next = cur.clone();
        for (i, n) in nodes.iter().enumerate() {
            if n.is_final {
                continue;
            }
            let mut best: Option<(usize, RegionValue, Option<Rational>)> = None;
            for (j, (act, resets, succ)) in n.moves.iter().enumerate() {
                let cand = cur[*succ].map(|g| compose(act, &n.region, resets, g));
                let at = cand.map(|f| f.eval(&n.witness));
                let take = match &best {
                    None => true,
                    Some((_, _, b)) => match n.owner {
                        // `None` stands for +∞ on both sides.
                        Player::Min => matches!((&at, b), (Some(x), Some(y)) if x < y) || (at.is_some() && b.is_none()),
                        Player::Max => matches!((&at, b), (Some(x), Some(y)) if x > y) || (at.is_none() && b.is_some()),
                    },
                };
                if take {
                    best = Some((j, cand, at));
                }
            }
            if let Some((j, v, _)) = best {
                next[i] = v;
                choice[i] = Some(j);
            }
        }
        if next == cur {
            break;
        }
        cur = next;
        if iterations >= cap {
            return Err(Error::Convergence {
                iterations,
                residual: f64::INFINITY,
            });
        }
    }

    let regions: Vec<RegionForm> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| RegionForm {
            location: n.location,
            region: n.region.clone(),
            value: cur[i],
            action: choice[i].map(|j| n.moves[j].0.clone()),
        })
        .collect();
    let values = brg
        .states
        .iter()
        .map(|st| regions[keys[&(st.location, st.region.clone())]].eval(&st.valuation))
        .collect();
    Ok(TaSimpleSolution {
        regions,
        values: ExactValues::new(values),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brg::{explore, DEFAULT_STATE_CAP};
    use crate::model::fixtures;
    use crate::rational::ratio;
    use crate::solver::{solve_exact, SolveConfig};

    fn solve(m: &crate::model::Model) -> (Brg, TaSimpleSolution) {
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        let sol = solve_ta_simple(&m.arena, &brg).unwrap();
        (brg, sol)
    }

    #[test]
    fn m1_initial_form() {
        let m = fixtures::m1();
        let (brg, sol) = solve(&m);
        assert_eq!(sol.values[brg.initial], ExtValue::Finite(int(1)));
        let init = &brg.states[brg.initial];
        let f = sol.form(init.location, &init.region).unwrap();
        assert_eq!(f.value, Some(SimpleForm::Slope { e: 1, clock: 0 }));
        assert_eq!(f.action.as_ref().map(|a| (a.b, a.kind)), Some((1, BoundaryKind::Thin)));
    }

    #[test]
    fn m1x_initial_form() {
        let (brg, sol) = solve(&fixtures::m1x());
        let init = &brg.states[brg.initial];
        assert_eq!(sol.form(init.location, &init.region).unwrap().value, Some(SimpleForm::Slope { e: 2, clock: 0 }));
    }

    #[test]
    fn agrees_with_exact_on_timed_automata() {
        for m in [fixtures::m1(), fixtures::m1x()] {
            let (brg, sol) = solve(&m);
            let exact = solve_exact(&brg, &SolveConfig::default()).unwrap();
            assert_eq!(sol.values, exact.values);
        }
    }

    #[test]
    fn probabilistic_model_is_rejected() {
        let m = fixtures::m2();
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        assert!(matches!(solve_ta_simple(&m.arena, &brg), Err(Error::Precondition(_))));
    }

    #[test]
    fn compose_rules() {
        let ctx = crate::clock::ClockContext::new(["x", "y"], 2).unwrap();
        let reg = |x: Rational, y: Rational| ctx.region_of(&ctx.valuation(vec![x, y]).unwrap()).unwrap();
        let src = reg(ratio(1, 4), ratio(1, 2));
        let thin = BoundaryAction {
            b: 1,
            clock: 1,
            action: 0,
            target: reg(ratio(3, 4), int(1)),
            kind: BoundaryKind::Thin,
        };
        let k = SimpleForm::Constant { e: 3 };
        assert_eq!(compose(&thin, &src, &[], k), SimpleForm::Slope { e: 4, clock: 1 });
        let sx = SimpleForm::Slope { e: 2, clock: 0 };
        assert_eq!(compose(&thin, &src, &[], sx), sx);
        assert_eq!(compose(&thin, &src, &[0], sx), SimpleForm::Slope { e: 3, clock: 1 });

        let immediate = BoundaryAction {
            b: 0,
            clock: 1,
            action: 0,
            target: src.clone(),
            kind: BoundaryKind::Infimum,
        };
        assert_eq!(compose(&immediate, &src, &[], k), k);
        assert_eq!(compose(&immediate, &src, &[0], sx), SimpleForm::Constant { e: 2 });
        assert_eq!(compose(&immediate, &src, &[1], sx), sx);
    }
}

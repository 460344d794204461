use std::fmt;

use num_traits::{One, Signed};
use serde::Serialize;

use super::{GameArena, Model, Pta};
use crate::clock::{ClockConstraint, ClockRegion, CmpOp, SimpleConstraint};
use crate::rational::fmt_short;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ProbabilitySum { location: String, action: String, sum: String },
    NonPositiveProbability { location: String, action: String },
    BoundExceedsK { place: String, bound: i64, k: u32 },
    NoActions { location: String, region: String },
    Zeno { cycle: Vec<String> },
    InitialInvariant { location: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilitySum { location, action, sum } => {
                write!(f, "delta({location}, {action}): sum={sum} ≠ 1")
            }
            Violation::NonPositiveProbability { location, action } => {
                write!(f, "delta({location}, {action}): branch probability must be positive")
            }
            Violation::BoundExceedsK { place, bound, k } => {
                write!(f, "{place}: bound {bound} > k={k}")
            }
            Violation::NoActions { location, region } => {
                write!(f, "no action available at {location} in region {region}")
            }
            Violation::Zeno { cycle } => {
                write!(f, "cycle without time divergence: {}", cycle.join(" -> "))
            }
            Violation::InitialInvariant { location } => {
                write!(f, "initial valuation violates the invariant of {location}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// Checks probability sums, constraint bounds, nonempty action sets at
/// every region, structural non-Zenoness and the initial invariant.
pub fn validate(model: &Model) -> ValidationReport {
    let arena = &model.arena;
    let pta = &arena.pta;
    let ctx = &pta.ctx;
    let mut violations = Vec::new();

    for e in &pta.edges {
        let (location, action) = (
            pta.locations[e.source].name.clone(),
            pta.actions[e.action].clone(),
        );
        if e.branches.iter().any(|b| !b.prob.is_positive()) {
            violations.push(Violation::NonPositiveProbability {
                location: location.clone(),
                action: action.clone(),
            });
        }
        let sum: crate::rational::Rational = e.branches.iter().map(|b| &b.prob).sum();
        if !sum.is_one() {
            violations.push(Violation::ProbabilitySum {
                location: location.clone(),
                action: action.clone(),
                sum: fmt_short(&sum),
            });
        }
        bound_violations(
            &e.guard,
            format!("guard of ({location}, {action})"),
            ctx.k(),
            &mut violations,
        );
    }
    for l in &pta.locations {
        bound_violations(
            &l.invariant,
            format!("invariant of {}", l.name),
            ctx.k(),
            &mut violations,
        );
    }
    let bounds_ok = !violations
        .iter()
        .any(|v| matches!(v, Violation::BoundExceedsK { .. }));

    if bounds_ok {
        let regions = ctx.all_regions();
        for (l, loc) in pta.locations.iter().enumerate() {
            let stuck = regions.iter().find(|r| {
                ctx.satisfies(r, &loc.invariant).unwrap_or(false) && !has_action(arena, l, r)
            });
            if let Some(r) = stuck {
                violations.push(Violation::NoActions {
                    location: loc.name.clone(),
                    region: r.display(ctx),
                });
            }
        }
        let nz = check_structural_nonzeno(pta);
        if let Some(cycle) = nz.cycle {
            violations.push(Violation::Zeno { cycle });
        }
    }

    if !model
        .initial
        .valuation
        .satisfies(arena.invariant(model.initial.location))
    {
        violations.push(Violation::InitialInvariant {
            location: arena.location_name(model.initial.location).to_string(),
        });
    }

    ValidationReport { violations }
}

fn bound_violations(phi: &ClockConstraint, place: String, k: u32, out: &mut Vec<Violation>) {
    for s in &phi.conjuncts {
        if s.bound < 0 || s.bound > k as i64 {
            out.push(Violation::BoundExceedsK {
                place: place.clone(),
                bound: s.bound,
                k,
            });
        }
    }
}

/// Some action is enabled in a future region reachable from `r` while the
/// invariant holds along the way.
fn has_action(arena: &GameArena, location: usize, r: &ClockRegion) -> bool {
    let ctx = arena.ctx();
    let inv = arena.invariant(location);
    for z in ctx.future_chain(r) {
        if !ctx.satisfies(&z, inv).unwrap_or(false) {
            return false;
        }
        if arena
            .pta
            .edges_from(location)
            .any(|e| ctx.satisfies(&z, &e.guard).unwrap_or(false))
        {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Serialize)]
pub struct NonZenoReport {
    pub ok: bool,
    /// `source -[action]-> target` hops of an offending cycle.
    pub cycle: Option<Vec<String>>,
}

struct Hop {
    from: usize,
    to: usize,
    resets: Vec<usize>,
    /// Clocks `c` for which the edge's enabledness (with the source
    /// invariant) entails `c ≥ 1`.
    lower_one: Vec<usize>,
    label: String,
}

/// Every cycle of the location graph must reset some clock `c` and pass an
/// edge whose enabledness entails `c ≥ 1`.
pub fn check_structural_nonzeno(pta: &Pta) -> NonZenoReport {
    let ctx = &pta.ctx;
    let regions = ctx.all_regions();
    let mut hops = Vec::new();
    for e in &pta.edges {
        let inv = &pta.locations[e.source].invariant;
        let lower_one: Vec<usize> = (0..ctx.len())
            .filter(|&c| {
                let ge1 = ClockConstraint::new(vec![SimpleConstraint::atomic(c, CmpOp::Ge, 1)]);
                regions.iter().all(|r| {
                    let enabled = ctx.satisfies(r, &e.guard).unwrap_or(false)
                        && ctx.satisfies(r, inv).unwrap_or(false);
                    !enabled || ctx.satisfies(r, &ge1).unwrap_or(false)
                })
            })
            .collect();
        for b in &e.branches {
            hops.push(Hop {
                from: e.source,
                to: b.target,
                resets: b.resets.clone(),
                lower_one: lower_one.clone(),
                label: format!(
                    "{} -[{}]-> {}",
                    pta.locations[e.source].name, pta.actions[e.action], pta.locations[b.target].name
                ),
            });
        }
    }

    let n = pta.locations.len();
    // Simple cycles whose smallest location is `start`.
    for start in 0..n {
        let mut path: Vec<usize> = Vec::new();
        let mut on_path = vec![false; n];
        on_path[start] = true;
        if let Some(cycle) = dfs_cycles(start, start, &hops, &mut path, &mut on_path, ctx.len()) {
            return NonZenoReport {
                ok: false,
                cycle: Some(cycle.iter().map(|&h| hops[h].label.clone()).collect()),
            };
        }
    }
    NonZenoReport { ok: true, cycle: None }
}

fn dfs_cycles(
    start: usize,
    at: usize,
    hops: &[Hop],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    clocks: usize,
) -> Option<Vec<usize>> {
    for (h, hop) in hops.iter().enumerate() {
        if hop.from != at || hop.to < start {
            continue;
        }
        path.push(h);
        if hop.to == start {
            let diverges = (0..clocks).any(|c| {
                path.iter().any(|&p| hops[p].resets.contains(&c))
                    && path.iter().any(|&p| hops[p].lower_one.contains(&c))
            });
            if !diverges {
                return Some(path.clone());
            }
        } else if !on_path[hop.to] {
            on_path[hop.to] = true;
            let found = dfs_cycles(start, hop.to, hops, path, on_path, clocks);
            on_path[hop.to] = false;
            if found.is_some() {
                return found;
            }
        }
        path.pop();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;
    use crate::model::parse_model;

    #[test]
    fn fixtures_are_valid() {
        for (name, m) in fixtures::all() {
            let r = validate(&m);
            assert!(r.is_ok(), "{name}: {:?}", r.messages());
        }
    }

    #[test]
    fn probability_sum_violation() {
        let text = fixtures::M2_TEXT.replacen("prob = \"1/2\"", "prob = \"1/3\"", 1);
        let r = validate(&parse_model(&text).unwrap());
        let msgs = r.messages();
        assert!(msgs.iter().any(|m| m.contains("sum=5/6 ≠ 1")), "{msgs:?}");
    }

    #[test]
    fn bound_violation() {
        let text = fixtures::M1_TEXT.replace("guard = \"c >= 1 & c <= 2\"", "guard = \"c <= 5\"");
        let r = validate(&parse_model(&text).unwrap());
        assert!(r.messages().iter().any(|m| m.contains("bound 5 > k=2")), "{:?}", r.messages());
    }

    #[test]
    fn location_without_actions_is_flagged() {
        // Guard c = 2 can never be reached under invariant c <= 1.
        let text = fixtures::M2_TEXT.replace("guard = \"c = 1\"", "guard = \"c = 2\"");
        let r = validate(&parse_model(&text).unwrap());
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NoActions { location, .. } if location == "l0")));
    }

    #[test]
    fn nonzeno_fixtures() {
        assert!(check_structural_nonzeno(&fixtures::m1().arena.pta).ok);
        assert!(check_structural_nonzeno(&fixtures::m2().arena.pta).ok);
        assert!(check_structural_nonzeno(&fixtures::m3().arena.pta).ok);
    }

    #[test]
    fn zeno_self_loop_is_reported() {
        let text = fixtures::M1_TEXT
            .replace("guard = \"c >= 1\"", "guard = \"true\"")
            .replace("resets = [\"c\"], ", "");
        let m = parse_model(&text).unwrap();
        let r = check_structural_nonzeno(&m.arena.pta);
        assert!(!r.ok);
        assert_eq!(r.cycle.unwrap(), vec!["lf -[f]-> lf".to_string()]);
        assert!(validate(&m).violations.iter().any(|v| matches!(v, Violation::Zeno { .. })));
    }

    #[test]
    fn reset_without_lower_bound_is_zeno() {
        let text = fixtures::M1_TEXT.replace("guard = \"c >= 1\"", "guard = \"c <= 2\"");
        let r = check_structural_nonzeno(&parse_model(&text).unwrap().arena.pta);
        assert!(!r.ok);
    }
}

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{Branch, ConcreteState, Edge, GameArena, Location, Model, Player, Pta};
use crate::clock::{ClockConstraint, ClockContext};
use crate::error::{Error, Result};
use crate::rational::parse_rational;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    clocks: Vec<String>,
    k: u32,
    locations: Vec<LocationDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    initial: InitialDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationDoc {
    name: String,
    owner: String,
    #[serde(rename = "final", default)]
    is_final: bool,
    #[serde(default)]
    invariant: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    source: String,
    action: String,
    #[serde(default)]
    guard: Option<String>,
    branches: Vec<BranchDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    prob: String,
    #[serde(default)]
    resets: Vec<String>,
    target: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    location: String,
    #[serde(default)]
    valuation: BTreeMap<String, String>,
}

/// Parses a model document (TOML). Structural errors (unknown names,
/// malformed numbers, duplicate `(location, action)` pairs) are parse
/// errors; semantic checks are left to [`super::validate`].
pub fn parse_model(text: &str) -> Result<Model> {
    let doc: ModelDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let ctx = ClockContext::new(doc.clocks, doc.k).map_err(|e| Error::Parse(e.to_string()))?;

    let mut locations = Vec::new();
    let mut owners = Vec::new();
    for l in &doc.locations {
        if locations.iter().any(|x: &Location| x.name == l.name) {
            return Err(Error::Parse(format!("duplicate location `{}`", l.name)));
        }
        owners.push(match l.owner.as_str() {
            "min" => Player::Min,
            "max" => Player::Max,
            other => {
                return Err(Error::Parse(format!(
                    "location `{}`: owner must be min or max, got `{other}`",
                    l.name
                )))
            }
        });
        let invariant = ClockConstraint::parse(l.invariant.as_deref().unwrap_or("true"), &ctx)?;
        locations.push(Location {
            name: l.name.clone(),
            is_final: l.is_final,
            invariant,
        });
    }
    let loc = |name: &str| {
        locations
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::Parse(format!("unknown location `{name}`")))
    };

    let mut actions: Vec<String> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    for e in &doc.edges {
        let source = loc(&e.source)?;
        let action = match actions.iter().position(|a| *a == e.action) {
            Some(i) => i,
            None => {
                actions.push(e.action.clone());
                actions.len() - 1
            }
        };
        if edges.iter().any(|x| x.source == source && x.action == action) {
            return Err(Error::Parse(format!(
                "duplicate edge for ({}, {})",
                e.source, e.action
            )));
        }
        if e.branches.is_empty() {
            return Err(Error::Parse(format!(
                "edge ({}, {}) has no branches",
                e.source, e.action
            )));
        }
        let guard = ClockConstraint::parse(e.guard.as_deref().unwrap_or("true"), &ctx)?;
        let branches = e
            .branches
            .iter()
            .map(|b| {
                let mut resets = b
                    .resets
                    .iter()
                    .map(|c| {
                        ctx.clock_index(c)
                            .ok_or_else(|| Error::Parse(format!("unknown clock `{c}` in resets")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                resets.sort_unstable();
                resets.dedup();
                Ok(Branch {
                    prob: parse_rational(&b.prob)?,
                    resets,
                    target: loc(&b.target)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        edges.push(Edge {
            source,
            action,
            guard,
            branches,
        });
    }

    let init_loc = loc(&doc.initial.location)?;
    let mut values = vec![crate::rational::zero(); ctx.len()];
    for (name, v) in &doc.initial.valuation {
        let c = ctx
            .clock_index(name)
            .ok_or_else(|| Error::Parse(format!("unknown clock `{name}` in initial valuation")))?;
        values[c] = parse_rational(v)?;
    }
    let valuation = ctx.valuation(values).map_err(|e| Error::Parse(e.to_string()))?;

    Ok(Model {
        arena: GameArena {
            pta: Pta {
                ctx,
                locations,
                actions,
                edges,
            },
            owners,
        },
        initial: ConcreteState {
            location: init_loc,
            valuation,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
clocks = ["c"]
k = 2

[[locations]]
name = "l0"
owner = "min"
invariant = "c <= 2"

[[locations]]
name = "lf"
owner = "max"
final = true

[[edges]]
source = "l0"
action = "a"
guard = "c >= 1"
branches = [{ prob = "1/3", resets = ["c"], target = "l0" }, { prob = "2/3", target = "lf" }]

[initial]
location = "l0"
valuation = { c = "1/2" }
"#;

    #[test]
    fn parses_document() {
        let m = parse_model(SMALL).unwrap();
        let pta = &m.arena.pta;
        assert_eq!(pta.locations.len(), 2);
        assert_eq!(m.arena.owners, vec![Player::Min, Player::Max]);
        assert!(pta.locations[1].is_final);
        assert_eq!(pta.edges[0].branches[0].resets, vec![0]);
        assert_eq!(pta.edges[0].branches[1].prob, crate::rational::ratio(2, 3));
        assert_eq!(m.initial.valuation.get(0), &crate::rational::ratio(1, 2));
    }

    #[test]
    fn rejects_float_probabilities() {
        let text = SMALL.replace("\"1/3\"", "\"0.33\"");
        assert!(matches!(parse_model(&text), Err(Error::Parse(_))));
        let text = SMALL.replace("\"1/3\"", "0.33");
        assert!(matches!(parse_model(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(parse_model(&SMALL.replace("target = \"lf\"", "target = \"nowhere\"")).is_err());
        assert!(parse_model(&SMALL.replace("resets = [\"c\"]", "resets = [\"z\"]")).is_err());
        assert!(parse_model(&SMALL.replace("owner = \"max\"", "owner = \"both\"")).is_err());
        assert!(parse_model(&SMALL.replace("c = \"1/2\"", "c = \"5\"")).is_err());
    }
}

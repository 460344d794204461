use std::fmt::Write;

use serde::Serialize;

use super::{BoundaryKind, Brg};
use crate::model::GameArena;
use crate::rational::{fmt_ratio, fmt_short};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz text: one box per state, one point node per (state, action)
/// fanning out to the successors with `p=..., r=...` labels.
pub fn export_dot(arena: &GameArena, brg: &Brg) -> String {
    let ctx = arena.ctx();
    let mut out = String::new();
    out.push_str("digraph brg {\n  rankdir=LR;\n  node [fontname=\"monospace\"];\n");
    for (i, st) in brg.states.iter().enumerate() {
        let label = format!(
            "s{i}: {} {} {} {}{}",
            arena.location_name(st.location),
            ctx.display_valuation(&st.valuation),
            st.region.display(ctx),
            st.owner,
            if st.is_final { " final" } else { "" }
        );
        let shape = if st.is_final { "doubleoctagon" } else { "box" };
        let _ = writeln!(out, "  s{i} [shape={shape}, label=\"{}\"];", escape(&label));
    }
    let _ = writeln!(out, "  init [shape=point];\n  init -> s{};", brg.initial);
    for (i, trs) in brg.transitions.iter().enumerate() {
        for (j, tr) in trs.iter().enumerate() {
            let kind = match tr.action.kind {
                BoundaryKind::Thin => "thin",
                BoundaryKind::Infimum => "inf",
                BoundaryKind::Supremum => "sup",
            };
            let _ = writeln!(out, "  s{i}_a{j} [shape=point];");
            let _ = writeln!(
                out,
                "  s{i} -> s{i}_a{j} [arrowhead=none, label=\"{} {kind}\"];",
                escape(&tr.action.display(arena))
            );
            for (t, p) in &tr.successors {
                let _ = writeln!(
                    out,
                    "  s{i}_a{j} -> s{t} [label=\"p={}, r={}\"];",
                    fmt_short(p),
                    fmt_short(&tr.reward)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Serialize)]
pub struct BrgDump {
    pub initial: usize,
    pub states: Vec<StateDump>,
    pub transitions: Vec<TransitionDump>,
}

#[derive(Debug, Serialize)]
pub struct StateDump {
    pub id: usize,
    pub location: String,
    pub valuation: Vec<String>,
    pub region: String,
    pub owner: String,
    #[serde(rename = "final")]
    pub is_final: bool,
}

#[derive(Debug, Serialize)]
pub struct TransitionDump {
    pub state: usize,
    pub b: u32,
    pub clock: String,
    pub action: String,
    pub target_region: String,
    pub kind: BoundaryKind,
    pub reward: String,
    pub successors: Vec<(usize, String)>,
}

/// Structured dump with every number as an exact `num/den` string.
pub fn dump(arena: &GameArena, brg: &Brg) -> BrgDump {
    let ctx = arena.ctx();
    let states = brg
        .states
        .iter()
        .enumerate()
        .map(|(id, st)| StateDump {
            id,
            location: arena.location_name(st.location).to_string(),
            valuation: st.valuation.values().iter().map(fmt_ratio).collect(),
            region: st.region.display(ctx),
            owner: st.owner.to_string(),
            is_final: st.is_final,
        })
        .collect();
    let transitions = brg
        .transitions
        .iter()
        .enumerate()
        .flat_map(|(state, trs)| {
            trs.iter().map(move |tr| TransitionDump {
                state,
                b: tr.action.b,
                clock: ctx.clock_name(tr.action.clock).to_string(),
                action: arena.pta.actions[tr.action.action].clone(),
                target_region: tr.action.target.display(ctx),
                kind: tr.action.kind,
                reward: fmt_ratio(&tr.reward),
                successors: tr.successors.iter().map(|(j, p)| (*j, fmt_ratio(p))).collect(),
            })
        })
        .collect();
    BrgDump {
        initial: brg.initial,
        states,
        transitions,
    }
}

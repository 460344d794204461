//! Probabilistic timed automata, game arenas and their dense-time semantics.

pub mod fixtures;
mod parse;
mod semantics;
mod validate;

pub use parse::parse_model;
pub use semantics::{concrete_step, timed_action_allowed};
pub use validate::{check_structural_nonzeno, validate, NonZenoReport, ValidationReport, Violation};

use std::fmt;

use serde::Serialize;

use crate::clock::{ClockConstraint, ClockContext, ClockValuation};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Min,
    Max,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Min => "min",
            Player::Max => "max",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Location {
    pub name: String,
    pub is_final: bool,
    pub invariant: ClockConstraint,
}

/// One outcome of `δ(ℓ, a)`: with probability `prob`, reset `resets` and
/// move to `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub prob: Rational,
    pub resets: Vec<usize>,
    pub target: usize,
}

/// The pair `E(ℓ, a)` / `δ(ℓ, a)` for one location and action.
#[derive(Debug, Clone)]
pub struct Edge {
    pub source: usize,
    pub action: usize,
    pub guard: ClockConstraint,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone)]
pub struct Pta {
    pub ctx: ClockContext,
    pub locations: Vec<Location>,
    pub actions: Vec<String>,
    pub edges: Vec<Edge>,
}

impl Pta {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn edge(&self, location: usize, action: usize) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| e.source == location && e.action == action)
    }

    pub fn edges_from(&self, location: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.source == location)
    }

    /// True when every `δ(ℓ, a)` is a point distribution.
    pub fn is_timed_automaton(&self) -> bool {
        self.edges.iter().all(|e| e.branches.len() == 1)
    }
}

/// A PTA together with the Min/Max partition of its locations.
#[derive(Debug, Clone)]
pub struct GameArena {
    pub pta: Pta,
    pub owners: Vec<Player>,
}

impl GameArena {
    pub fn ctx(&self) -> &ClockContext {
        &self.pta.ctx
    }

    pub fn owner(&self, location: usize) -> Player {
        self.owners[location]
    }

    pub fn is_final(&self, location: usize) -> bool {
        self.pta.locations[location].is_final
    }

    pub fn location_name(&self, location: usize) -> &str {
        &self.pta.locations[location].name
    }

    pub fn invariant(&self, location: usize) -> &ClockConstraint {
        &self.pta.locations[location].invariant
    }

    pub fn display_state(&self, s: &ConcreteState) -> String {
        format!(
            "({}, {})",
            self.location_name(s.location),
            self.ctx().display_valuation(&s.valuation)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteState {
    pub location: usize,
    pub valuation: ClockValuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAction {
    pub delay: Rational,
    pub action: usize,
}

/// A parsed model document: the arena plus its initial configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub arena: GameArena,
    pub initial: ConcreteState,
}

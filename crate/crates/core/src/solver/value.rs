use std::collections::BTreeMap;
use std::fmt;
use std::ops::Index;

use serde::Serialize;

use crate::brg::{BoundaryAction, Brg};
use crate::model::Player;
use crate::rational::{fmt_ratio, to_f64, Rational};

/// A nonnegative rational or `+∞`. `Finite` orders below `Infinite`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtValue {
    Finite(Rational),
    Infinite,
}

impl ExtValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtValue::Finite(q) => Some(q),
            ExtValue::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtValue::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtValue::Finite(q) => to_f64(q),
            ExtValue::Infinite => f64::INFINITY,
        }
    }
}

impl From<Rational> for ExtValue {
    fn from(q: Rational) -> Self {
        ExtValue::Finite(q)
    }
}

impl fmt::Display for ExtValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::Finite(q) => f.write_str(&fmt_ratio(q)),
            ExtValue::Infinite => f.write_str("inf"),
        }
    }
}

/// One value per BRG state: `f64` for approximate iteration, [`ExtValue`]
/// for certified results.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<V> {
    pub values: Vec<V>,
}

impl<V> ValueFunction<V> {
    pub fn new(values: Vec<V>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<V> Index<usize> for ValueFunction<V> {
    type Output = V;
    fn index(&self, i: usize) -> &V {
        &self.values[i]
    }
}

pub type ApproxValues = ValueFunction<f64>;
pub type ExactValues = ValueFunction<ExtValue>;

/// Pure stationary strategy: controlled non-terminal state → index into
/// that state's transition list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PositionalStrategy {
    pub player: Option<Player>,
    pub choice: BTreeMap<usize, usize>,
}

impl PositionalStrategy {
    pub fn for_player(player: Player) -> Self {
        Self {
            player: Some(player),
            choice: BTreeMap::new(),
        }
    }

    pub fn get(&self, state: usize) -> Option<usize> {
        self.choice.get(&state).copied()
    }

    pub fn action<'a>(&self, brg: &'a Brg, state: usize) -> Option<&'a BoundaryAction> {
        self.get(state).map(|j| &brg.transitions[state][j].action)
    }
}

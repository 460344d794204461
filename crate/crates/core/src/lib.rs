//! Expected reachability-time and expected discounted-time games on
//! probabilistic timed automata, solved through the boundary region graph.

pub mod brg;
pub mod cli;
pub mod clock;
pub mod error;
pub mod model;
pub mod quasi;
pub mod rational;
pub mod simulation;
pub mod solver;

pub use error::{Error, Result};

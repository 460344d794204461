//! Solving the boundary region graph: value iteration, exact policy
//! evaluation with certification, the discounted variant, and the
//! region-wise simple-function iteration for timed automata.

mod discounted;
mod exact;
mod iterate;
mod linalg;
mod reach;
mod registry;
mod ta_simple;
mod value;

use crate::brg::Brg;
use crate::rational::{ratio, Rational};

pub use discounted::solve_discounted;
pub use exact::{certify, evaluate_pair_exact, solve_exact, CertViolation, Certificate, ExactSolution, ImprovementOrder};
pub use iterate::{extract_strategies, improve_step, value_iterate, ViOutcome};
pub use reach::{check_assumption_reach, ReachWitness};
pub use registry::{GameSolver, Solution, SolutionReport, SolverRegistry, StateValue};
pub use ta_simple::{solve_ta_simple, RegionForm, RegionValue, SimpleForm, TaSimpleSolution};
pub use value::{ApproxValues, ExactValues, ExtValue, PositionalStrategy, ValueFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Expected total reward until a final state.
    Reachability,
    /// `D = opt λ·(r + Σ p·D)`.
    Discounted { lambda: Rational, absorbing_finals: bool },
}

impl Objective {
    /// States whose value is fixed to zero.
    pub fn is_terminal(&self, brg: &Brg, s: usize) -> bool {
        brg.states[s].is_final
            && match self {
                Objective::Reachability => true,
                Objective::Discounted { absorbing_finals, .. } => *absorbing_finals,
            }
    }

    pub fn discount(&self) -> Option<&Rational> {
        match self {
            Objective::Reachability => None,
            Objective::Discounted { lambda, .. } => Some(lambda),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Stop value iteration once consecutive iterates are this close.
    pub tolerance: f64,
    /// Cap on value-iteration sweeps and on policy evaluations.
    pub max_iterations: usize,
    pub order: ImprovementOrder,
    /// Discount factor for the discounted solver.
    pub lambda: Option<Rational>,
    pub absorbing_finals: bool,
    /// Boundary offset used when turning a boundary action into a timed action.
    pub epsilon: Rational,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 1_000_000,
            order: ImprovementOrder::MinFirst,
            lambda: None,
            absorbing_finals: true,
            epsilon: ratio(1, 100),
        }
    }
}

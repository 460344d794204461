use num_traits::{One, Zero};

use crate::brg::Brg;
use crate::rational::Rational;
use crate::{Error, Result};

use super::exact::{solve_objective, ExactSolution};
use super::{Objective, SolveConfig};

/// Solves `D = opt λ·(r + Σ p·D)`. With `absorbing_finals` the final states
/// are cost-free sinks; otherwise play continues through them.
pub fn solve_discounted(brg: &Brg, lambda: &Rational, absorbing_finals: bool, cfg: &SolveConfig) -> Result<ExactSolution> {
    if *lambda < Rational::zero() || *lambda >= Rational::one() {
        return Err(Error::Domain(format!("discount factor must lie in [0,1), got {lambda}")));
    }
    let obj = Objective::Discounted {
        lambda: lambda.clone(),
        absorbing_finals,
    };
    solve_objective(brg, &obj, cfg)
}

use crate::brg::{Brg, BrgTransition};
use crate::model::Player;
use crate::rational::to_f64;
use crate::{Error, Result};

use super::value::{ApproxValues, PositionalStrategy};
use super::Objective;

pub(crate) fn q_approx(obj: &Objective, tr: &BrgTransition, f: &[f64]) -> f64 {
    let mut acc = to_f64(&tr.reward);
    for (t, p) in &tr.successors {
        acc += to_f64(p) * f[*t];
    }
    match obj.discount() {
        Some(l) => to_f64(l) * acc,
        None => acc,
    }
}

/// One application of the Bellman operator over the whole graph.
pub fn improve_step(brg: &Brg, obj: &Objective, f: &[f64]) -> Result<Vec<f64>> {
    let mut next = vec![0.0; brg.len()];
    for s in 0..brg.len() {
        if obj.is_terminal(brg, s) {
            continue;
        }
        let trs = &brg.transitions[s];
        if trs.is_empty() {
            return Err(Error::Model(format!("state s{s} has no boundary action")));
        }
        let qs = trs.iter().map(|tr| q_approx(obj, tr, f));
        next[s] = match brg.states[s].owner {
            Player::Min => qs.fold(f64::INFINITY, f64::min),
            Player::Max => qs.fold(f64::NEG_INFINITY, f64::max),
        };
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct ViOutcome {
    pub values: ApproxValues,
    pub iterations: usize,
    /// Sup-norm distance between consecutive iterates, one entry per sweep.
    pub residuals: Vec<f64>,
}

impl ViOutcome {
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Iterates from the zero function until two consecutive iterates are
/// within `tolerance` in sup norm.
pub fn value_iterate(brg: &Brg, obj: &Objective, tolerance: f64, max_iterations: usize) -> Result<ViOutcome> {
    let mut cur = vec![0.0; brg.len()];
    let mut residuals = Vec::new();
    loop {
        let next = improve_step(brg, obj, &cur)?;
        let res = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residuals.push(res);
        cur = next;
        if res <= tolerance {
            return Ok(ViOutcome {
                values: ApproxValues::new(cur),
                iterations: residuals.len(),
                residuals,
            });
        }
        if residuals.len() >= max_iterations || !res.is_finite() {
            return Err(Error::Convergence {
                iterations: residuals.len(),
                residual: res,
            });
        }
    }
}

/// Greedy strategies for `f`. Ties go to the earliest action in canonical order.
pub fn extract_strategies(brg: &Brg, obj: &Objective, f: &[f64]) -> (PositionalStrategy, PositionalStrategy) {
    let mut min = PositionalStrategy::for_player(Player::Min);
    let mut max = PositionalStrategy::for_player(Player::Max);
    for s in 0..brg.len() {
        if obj.is_terminal(brg, s) || brg.transitions[s].is_empty() {
            continue;
        }
        let owner = brg.states[s].owner;
        let mut best = 0;
        let mut best_q = q_approx(obj, &brg.transitions[s][0], f);
        for (j, tr) in brg.transitions[s].iter().enumerate().skip(1) {
            let q = q_approx(obj, tr, f);
            let better = match owner {
                Player::Min => q < best_q,
                Player::Max => q > best_q,
            };
            if better {
                best = j;
                best_q = q;
            }
        }
        match owner {
            Player::Min => min.choice.insert(s, best),
            Player::Max => max.choice.insert(s, best),
        };
    }
    (min, max)
}

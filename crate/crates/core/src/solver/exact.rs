use std::collections::VecDeque;

use num_traits::{One, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::brg::{Brg, BrgTransition};
use crate::model::Player;
use crate::rational::Rational;
use crate::{Error, Result};

use super::iterate::{extract_strategies, value_iterate};
use super::linalg::solve_dense;
use super::reach::check_assumption_reach;
use super::value::{ExactValues, ExtValue, PositionalStrategy};
use super::{Objective, SolveConfig};

pub(crate) fn q_exact(obj: &Objective, tr: &BrgTransition, v: &[ExtValue]) -> ExtValue {
    let mut acc = tr.reward.clone();
    for (t, p) in &tr.successors {
        match &v[*t] {
            ExtValue::Finite(x) => acc += p * x,
            ExtValue::Infinite => return ExtValue::Infinite,
        }
    }
    match obj.discount() {
        Some(l) => ExtValue::Finite(l * acc),
        None => ExtValue::Finite(acc),
    }
}

fn better(player: Player, a: &ExtValue, b: &ExtValue) -> bool {
    match player {
        Player::Min => a < b,
        Player::Max => a > b,
    }
}

/// Optimal action at `s` for its owner under `v`; ties go to the earliest action.
pub(crate) fn best_action(brg: &Brg, obj: &Objective, s: usize, v: &[ExtValue]) -> Option<(usize, ExtValue)> {
    let owner = brg.states[s].owner;
    let mut best: Option<(usize, ExtValue)> = None;
    for (j, tr) in brg.transitions[s].iter().enumerate() {
        let q = q_exact(obj, tr, v);
        if best.as_ref().is_none_or(|(_, bq)| better(owner, &q, bq)) {
            best = Some((j, q));
        }
    }
    best
}

/// Exact value of the Markov chain induced by one action per non-terminal state.
fn evaluate_chain(brg: &Brg, obj: &Objective, choice: &[Option<usize>]) -> Result<Vec<ExtValue>> {
    let n = brg.len();
    let terminal: Vec<bool> = (0..n).map(|s| obj.is_terminal(brg, s)).collect();
    let mut succ: Vec<Option<&BrgTransition>> = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        if terminal[s] {
            succ.push(None);
            continue;
        }
        let j = choice[s].ok_or_else(|| Error::Precondition(format!("no action chosen at s{s}")))?;
        let tr = brg.transitions[s]
            .get(j)
            .ok_or_else(|| Error::Precondition(format!("action index {j} out of range at s{s}")))?;
        for (t, _) in &tr.successors {
            preds[*t].push(s);
        }
        succ.push(Some(tr));
    }

    let mut infinite = vec![false; n];
    if obj.discount().is_none() {
        // States that cannot reach a terminal, then everything that can reach those.
        let mut can = terminal.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| terminal[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &preds[t] {
                if !can[s] {
                    can[s] = true;
                    queue.push_back(s);
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| !can[s]).collect();
        for &s in &queue {
            infinite[s] = true;
        }
        while let Some(t) = queue.pop_front() {
            for &s in &preds[t] {
                if !infinite[s] {
                    infinite[s] = true;
                    queue.push_back(s);
                }
            }
        }
    }

    let scale = obj.discount().cloned().unwrap_or_else(Rational::one);
    let mut g: DiGraph<usize, ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..n).map(|s| g.add_node(s)).collect();
    for s in (0..n).filter(|&s| !infinite[s]) {
        let Some(tr) = succ[s] else { continue };
        for (t, _) in &tr.successors {
            if !terminal[*t] {
                g.add_edge(nodes[s], nodes[*t], ());
            }
        }
    }

    let mut value: Vec<Option<Rational>> = vec![None; n];
    for s in 0..n {
        if terminal[s] {
            value[s] = Some(Rational::zero());
        }
    }
    // Sink components first, so every edge leaving a component is already solved.
    for comp in tarjan_scc(&g) {
        let members: Vec<usize> = comp.iter().map(|v| g[*v]).collect();
        if members.iter().any(|&s| terminal[s] || infinite[s]) {
            continue;
        }
        let local = |s: usize| members.iter().position(|&m| m == s);
        let m = members.len();
        let mut a = vec![vec![Rational::zero(); m]; m];
        let mut b = vec![Rational::zero(); m];
        for (i, &s) in members.iter().enumerate() {
            let tr = succ[s].ok_or_else(|| Error::Internal(format!("s{s} has no chosen action")))?;
            a[i][i] += Rational::one();
            let mut rhs = tr.reward.clone();
            for (t, p) in &tr.successors {
                match local(*t) {
                    Some(j) => a[i][j] -= &scale * p,
                    None => {
                        let vt = value[*t]
                            .as_ref()
                            .ok_or_else(|| Error::Internal(format!("s{t} unsolved while solving s{s}")))?;
                        rhs += p * vt;
                    }
                }
            }
            b[i] = &scale * rhs;
        }
        let x = solve_dense(a, b).ok_or_else(|| Error::Internal("singular evaluation system".into()))?;
        for (i, s) in members.into_iter().enumerate() {
            value[s] = Some(x[i].clone());
        }
    }

    Ok(value
        .into_iter()
        .enumerate()
        .map(|(s, v)| match v {
            Some(q) => ExtValue::Finite(q),
            None => {
                debug_assert!(infinite[s]);
                ExtValue::Infinite
            }
        })
        .collect())
}

fn choice_vector(brg: &Brg, obj: &Objective, min: &PositionalStrategy, max: &PositionalStrategy) -> Vec<Option<usize>> {
    (0..brg.len())
        .map(|s| {
            if obj.is_terminal(brg, s) {
                return None;
            }
            match brg.states[s].owner {
                Player::Min => min.get(s),
                Player::Max => max.get(s),
            }
        })
        .collect()
}

/// Exact value of the strategy pair: `+∞` where the induced chain fails to
/// reach the final states almost surely.
pub fn evaluate_pair_exact(
    brg: &Brg,
    obj: &Objective,
    min: &PositionalStrategy,
    max: &PositionalStrategy,
) -> Result<ExactValues> {
    evaluate_chain(brg, obj, &choice_vector(brg, obj, min, max)).map(ExactValues::new)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertViolation {
    pub state: usize,
    /// Index of the best action under the candidate, if the state has any.
    pub best_action: Option<usize>,
    #[serde(serialize_with = "ser_ext")]
    pub expected: ExtValue,
    #[serde(serialize_with = "ser_ext")]
    pub actual: ExtValue,
}

impl CertViolation {
    /// How far the candidate is from its own Bellman update, when both are finite.
    pub fn amount(&self) -> Option<Rational> {
        match (&self.expected, &self.actual) {
            (ExtValue::Finite(a), ExtValue::Finite(b)) => Some(if a > b { a - b } else { b - a }),
            _ => None,
        }
    }
}

fn ser_ext<S: serde::Serializer>(v: &ExtValue, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub violations: Vec<CertViolation>,
}

impl Certificate {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `v` against the optimality equations exactly.
pub fn certify(brg: &Brg, obj: &Objective, v: &[ExtValue]) -> Certificate {
    let mut violations = Vec::new();
    for s in 0..brg.len() {
        let (best_action, expected) = if obj.is_terminal(brg, s) {
            (None, ExtValue::Finite(Rational::zero()))
        } else {
            match best_action(brg, obj, s, v) {
                Some((j, q)) => (Some(j), q),
                None => (None, ExtValue::Infinite),
            }
        };
        if v[s] != expected || !v[s].is_finite() {
            violations.push(CertViolation {
                state: s,
                best_action,
                expected,
                actual: v[s].clone(),
            });
        }
    }
    Certificate { violations }
}

/// Which player runs the outer improvement loop; the other best-responds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImprovementOrder {
    #[default]
    MinFirst,
    MaxFirst,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub values: ExactValues,
    pub min: PositionalStrategy,
    pub max: PositionalStrategy,
    pub certificate: Certificate,
    pub vi_iterations: usize,
    pub vi_residual: f64,
    /// Strategy switches made after value iteration.
    pub switches: usize,
}

/// One player's improvement pass against `v`: switches every state where
/// some action is strictly better than the current value.
fn improve_player(brg: &Brg, obj: &Objective, player: Player, strat: &mut PositionalStrategy, v: &[ExtValue]) -> usize {
    let mut switched = 0;
    for s in 0..brg.len() {
        if obj.is_terminal(brg, s) || brg.states[s].owner != player {
            continue;
        }
        if let Some((j, q)) = best_action(brg, obj, s, v) {
            if strat.get(s).is_none() || better(player, &q, &v[s]) {
                if strat.get(s) != Some(j) {
                    switched += 1;
                }
                strat.choice.insert(s, j);
            }
        }
    }
    switched
}

/// Nested policy iteration: the outer player improves against the inner
/// player's best response until neither can improve.
pub(crate) fn strategy_improvement(
    brg: &Brg,
    obj: &Objective,
    mut min: PositionalStrategy,
    mut max: PositionalStrategy,
    order: ImprovementOrder,
    max_rounds: usize,
) -> Result<(PositionalStrategy, PositionalStrategy, ExactValues, usize)> {
    let (outer, inner) = match order {
        ImprovementOrder::MinFirst => (Player::Min, Player::Max),
        ImprovementOrder::MaxFirst => (Player::Max, Player::Min),
    };
    let mut switches = 0;
    let mut rounds = 0;
    loop {
        let v = loop {
            rounds += 1;
            if rounds > max_rounds {
                return Err(Error::Convergence {
                    iterations: rounds,
                    residual: f64::NAN,
                });
            }
            let v = evaluate_pair_exact(brg, obj, &min, &max)?;
            let n = match inner {
                Player::Min => improve_player(brg, obj, inner, &mut min, &v.values),
                Player::Max => improve_player(brg, obj, inner, &mut max, &v.values),
            };
            switches += n;
            if n == 0 {
                break v;
            }
        };
        let n = match outer {
            Player::Min => improve_player(brg, obj, outer, &mut min, &v.values),
            Player::Max => improve_player(brg, obj, outer, &mut max, &v.values),
        };
        switches += n;
        if n == 0 {
            return Ok((min, max, v, switches));
        }
    }
}

/// Value iteration to locate good strategies, then exact policy evaluation,
/// improvement and certification.
pub fn solve_exact(brg: &Brg, cfg: &SolveConfig) -> Result<ExactSolution> {
    check_assumption_reach(brg).map_err(Error::Assumption)?;
    solve_objective(brg, &Objective::Reachability, cfg)
}

pub(crate) fn solve_objective(brg: &Brg, obj: &Objective, cfg: &SolveConfig) -> Result<ExactSolution> {
    let vi = value_iterate(brg, obj, cfg.tolerance, cfg.max_iterations)?;
    let (min0, max0) = extract_strategies(brg, obj, &vi.values.values);
    let (min, max, values, switches) = strategy_improvement(brg, obj, min0, max0, cfg.order, cfg.max_iterations)?;
    let certificate = certify(brg, obj, &values.values);
    if !certificate.is_valid() {
        return Err(Error::Internal(format!(
            "policy iteration stopped at a non-fixpoint ({} violations)",
            certificate.violations.len()
        )));
    }
    Ok(ExactSolution {
        values,
        min,
        max,
        certificate,
        vi_iterations: vi.iterations,
        vi_residual: vi.residual(),
        switches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brg::{explore, DEFAULT_STATE_CAP};
    use crate::model::{fixtures, Model};
    use crate::rational::{int, ratio};

    fn brg(m: &Model) -> Brg {
        explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap()
    }

    #[test]
    fn fixture_values_are_exact() {
        let cfg = SolveConfig::default();
        for (m, want) in [
            (fixtures::m1(), int(1)),
            (fixtures::m1x(), int(2)),
            (fixtures::m2(), int(2)),
            (fixtures::m3(), ratio(3, 2)),
        ] {
            let g = brg(&m);
            let sol = solve_exact(&g, &cfg).unwrap();
            assert_eq!(sol.values[g.initial], ExtValue::Finite(want));
            assert!(sol.certificate.is_valid());
        }
    }

    #[test]
    fn zero_function_is_rejected_at_the_initial_state() {
        let m = fixtures::m1();
        let g = brg(&m);
        let zeros = vec![ExtValue::Finite(Rational::zero()); g.len()];
        let cert = certify(&g, &Objective::Reachability, &zeros);
        assert!(!cert.is_valid());
        let v = cert.violations.iter().find(|v| v.state == g.initial).unwrap();
        assert_eq!(v.expected, ExtValue::Finite(int(1)));
        assert_eq!(v.amount(), Some(int(1)));
    }

    #[test]
    fn both_orders_agree() {
        for (_, m) in fixtures::all() {
            let g = brg(&m);
            let a = solve_exact(&g, &SolveConfig::default()).unwrap();
            let b = solve_exact(
                &g,
                &SolveConfig {
                    order: ImprovementOrder::MaxFirst,
                    ..SolveConfig::default()
                },
            )
            .unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn never_reaching_pair_is_infinite() {
        let m = fixtures::m2_unreachable();
        let g = brg(&m);
        let (min, max) = extract_strategies(&g, &Objective::Reachability, &vec![0.0; g.len()]);
        let v = evaluate_pair_exact(&g, &Objective::Reachability, &min, &max).unwrap();
        assert_eq!(v[g.initial], ExtValue::Infinite);
    }

    #[test]
    fn assumption_violation_is_reported() {
        let m = fixtures::m2_unreachable();
        let err = solve_exact(&brg(&m), &SolveConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn missing_choice_is_a_precondition_error() {
        let m = fixtures::m1();
        let g = brg(&m);
        let empty = PositionalStrategy::default();
        let err = evaluate_pair_exact(&g, &Objective::Reachability, &empty, &empty).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn suboptimal_min_is_improved_from_the_worst_start() {
        // Start Min on its most expensive action everywhere.
        let m = fixtures::m1();
        let g = brg(&m);
        let obj = Objective::Reachability;
        let mut min = PositionalStrategy::for_player(Player::Min);
        for s in 0..g.len() {
            if !obj.is_terminal(&g, s) && !g.transitions[s].is_empty() {
                min.choice.insert(s, g.transitions[s].len() - 1);
            }
        }
        let max = PositionalStrategy::for_player(Player::Max);
        let (_, _, v, switches) =
            strategy_improvement(&g, &obj, min, max, ImprovementOrder::MinFirst, 1000).unwrap();
        assert!(switches > 0);
        assert_eq!(v[g.initial], ExtValue::Finite(int(1)));
    }
}

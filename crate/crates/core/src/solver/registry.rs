use std::collections::BTreeMap;

use serde::Serialize;

use crate::brg::Brg;
use crate::model::{GameArena, Player};
use crate::rational::fmt_short;
use crate::{Error, Result};

use super::exact::{best_action, certify, solve_exact, Certificate, ImprovementOrder};
use super::iterate::{extract_strategies, value_iterate};
use super::ta_simple::{solve_ta_simple, RegionForm};
use super::value::{ExtValue, PositionalStrategy};
use super::{solve_discounted, Objective, SolveConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum StateValue {
    Exact(ExtValue),
    Approx(f64),
}

impl StateValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            StateValue::Exact(v) => v.to_f64(),
            StateValue::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&ExtValue> {
        match self {
            StateValue::Exact(v) => Some(v),
            StateValue::Approx(_) => None,
        }
    }

    fn text(&self) -> String {
        match self {
            StateValue::Exact(v) => v.to_string(),
            StateValue::Approx(x) => format!("{x}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub method: String,
    pub objective: Objective,
    pub values: Vec<StateValue>,
    pub min: PositionalStrategy,
    pub max: PositionalStrategy,
    /// Present for exact methods.
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub switches: usize,
    /// Only filled by the timed-automaton solver.
    pub region_forms: Vec<RegionForm>,
}

impl Solution {
    pub fn initial_value(&self, brg: &Brg) -> &StateValue {
        &self.values[brg.initial]
    }

    /// Chosen transition index at `s`, for whichever player owns it.
    pub fn choice(&self, brg: &Brg, s: usize) -> Option<usize> {
        match brg.states[s].owner {
            Player::Min => self.min.get(s),
            Player::Max => self.max.get(s),
        }
    }

    pub fn report(&self, arena: &GameArena, brg: &Brg) -> SolutionReport {
        let ctx = arena.ctx();
        let states = brg
            .states
            .iter()
            .enumerate()
            .map(|(i, st)| StateReport {
                id: i,
                location: arena.location_name(st.location).to_string(),
                valuation: ctx
                    .clocks()
                    .iter()
                    .enumerate()
                    .map(|(c, name)| (name.clone(), fmt_short(st.valuation.get(c))))
                    .collect(),
                region: st.region.display(ctx),
                owner: st.owner,
                is_final: st.is_final,
                value: self.values[i].text(),
                value_f64: finite_or_none(self.values[i].to_f64()),
                action: self
                    .choice(brg, i)
                    .map(|j| brg.transitions[i][j].action.display(arena)),
            })
            .collect();
        let (objective, lambda, absorbing_finals) = match &self.objective {
            Objective::Reachability => ("reachability", None, None),
            Objective::Discounted { lambda, absorbing_finals } => {
                ("discounted", Some(fmt_short(lambda)), Some(*absorbing_finals))
            }
        };
        SolutionReport {
            method: self.method.clone(),
            objective,
            lambda,
            absorbing_finals,
            initial_state: brg.initial,
            initial_value: self.values[brg.initial].text(),
            initial_value_f64: finite_or_none(self.values[brg.initial].to_f64()),
            certified: self.certificate.as_ref().map(Certificate::is_valid),
            violations: self.certificate.as_ref().map(|c| c.violations.len()).unwrap_or(0),
            iterations: self.iterations,
            residual: self.residual,
            switches: self.switches,
            states,
            region_forms: self
                .region_forms
                .iter()
                .map(|r| RegionFormReport {
                    location: arena.location_name(r.location).to_string(),
                    region: r.region.display(ctx),
                    form: r
                        .value
                        .map(|f| f.display(ctx.clocks()))
                        .unwrap_or_else(|| "inf".into()),
                    action: r.action.as_ref().map(|a| a.display(arena)),
                })
                .collect(),
        }
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub method: String,
    pub objective: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorbing_finals: Option<bool>,
    pub initial_state: usize,
    pub initial_value: String,
    pub initial_value_f64: Option<f64>,
    pub certified: Option<bool>,
    pub violations: usize,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub switches: usize,
    pub states: Vec<StateReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub region_forms: Vec<RegionFormReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub id: usize,
    pub location: String,
    pub valuation: BTreeMap<String, String>,
    pub region: String,
    pub owner: Player,
    #[serde(rename = "final")]
    pub is_final: bool,
    pub value: String,
    pub value_f64: Option<f64>,
    pub action: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionFormReport {
    pub location: String,
    pub region: String,
    pub form: String,
    pub action: Option<String>,
}

pub trait GameSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn solve(&self, arena: &GameArena, brg: &Brg, cfg: &SolveConfig) -> Result<Solution>;
}

struct ValueIteration;

impl GameSolver for ValueIteration {
    fn name(&self) -> &'static str {
        "value-iteration"
    }

    fn description(&self) -> &'static str {
        "floating-point value iteration to the configured tolerance"
    }

    fn solve(&self, _arena: &GameArena, brg: &Brg, cfg: &SolveConfig) -> Result<Solution> {
        let obj = Objective::Reachability;
        let vi = value_iterate(brg, &obj, cfg.tolerance, cfg.max_iterations)?;
        let (min, max) = extract_strategies(brg, &obj, &vi.values.values);
        Ok(Solution {
            method: self.name().into(),
            objective: obj,
            residual: Some(vi.residual()),
            iterations: vi.iterations,
            values: vi.values.values.into_iter().map(StateValue::Approx).collect(),
            min,
            max,
            certificate: None,
            switches: 0,
            region_forms: Vec::new(),
        })
    }
}

struct Exact {
    name: &'static str,
    order: ImprovementOrder,
}

impl GameSolver for Exact {
    fn name(&self) -> &'static str {
        self.name
    }

    fn description(&self) -> &'static str {
        match self.order {
            ImprovementOrder::MinFirst => "exact rational values by policy iteration, Min improving in the outer loop",
            ImprovementOrder::MaxFirst => "exact rational values by policy iteration, Max improving in the outer loop",
        }
    }

    fn solve(&self, _arena: &GameArena, brg: &Brg, cfg: &SolveConfig) -> Result<Solution> {
        let cfg = SolveConfig {
            order: self.order,
            ..cfg.clone()
        };
        let sol = solve_exact(brg, &cfg)?;
        Ok(Solution {
            method: self.name.into(),
            objective: Objective::Reachability,
            values: sol.values.values.into_iter().map(StateValue::Exact).collect(),
            min: sol.min,
            max: sol.max,
            certificate: Some(sol.certificate),
            iterations: sol.vi_iterations,
            residual: Some(sol.vi_residual),
            switches: sol.switches,
            region_forms: Vec::new(),
        })
    }
}

struct Discounted;

impl GameSolver for Discounted {
    fn name(&self) -> &'static str {
        "discounted"
    }

    fn description(&self) -> &'static str {
        "exact discounted values for a factor in (0,1)"
    }

    fn solve(&self, _arena: &GameArena, brg: &Brg, cfg: &SolveConfig) -> Result<Solution> {
        let lambda = cfg
            .lambda
            .clone()
            .ok_or_else(|| Error::Precondition("the discounted solver needs a discount factor".into()))?;
        let sol = solve_discounted(brg, &lambda, cfg.absorbing_finals, cfg)?;
        Ok(Solution {
            method: self.name().into(),
            objective: Objective::Discounted {
                lambda,
                absorbing_finals: cfg.absorbing_finals,
            },
            values: sol.values.values.into_iter().map(StateValue::Exact).collect(),
            min: sol.min,
            max: sol.max,
            certificate: Some(sol.certificate),
            iterations: sol.vi_iterations,
            residual: Some(sol.vi_residual),
            switches: sol.switches,
            region_forms: Vec::new(),
        })
    }
}

struct TaSimple;

impl GameSolver for TaSimple {
    fn name(&self) -> &'static str {
        "ta-simple"
    }

    fn description(&self) -> &'static str {
        "region-wise simple functions, timed automata only"
    }

    fn solve(&self, arena: &GameArena, brg: &Brg, _cfg: &SolveConfig) -> Result<Solution> {
        let sol = solve_ta_simple(arena, brg)?;
        let obj = Objective::Reachability;
        let mut min = PositionalStrategy::for_player(Player::Min);
        let mut max = PositionalStrategy::for_player(Player::Max);
        for s in 0..brg.len() {
            if obj.is_terminal(brg, s) {
                continue;
            }
            if let Some((j, _)) = best_action(brg, &obj, s, &sol.values.values) {
                match brg.states[s].owner {
                    Player::Min => min.choice.insert(s, j),
                    Player::Max => max.choice.insert(s, j),
                };
            }
        }
        let certificate = certify(brg, &obj, &sol.values.values);
        Ok(Solution {
            method: self.name().into(),
            objective: obj,
            values: sol.values.values.into_iter().map(StateValue::Exact).collect(),
            min,
            max,
            certificate: Some(certificate),
            iterations: sol.iterations,
            residual: None,
            switches: 0,
            region_forms: sol.regions,
        })
    }
}

/// Solvers by name, in registration order.
pub struct SolverRegistry {
    solvers: Vec<Box<dyn GameSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { solvers: Vec::new() }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Exact {
            name: "exact",
            order: ImprovementOrder::MinFirst,
        }));
        r.register(Box::new(Exact {
            name: "exact-max-first",
            order: ImprovementOrder::MaxFirst,
        }));
        r.register(Box::new(ValueIteration));
        r.register(Box::new(Discounted));
        r.register(Box::new(TaSimple));
        r
    }

    /// Replaces any solver already registered under the same name.
    pub fn register(&mut self, solver: Box<dyn GameSolver>) {
        self.solvers.retain(|s| s.name() != solver.name());
        self.solvers.push(solver);
    }

    pub fn get(&self, name: &str) -> Option<&dyn GameSolver> {
        self.solvers.iter().find(|s| s.name() == name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }

    pub fn solve(&self, name: &str, arena: &GameArena, brg: &Brg, cfg: &SolveConfig) -> Result<Solution> {
        let solver = self.get(name).ok_or_else(|| {
            Error::Domain(format!("unknown method '{name}' (known: {})", self.names().join(", ")))
        })?;
        solver.solve(arena, brg, cfg)
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brg::{explore, DEFAULT_STATE_CAP};
    use crate::model::fixtures;
    use crate::rational::int;

    #[test]
    fn every_registered_solver_runs_on_m1() {
        let m = fixtures::m1();
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        let reg = SolverRegistry::with_defaults();
        let cfg = SolveConfig {
            lambda: Some(crate::rational::ratio(1, 2)),
            ..SolveConfig::default()
        };
        for name in reg.names() {
            let sol = reg.solve(name, &m.arena, &brg, &cfg).unwrap();
            let want = if name == "discounted" { 0.5 } else { 1.0 };
            assert!((sol.initial_value(&brg).to_f64() - want).abs() < 1e-9, "{name}");
            let json = serde_json::to_value(sol.report(&m.arena, &brg)).unwrap();
            assert_eq!(json["method"], name);
        }
    }

    #[test]
    fn unknown_method() {
        let m = fixtures::m1();
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        let err = SolverRegistry::default()
            .solve("simplex", &m.arena, &brg, &SolveConfig::default())
            .unwrap_err();
        assert!(err.to_string().contains("simplex"));
    }

    struct Constant;
    impl GameSolver for Constant {
        fn name(&self) -> &'static str {
            "exact"
        }
        fn description(&self) -> &'static str {
            "stub"
        }
        fn solve(&self, _: &GameArena, brg: &Brg, _: &SolveConfig) -> Result<Solution> {
            Ok(Solution {
                method: "stub".into(),
                objective: Objective::Reachability,
                values: vec![StateValue::Exact(ExtValue::Finite(int(7))); brg.len()],
                min: PositionalStrategy::default(),
                max: PositionalStrategy::default(),
                certificate: None,
                iterations: 0,
                residual: None,
                switches: 0,
                region_forms: Vec::new(),
            })
        }
    }

    #[test]
    fn registering_a_name_again_replaces_it() {
        let m = fixtures::m1();
        let brg = explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).unwrap();
        let mut reg = SolverRegistry::with_defaults();
        let n = reg.names().len();
        reg.register(Box::new(Constant));
        assert_eq!(reg.names().len(), n);
        let sol = reg.solve("exact", &m.arena, &brg, &SolveConfig::default()).unwrap();
        assert_eq!(sol.method, "stub");
    }
}

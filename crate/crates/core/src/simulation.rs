//! Monte Carlo runs of the concrete dense-time game under boundary
//! strategies turned into timed actions.

use std::collections::HashMap;
use std::sync::Mutex;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::brg::{explore, BoundaryAction, BoundaryKind, Brg, DEFAULT_STATE_CAP};
use crate::clock::ClockValuation;
use crate::model::{concrete_step, timed_action_allowed, ConcreteState, GameArena, Player, TimedAction};
use crate::rational::{fmt_short, ratio, to_f64, Rational};
use crate::solver::{solve_exact, PositionalStrategy, SolveConfig};
use crate::{Error, Result};

pub const DEFAULT_STEP_CAP: usize = 10_000;

/// How the boundary offset evolves along a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonSchedule {
    /// The same `ε` at every decision.
    #[default]
    Fixed,
    /// `ε / 2^{n+1}` at the `n`-th decision, so the offsets sum to at most `ε`.
    Decaying,
}

impl EpsilonSchedule {
    pub fn at_step(self, epsilon: &Rational, step: usize) -> Rational {
        match self {
            EpsilonSchedule::Fixed => epsilon.clone(),
            EpsilonSchedule::Decaying => {
                let shift = u32::try_from(step + 1).unwrap_or(u32::MAX).min(1024);
                epsilon / Rational::from_integer(num_bigint::BigInt::one() << shift)
            }
        }
    }
}

/// Turns a boundary action into a concrete delay from `s`: the exact
/// boundary when it lies in the target, otherwise nudged `ε′` inside,
/// with `ε′` at most half the admissible interval.
pub fn concretize_action(
    arena: &GameArena,
    s: &ConcreteState,
    act: &BoundaryAction,
    epsilon: &Rational,
) -> Result<TimedAction> {
    let ctx = arena.ctx();
    let (lo, hi) = ctx.delay_interval(&s.valuation, &act.target)?.ok_or_else(|| {
        Error::Precondition(format!(
            "target {} is not in the future of {}",
            act.target.display(ctx),
            arena.display_state(s)
        ))
    })?;
    let exact = Rational::from_integer(act.b.into()) - s.valuation.get(act.clock);
    let exact = if exact < Rational::zero() { Rational::zero() } else { exact };
    let inside = |t: &Rational| {
        ctx.delay(&s.valuation, t)
            .map(|w| act.target.contains(ctx, &w))
            .unwrap_or(false)
    };
    let delay = if inside(&exact) {
        exact
    } else {
        let half = (&hi - &lo) * ratio(1, 2);
        let eps = if *epsilon < half { epsilon.clone() } else { half };
        match act.kind {
            BoundaryKind::Infimum => &lo + eps,
            BoundaryKind::Supremum => &hi - eps,
            BoundaryKind::Thin => {
                return Err(Error::Internal(format!(
                    "thin target {} missed by delay {}",
                    act.target.display(ctx),
                    fmt_short(&exact)
                )))
            }
        }
    };
    let ta = TimedAction {
        delay,
        action: act.action,
    };
    if !inside(&ta.delay) || !timed_action_allowed(arena, s, &ta)? {
        return Err(Error::Internal(format!(
            "concretized delay {} for {} is not allowed",
            fmt_short(&ta.delay),
            act.display(arena)
        )));
    }
    Ok(ta)
}

/// One player's positional strategy on the explored graph, played in the
/// concrete game. States off the graph are solved afresh from their own root.
pub struct ConcretizedStrategy<'a> {
    pub player: Player,
    pub epsilon: Rational,
    pub schedule: EpsilonSchedule,
    arena: &'a GameArena,
    brg: &'a Brg,
    strategy: PositionalStrategy,
    cfg: SolveConfig,
    rooted: Mutex<HashMap<(usize, ClockValuation), BoundaryAction>>,
}

impl<'a> ConcretizedStrategy<'a> {
    pub fn new(
        arena: &'a GameArena,
        brg: &'a Brg,
        player: Player,
        strategy: PositionalStrategy,
        epsilon: Rational,
        schedule: EpsilonSchedule,
        cfg: SolveConfig,
    ) -> Result<Self> {
        if epsilon <= Rational::zero() {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            player,
            epsilon,
            schedule,
            arena,
            brg,
            strategy,
            cfg,
            rooted: Mutex::new(HashMap::new()),
        })
    }

    /// The boundary action this strategy plays at `s`.
    pub fn boundary_action(&self, s: &ConcreteState) -> Result<BoundaryAction> {
        if self.arena.owner(s.location) != self.player {
            return Err(Error::Precondition(format!(
                "{} is not controlled by {}",
                self.arena.display_state(s),
                self.player
            )));
        }
        if let Some(i) = self.brg.find_concrete(self.arena, s) {
            if let Some(act) = self.strategy.action(self.brg, i) {
                return Ok(act.clone());
            }
        }
        let key = (s.location, s.valuation.clone());
        if let Some(act) = self.rooted.lock().expect("cache poisoned").get(&key) {
            return Ok(act.clone());
        }
        let brg = explore(self.arena, s, DEFAULT_STATE_CAP)?;
        let sol = solve_exact(&brg, &self.cfg)?;
        let strat = match self.player {
            Player::Min => &sol.min,
            Player::Max => &sol.max,
        };
        let act = strat
            .action(&brg, brg.initial)
            .cloned()
            .ok_or_else(|| Error::Precondition(format!("no boundary action at {}", self.arena.display_state(s))))?;
        self.rooted.lock().expect("cache poisoned").insert(key, act.clone());
        Ok(act)
    }

    /// The timed action played at the `step`-th decision of a run.
    pub fn decide(&self, s: &ConcreteState, step: usize) -> Result<TimedAction> {
        let act = self.boundary_action(s)?;
        concretize_action(self.arena, s, &act, &self.schedule.at_step(&self.epsilon, step))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub state: ConcreteState,
    pub action: TimedAction,
    /// Index of the sampled outcome among the aggregated successors.
    pub branch: usize,
    pub next: ConcreteState,
}

impl TraceStep {
    pub fn line(&self, arena: &GameArena) -> String {
        format!(
            "{} --({}, {})--> #{} {}",
            arena.display_state(&self.state),
            fmt_short(&self.action.delay),
            arena.pta.actions[self.action.action],
            self.branch,
            arena.display_state(&self.next)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub reached_target: bool,
    pub total_time: Rational,
    pub steps: usize,
    pub trace: Option<Vec<TraceStep>>,
}

/// Picks an outcome with exact rational probabilities: thresholds are
/// scaled to integers over the common denominator and compared against a
/// uniform integer draw.
pub fn sample_branch<T>(outcomes: &[(T, Rational)], rng: &mut impl Rng) -> Result<usize> {
    let den = outcomes
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
    let den_u = den
        .to_u64()
        .ok_or_else(|| Error::Model(format!("probability denominator {den} too large to sample")))?;
    let draw = rng.gen_range(0..den_u);
    let mut acc = 0u64;
    for (i, (_, p)) in outcomes.iter().enumerate() {
        let scaled = (p.numer() * (&den / p.denom()))
            .to_u64()
            .ok_or_else(|| Error::Internal("scaled probability overflow".into()))?;
        acc += scaled;
        if draw < acc {
            return Ok(i);
        }
    }
    Err(Error::Model("branch probabilities do not sum to one".into()))
}

fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

fn run_with(
    arena: &GameArena,
    mu: &ConcretizedStrategy<'_>,
    chi: &ConcretizedStrategy<'_>,
    s0: &ConcreteState,
    rng: &mut ChaCha8Rng,
    step_cap: usize,
    trace: bool,
) -> Result<RunRecord> {
    let mut s = s0.clone();
    let mut total = Rational::zero();
    let mut steps = 0;
    let mut log = trace.then(Vec::new);
    let reached = loop {
        if arena.is_final(s.location) {
            break true;
        }
        if steps >= step_cap {
            break false;
        }
        let strategy = match arena.owner(s.location) {
            Player::Min => mu,
            Player::Max => chi,
        };
        let ta = strategy.decide(&s, steps)?;
        let outcomes = concrete_step(arena, &s, &ta)?;
        let pick = sample_branch(&outcomes, rng)?;
        let next = outcomes[pick].0.clone();
        if !next.valuation.satisfies(arena.invariant(next.location)) {
            return Err(Error::Internal(format!(
                "successor {} violates its invariant",
                arena.display_state(&next)
            )));
        }
        if let Some(log) = log.as_mut() {
            log.push(TraceStep {
                state: s.clone(),
                action: ta.clone(),
                branch: pick,
                next: next.clone(),
            });
        }
        total += &ta.delay;
        steps += 1;
        s = next;
    };
    Ok(RunRecord {
        reached_target: reached,
        total_time: total,
        steps,
        trace: log,
    })
}

/// One play from `s0`, stopping at the first final state or after `step_cap` steps.
pub fn simulate_run(
    arena: &GameArena,
    mu: &ConcretizedStrategy<'_>,
    chi: &ConcretizedStrategy<'_>,
    s0: &ConcreteState,
    seed: u64,
    step_cap: usize,
    trace: bool,
) -> Result<RunRecord> {
    run_with(arena, mu, chi, s0, &mut run_rng(seed, 0), step_cap, trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub runs: usize,
    pub reached: usize,
    /// Mean total time over the runs that reached a final state.
    pub mean: Option<f64>,
    /// Normal-approximation 95% half-width, `1.96·s/√n`.
    pub half_width: f64,
    pub unreached_fraction: f64,
    pub min_time: Option<f64>,
    pub max_time: Option<f64>,
}

impl Estimate {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self).map_err(|e| Error::Internal(e.to_string()))?;
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Mean and 95% half-width of the total time over `n_runs` independent
/// plays. Run `i` draws from stream `i` of the generator seeded with `seed`.
pub fn estimate_value(
    arena: &GameArena,
    mu: &ConcretizedStrategy<'_>,
    chi: &ConcretizedStrategy<'_>,
    s0: &ConcreteState,
    n_runs: usize,
    seed: u64,
    step_cap: usize,
) -> Result<Estimate> {
    if n_runs < 2 {
        return Err(Error::Domain(format!("need at least 2 runs, got {n_runs}")));
    }
    let times: Vec<Option<f64>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let r = run_with(arena, mu, chi, s0, &mut run_rng(seed, i), step_cap, false)?;
            Ok(r.reached_target.then(|| to_f64(&r.total_time)))
        })
        .collect::<Result<_>>()?;
    let reached: Vec<f64> = times.iter().flatten().copied().collect();
    let n = reached.len();
    let mean = (n > 0).then(|| reached.iter().sum::<f64>() / n as f64);
    let half_width = match mean {
        Some(m) if n >= 2 => {
            let var = reached.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        }
        _ => 0.0,
    };
    Ok(Estimate {
        runs: n_runs,
        reached: n,
        mean,
        half_width,
        unreached_fraction: (n_runs - n) as f64 / n_runs as f64,
        min_time: reached.iter().copied().reduce(f64::min),
        max_time: reached.iter().copied().reduce(f64::max),
    })
}

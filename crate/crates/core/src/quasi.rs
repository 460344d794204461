//! Sampled checks of the structural properties of the value function:
//! simple-form fitting, Lipschitz continuity, monotonicity and
//! nonexpansiveness along the diagonal order, and time-monotonicity of the
//! one-step operator.

use std::collections::{BTreeSet, HashMap};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::brg::{explore_rooted, transition_distribution, BoundaryAction, BrgState, DEFAULT_STATE_CAP};
use crate::clock::{ClockContext, ClockRegion, ClockValuation};
use crate::model::{concrete_step, timed_action_allowed, ConcreteState, GameArena, Player, TimedAction};
use crate::rational::{fmt_short, int, ratio, Rational};
use crate::solver::{solve_exact, ExtValue, SimpleForm, SolveConfig};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuasiConfig {
    pub solve: SolveConfig,
    pub seed: u64,
    /// Sample points are multiples of `1/denominator`.
    pub denominator: i64,
}

impl Default for QuasiConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig::default(),
            seed: 0x5eed,
            denominator: 64,
        }
    }
}

/// Game value at a concrete state, via the graph rooted at `[ν]`.
pub fn value_at(arena: &GameArena, s: &ConcreteState, cfg: &SolveConfig) -> Result<ExtValue> {
    let region = arena.ctx().region_of(&s.valuation)?;
    region_value(arena, s.location, &region, &s.valuation, cfg)
}

/// Value of `((ℓ,ν),(ℓ,ζ))` for `ν` in the closure of `ζ`: the continuous
/// extension of the value inside `ζ` to its boundary.
pub fn region_value(
    arena: &GameArena,
    location: usize,
    region: &ClockRegion,
    valuation: &ClockValuation,
    cfg: &SolveConfig,
) -> Result<ExtValue> {
    if arena.is_final(location) {
        return Ok(ExtValue::Finite(Rational::zero()));
    }
    let brg = explore_rooted(arena, location, valuation, region, DEFAULT_STATE_CAP)?;
    let sol = solve_exact(&brg, cfg)?;
    Ok(sol.values[brg.initial].clone())
}

/// `reward + Σ p·F(successor)` after firing `act` from `((ℓ,ν),(ℓ,ζ))`.
pub fn one_step_value(
    arena: &GameArena,
    location: usize,
    region: &ClockRegion,
    act: &BoundaryAction,
    valuation: &ClockValuation,
    cfg: &SolveConfig,
) -> Result<ExtValue> {
    let st = BrgState {
        location,
        valuation: valuation.clone(),
        region: region.clone(),
        owner: arena.owner(location),
        is_final: arena.is_final(location),
    };
    let mut acc = crate::brg::reward(&st, act)?;
    for (next, p) in transition_distribution(arena, &st, act) {
        match region_value(arena, next.location, &next.region, &next.valuation, cfg)? {
            ExtValue::Finite(v) => acc += p * v,
            ExtValue::Infinite => return Ok(ExtValue::Infinite),
        }
    }
    Ok(ExtValue::Finite(acc))
}

/// A point of `CLOS(ζ)` on the `1/den` lattice.
pub fn sample_closure(region: &ClockRegion, rng: &mut impl Rng, den: i64) -> ClockValuation {
    let blocks = region.frac_order();
    let mut fr: Vec<i64> = (1..blocks.len()).map(|_| rng.gen_range(0..=den)).collect();
    fr.sort_unstable();
    let n = region.integer_parts().len();
    let mut values = vec![Rational::zero(); n];
    for (j, block) in blocks.iter().enumerate() {
        for &c in block {
            let base = int(i64::from(region.integer_part(c)));
            values[c] = if j == 0 { base } else { base + ratio(fr[j - 1], den) };
        }
    }
    ClockValuation::from_values(values)
}

/// Tries to shift a random nonempty clock subset of `v` by a lattice step
/// while staying in `CLOS(ζ)`.
fn diagonal_partner(
    region: &ClockRegion,
    v: &ClockValuation,
    rng: &mut impl Rng,
    den: i64,
) -> Option<(ClockValuation, Rational)> {
    let n = v.values().len();
    for _ in 0..32 {
        let mask: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if mask.is_empty() {
            continue;
        }
        let t = ratio(rng.gen_range(1..=den / 2), den);
        let mut w = v.values().to_vec();
        for &c in &mask {
            w[c] += &t;
        }
        let w = ClockValuation::from_values(w);
        if region.closure_contains(&w) {
            return Some((w, t));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairWitness {
    pub nu: ClockValuation,
    pub nu_prime: ClockValuation,
    pub f_nu: Rational,
    pub f_nu_prime: Rational,
}

impl Serialize for PairWitness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let vals = |v: &ClockValuation| v.values().iter().map(fmt_short).collect::<Vec<_>>();
        let mut st = s.serialize_struct("PairWitness", 4)?;
        st.serialize_field("nu", &vals(&self.nu))?;
        st.serialize_field("nu_prime", &vals(&self.nu_prime))?;
        st.serialize_field("f_nu", &fmt_short(&self.f_nu))?;
        st.serialize_field("f_nu_prime", &fmt_short(&self.f_nu_prime))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    /// Largest `|F(ν) − F(ν′)| / ‖ν − ν′‖∞` seen on the sampled pairs.
    pub lipschitz_estimate: Rational,
    pub k_bound: Rational,
    pub lipschitz_violations: Vec<PairWitness>,
    pub monotonicity_violations: Vec<PairWitness>,
    pub nonexpansive_violations: Vec<PairWitness>,
    pub samples_checked: usize,
    pub diagonal_pairs: usize,
}

impl PropertyReport {
    pub fn passes(&self) -> bool {
        self.lipschitz_violations.is_empty()
            && self.monotonicity_violations.is_empty()
            && self.nonexpansive_violations.is_empty()
    }
}

impl Serialize for PropertyReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PropertyReport", 8)?;
        st.serialize_field("pass", &self.passes())?;
        st.serialize_field("lipschitz_estimate", &fmt_short(&self.lipschitz_estimate))?;
        st.serialize_field("k_bound", &fmt_short(&self.k_bound))?;
        st.serialize_field("samples_checked", &self.samples_checked)?;
        st.serialize_field("diagonal_pairs", &self.diagonal_pairs)?;
        st.serialize_field("lipschitz_violations", &self.lipschitz_violations)?;
        st.serialize_field("monotonicity_violations", &self.monotonicity_violations)?;
        st.serialize_field("nonexpansive_violations", &self.nonexpansive_violations)?;
        st.end()
    }
}

/// Runs the sampled property checks for an arbitrary evaluator on `CLOS(ζ)`.
/// `pair_count` general pairs are drawn, plus up to `pair_count` diagonal
/// pairs `ν ⊴ ν + t·1_S`.
pub fn check_quasi_simple_fn<F>(
    region: &ClockRegion,
    pair_count: usize,
    k_bound: &Rational,
    seed: u64,
    den: i64,
    f: F,
) -> Result<PropertyReport>
where
    F: Fn(&ClockValuation) -> Result<ExtValue> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let general: Vec<(ClockValuation, ClockValuation)> = (0..pair_count)
        .map(|_| (sample_closure(region, &mut rng, den), sample_closure(region, &mut rng, den)))
        .collect();
    let mut diagonal = Vec::new();
    for _ in 0..pair_count {
        let v = sample_closure(region, &mut rng, den);
        if let Some((w, t)) = diagonal_partner(region, &v, &mut rng, den) {
            diagonal.push((v, w, t));
        }
    }

    let mut points: BTreeSet<&ClockValuation> = BTreeSet::new();
    for (a, b) in &general {
        points.insert(a);
        points.insert(b);
    }
    for (a, b, _) in &diagonal {
        points.insert(a);
        points.insert(b);
    }
    let evaluated: Vec<(&ClockValuation, Rational)> = points
        .into_par_iter()
        .map(|v| match f(v)? {
            ExtValue::Finite(q) => Ok((v, q)),
            ExtValue::Infinite => Err(Error::Precondition(format!("infinite value at {v}"))),
        })
        .collect::<Result<_>>()?;
    let fv: HashMap<&ClockValuation, Rational> = evaluated.into_iter().collect();

    let witness = |a: &ClockValuation, b: &ClockValuation| PairWitness {
        nu: a.clone(),
        nu_prime: b.clone(),
        f_nu: fv[a].clone(),
        f_nu_prime: fv[b].clone(),
    };
    let mut report = PropertyReport {
        lipschitz_estimate: Rational::zero(),
        k_bound: k_bound.clone(),
        lipschitz_violations: Vec::new(),
        monotonicity_violations: Vec::new(),
        nonexpansive_violations: Vec::new(),
        samples_checked: general.len() + diagonal.len(),
        diagonal_pairs: diagonal.len(),
    };
    let lipschitz = |report: &mut PropertyReport, a: &ClockValuation, b: &ClockValuation| {
        let dist = a.sup_distance(b);
        let diff = (&fv[a] - &fv[b]).abs();
        if dist.is_zero() {
            return;
        }
        let r = &diff / &dist;
        if r > report.lipschitz_estimate {
            report.lipschitz_estimate = r;
        }
        if diff > k_bound * &dist {
            report.lipschitz_violations.push(witness(a, b));
        }
    };
    for (a, b) in &general {
        lipschitz(&mut report, a, b);
    }
    for (a, b, t) in &diagonal {
        lipschitz(&mut report, a, b);
        let drop = &fv[a] - &fv[b];
        if drop.is_negative() {
            report.monotonicity_violations.push(witness(a, b));
        }
        if drop > *t {
            report.nonexpansive_violations.push(witness(a, b));
        }
    }
    Ok(report)
}

/// [`check_quasi_simple_fn`] on the game value of `(ℓ, ζ)`.
pub fn check_quasi_simple(
    arena: &GameArena,
    location: usize,
    region: &ClockRegion,
    pair_count: usize,
    k_bound: &Rational,
    cfg: &QuasiConfig,
) -> Result<PropertyReport> {
    check_quasi_simple_fn(region, pair_count, k_bound, cfg.seed, cfg.denominator, |v| {
        region_value(arena, location, region, v, &cfg.solve)
    })
}

/// `1 + |C|`.
pub fn default_k_bound(ctx: &ClockContext) -> Rational {
    int(1 + ctx.len() as i64)
}

/// Fits `e` or `e − ν(c)` to the value sampled on `CLOS(ζ)`.
pub fn fit_simple(
    arena: &GameArena,
    location: usize,
    region: &ClockRegion,
    sample_count: usize,
    cfg: &QuasiConfig,
) -> Result<Option<SimpleForm>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = vec![ClockValuation::from_values(region.representative())];
    samples.extend((0..sample_count).map(|_| sample_closure(region, &mut rng, cfg.denominator)));
    let values: Vec<Rational> = samples
        .par_iter()
        .map(|v| match region_value(arena, location, region, v, &cfg.solve)? {
            ExtValue::Finite(q) => Ok(q),
            ExtValue::Infinite => Err(Error::Precondition(format!("infinite value at {v}"))),
        })
        .collect::<Result<_>>()?;
    Ok(fit_form(&samples, &values, arena.ctx().len()))
}

fn fit_form(samples: &[ClockValuation], values: &[Rational], clocks: usize) -> Option<SimpleForm> {
    let as_int = |q: &Rational| q.is_integer().then(|| q.to_integer()).and_then(|z| i64::try_from(z).ok());
    let first = as_int(&values[0]);
    if first.is_some() && values.iter().all(|v| as_int(v) == first) {
        return first.map(|e| SimpleForm::Constant { e });
    }
    (0..clocks).find_map(|c| {
        let e = as_int(&(&values[0] + samples[0].get(c)))?;
        samples
            .iter()
            .zip(values)
            .all(|(s, v)| v + s.get(c) == int(e))
            .then_some(SimpleForm::Slope { e, clock: c })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMonotoneReport {
    /// `(t, F⊕(t))` in increasing `t`.
    pub points: Vec<(Rational, Rational)>,
    /// Consecutive grid points where `F⊕` decreases.
    pub violations: Vec<(Rational, Rational)>,
}

impl TimeMonotoneReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `t + Σ δ·value(successor)` for the timed action `(t, a)` from `s`.
pub fn one_step_timed(arena: &GameArena, s: &ConcreteState, ta: &TimedAction, cfg: &SolveConfig) -> Result<ExtValue> {
    let mut acc = ta.delay.clone();
    for (next, p) in concrete_step(arena, s, ta)? {
        match value_at(arena, &next, cfg)? {
            ExtValue::Finite(v) => acc += p * v,
            ExtValue::Infinite => return Ok(ExtValue::Infinite),
        }
    }
    Ok(ExtValue::Finite(acc))
}

/// Evaluates `F⊕` on `grid_count` evenly spaced delays landing in `target`
/// and reports any decrease.
pub fn check_time_monotone(
    arena: &GameArena,
    s: &ConcreteState,
    action: usize,
    target: &ClockRegion,
    grid_count: usize,
    cfg: &SolveConfig,
) -> Result<TimeMonotoneReport> {
    let ctx = arena.ctx();
    let (lo, hi) = ctx.delay_interval(&s.valuation, target)?.ok_or_else(|| {
        Error::Domain(format!(
            "region {} is not in the future of {}",
            target.display(ctx),
            arena.display_state(s)
        ))
    })?;
    let ts: Vec<Rational> = if lo == hi {
        vec![lo]
    } else {
        let n = grid_count.max(1) as i64;
        (1..=n).map(|i| &lo + (&hi - &lo) * ratio(i, n + 1)).collect()
    };
    let points: Vec<(Rational, Rational)> = ts
        .into_par_iter()
        .map(|t| {
            let ta = TimedAction { delay: t.clone(), action };
            if !timed_action_allowed(arena, s, &ta)? {
                return Err(Error::Domain(format!(
                    "action {} is not enabled after delay {}",
                    arena.pta.actions[action],
                    fmt_short(&t)
                )));
            }
            match one_step_timed(arena, s, &ta, cfg)? {
                ExtValue::Finite(v) => Ok((t, v)),
                ExtValue::Infinite => Err(Error::Precondition("infinite successor value".into())),
            }
        })
        .collect::<Result<_>>()?;
    let violations = points
        .windows(2)
        .filter(|w| w[1].1 < w[0].1)
        .map(|w| (w[0].0.clone(), w[1].0.clone()))
        .collect();
    Ok(TimeMonotoneReport { points, violations })
}

/// Best one-step value over all actions and all delays on the `step` grid,
/// for the owner of `s`. `None` when no grid delay enables any action.
pub fn grid_one_step_optimum(
    arena: &GameArena,
    s: &ConcreteState,
    step: &Rational,
    cfg: &SolveConfig,
) -> Result<Option<ExtValue>> {
    let k = int(i64::from(arena.ctx().k()));
    let max_clock = s.valuation.values().iter().max().cloned().unwrap_or_else(Rational::zero);
    let mut candidates = Vec::new();
    let mut t = Rational::zero();
    while &max_clock + &t <= k {
        for e in arena.pta.edges_from(s.location) {
            let ta = TimedAction {
                delay: t.clone(),
                action: e.action,
            };
            if timed_action_allowed(arena, s, &ta)? {
                candidates.push(ta);
            }
        }
        t += step;
    }
    let values: Vec<ExtValue> = candidates
        .par_iter()
        .map(|ta| one_step_timed(arena, s, ta, cfg))
        .collect::<Result<_>>()?;
    Ok(match arena.owner(s.location) {
        Player::Min => values.into_iter().min(),
        Player::Max => values.into_iter().max(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    fn state(arena: &GameArena, loc: &str, c: Rational) -> ConcreteState {
        ConcreteState {
            location: arena.pta.location_index(loc).unwrap(),
            valuation: arena.ctx().valuation(vec![c]).unwrap(),
        }
    }

    fn region(arena: &GameArena, c: Rational) -> ClockRegion {
        arena.ctx().region_of(&arena.ctx().valuation(vec![c]).unwrap()).unwrap()
    }

    #[test]
    fn m2_values_along_the_clock() {
        let m = fixtures::m2();
        let cfg = SolveConfig::default();
        for (x, want) in [(int(0), int(2)), (ratio(1, 2), ratio(3, 2)), (ratio(1, 3), ratio(5, 3)), (int(1), int(1))] {
            let v = value_at(&m.arena, &state(&m.arena, "l0", x), &cfg).unwrap();
            assert_eq!(v, ExtValue::Finite(want));
        }
        let v = value_at(&m.arena, &state(&m.arena, "lf", ratio(1, 2)), &cfg).unwrap();
        assert_eq!(v, ExtValue::Finite(int(0)));
    }

    #[test]
    fn fitted_forms() {
        let cfg = QuasiConfig::default();
        let m1 = fixtures::m1();
        let open01 = region(&m1.arena, ratio(1, 2));
        assert_eq!(
            fit_simple(&m1.arena, 0, &open01, 6, &cfg).unwrap(),
            Some(SimpleForm::Slope { e: 1, clock: 0 })
        );
        let m2 = fixtures::m2();
        assert_eq!(
            fit_simple(&m2.arena, 0, &open01, 6, &cfg).unwrap(),
            Some(SimpleForm::Slope { e: 2, clock: 0 })
        );
        let lf = m2.arena.pta.location_index("lf").unwrap();
        assert_eq!(
            fit_simple(&m2.arena, lf, &open01, 4, &cfg).unwrap(),
            Some(SimpleForm::Constant { e: 0 })
        );
    }

    #[test]
    fn fit_rejects_non_simple_data() {
        let samples: Vec<ClockValuation> = [int(0), ratio(1, 2), int(1)]
            .into_iter()
            .map(|x| ClockValuation::from_values(vec![x]))
            .collect();
        let values = vec![int(0), ratio(1, 4), int(1)];
        assert_eq!(fit_form(&samples, &values, 1), None);
    }

    #[test]
    fn closure_samples_stay_in_the_closure() {
        let ctx = ClockContext::new(["x", "y", "z"], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in ctx.all_regions() {
            for _ in 0..5 {
                let v = sample_closure(&r, &mut rng, 64);
                assert!(r.closure_contains(&v), "{} {}", r.display(&ctx), v);
            }
        }
    }

    #[test]
    fn m2_region_passes() {
        let m = fixtures::m2();
        let r = region(&m.arena, ratio(1, 2));
        let rep = check_quasi_simple(&m.arena, 0, &r, 20, &int(2), &QuasiConfig::default()).unwrap();
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.diagonal_pairs > 0);
        assert_eq!(rep.lipschitz_estimate, int(1));
    }

    #[test]
    fn planted_faults_are_caught() {
        let m = fixtures::m2();
        let r = region(&m.arena, ratio(1, 2));
        let cfg = QuasiConfig::default();
        let value = |v: &ClockValuation| region_value(&m.arena, 0, &r, v, &cfg.solve);
        let squared = check_quasi_simple_fn(&r, 30, &int(2), 1, 64, |v| {
            Ok(match value(v)? {
                ExtValue::Finite(q) => ExtValue::Finite(q + v.get(0) * v.get(0)),
                inf => inf,
            })
        })
        .unwrap();
        assert!(!squared.monotonicity_violations.is_empty());
        let steep = check_quasi_simple_fn(&r, 30, &int(2), 1, 64, |v| {
            Ok(match value(v)? {
                ExtValue::Finite(q) => ExtValue::Finite(q - int(2) * v.get(0)),
                inf => inf,
            })
        })
        .unwrap();
        assert!(!steep.nonexpansive_violations.is_empty());
        assert!(!steep.lipschitz_violations.is_empty());
    }

    #[test]
    fn identical_points_never_violate() {
        let ctx = ClockContext::new(["x"], 1).unwrap();
        let r = ctx.zero_region();
        let rep = check_quasi_simple_fn(&r, 10, &int(0), 0, 64, |_| Ok(ExtValue::Finite(int(5)))).unwrap();
        assert!(rep.passes());
        assert_eq!(rep.diagonal_pairs, 0);
    }

    #[test]
    fn time_monotone_examples() {
        let cfg = SolveConfig::default();
        let m1 = fixtures::m1();
        let s = state(&m1.arena, "l0", int(0));
        let rep = check_time_monotone(&m1.arena, &s, 0, &region(&m1.arena, ratio(3, 2)), 9, &cfg).unwrap();
        assert!(rep.is_monotone());
        assert_eq!(rep.points.len(), 9);
        for (t, f) in &rep.points {
            assert_eq!(t, f);
        }

        let m2 = fixtures::m2();
        let s = state(&m2.arena, "l0", int(0));
        let rep = check_time_monotone(&m2.arena, &s, 0, &region(&m2.arena, int(1)), 5, &cfg).unwrap();
        assert_eq!(rep.points, vec![(int(1), int(2))]);
    }

    #[test]
    fn time_monotone_rejects_past_regions() {
        let m1 = fixtures::m1();
        let s = state(&m1.arena, "l0", ratio(3, 2));
        let err = check_time_monotone(&m1.arena, &s, 0, &region(&m1.arena, int(1)), 3, &SolveConfig::default());
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn grid_optimum_matches_value() {
        let m = fixtures::m3();
        let s = state(&m.arena, "l0", ratio(1, 4));
        let cfg = SolveConfig::default();
        let best = grid_one_step_optimum(&m.arena, &s, &ratio(1, 64), &cfg).unwrap().unwrap();
        assert_eq!(best, value_at(&m.arena, &s, &cfg).unwrap());
    }
}

//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;
use ptgame::brg::{explore, Brg, DEFAULT_STATE_CAP};
use ptgame::clock::{ClockContext, ClockValuation};
use ptgame::model::Model;
use rand::Rng;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Outcome of comparing every clock against `0..=k` and every ordered
/// clock difference against `-k..=k`. Two valuations lie in the same region
/// iff their signatures agree.
pub fn signature(values: &[Q], k: i64) -> Vec<Ordering> {
    let mut sig = Vec::new();
    for x in values {
        for b in 0..=k {
            sig.push(x.cmp(&q(b, 1)));
        }
    }
    for (i, x) in values.iter().enumerate() {
        for (j, y) in values.iter().enumerate() {
            if i != j {
                let d = x - y;
                for b in -k..=k {
                    sig.push(d.cmp(&q(b, 1)));
                }
            }
        }
    }
    sig
}

/// Random point of `[0,k]^n` with a small random denominator, so ties
/// between fractional parts are frequent.
pub fn random_values(rng: &mut impl Rng, n: usize, k: i64) -> Vec<Q> {
    const DENS: [i64; 5] = [1, 2, 3, 4, 6];
    let d = DENS[rng.gen_range(0..DENS.len())];
    (0..n).map(|_| q(rng.gen_range(0..=k * d), d)).collect()
}

/// Time until the region changes, by direct inspection of the values:
/// half the distance to the next integer when some clock is integral,
/// otherwise the distance to the nearest integer above.
pub fn elapse_to_next_region(values: &[Q]) -> Q {
    let fracs: Vec<Q> = values.iter().map(|x| x - x.floor()).collect();
    let gaps = fracs.iter().filter(|f| !f.is_zero()).map(|f| q(1, 1) - f);
    let min_gap = gaps.min().unwrap_or_else(|| q(1, 1));
    if fracs.iter().any(Zero::is_zero) {
        min_gap / q(2, 1)
    } else {
        min_gap
    }
}

pub fn valuation(ctx: &ClockContext, values: Vec<Q>) -> ClockValuation {
    ctx.valuation(values).expect("value within [0,k]")
}

pub fn graph(m: &Model) -> Brg {
    explore(&m.arena, &m.initial, DEFAULT_STATE_CAP).expect("fixture explores")
}

/// Two clocks, both players, a probabilistic branch and a reset: enough to
/// make regions with nontrivial fractional orderings reachable.
pub const TWO_CLOCK: &str = r#"
clocks = ["x", "y"]
k = 2

[[locations]]
name = "l0"
owner = "min"
invariant = "x <= 2"

[[locations]]
name = "l1"
owner = "max"
invariant = "y <= 1 & x <= 2"

[[locations]]
name = "lf"
owner = "min"
final = true
invariant = "x <= 2"

[[edges]]
source = "l0"
action = "a"
guard = "x >= 1"
branches = [{ prob = "1/2", target = "lf" }, { prob = "1/2", resets = ["y"], target = "l1" }]

[[edges]]
source = "l0"
action = "c"
guard = "y >= 2"
branches = [{ prob = "1/1", resets = ["y"], target = "l0" }]

[[edges]]
source = "l1"
action = "b"
guard = "y <= 1"
branches = [{ prob = "1/1", target = "lf" }]

[[edges]]
source = "lf"
action = "f"
guard = "x >= 1"
branches = [{ prob = "1/1", resets = ["x", "y"], target = "lf" }]

[[edges]]
source = "lf"
action = "g"
guard = "y >= 1"
branches = [{ prob = "1/1", resets = ["x", "y"], target = "lf" }]

[initial]
location = "l0"
valuation = { x = "0", y = "1/2" }
"#;

pub fn two_clock() -> Model {
    ptgame::model::parse_model(TWO_CLOCK).expect("two-clock model parses")
}

/// Bundled fixtures plus the two-clock model.
pub fn models() -> Vec<(&'static str, Model)> {
    let mut all = ptgame::model::fixtures::all();
    all.push(("two-clock", two_clock()));
    all
}

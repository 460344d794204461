//! Clocks, valuations, constraints and Alur-Dill regions, all in exact
//! rational arithmetic.

mod constraint;
mod region;

pub use constraint::{ClockConstraint, CmpOp, SimpleConstraint};
pub use region::ClockRegion;

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{fmt_short, int, Rational};

/// The clock set and the bound `k` every clock is capped at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClockContext {
    clocks: Vec<String>,
    k: u32,
}

impl ClockContext {
    pub fn new<S: Into<String>>(clocks: impl IntoIterator<Item = S>, k: u32) -> Result<Self> {
        let clocks: Vec<String> = clocks.into_iter().map(Into::into).collect();
        if clocks.is_empty() {
            return Err(Error::Domain("at least one clock is required".into()));
        }
        if k < 1 {
            return Err(Error::Domain("the clock bound k must be at least 1".into()));
        }
        for (i, c) in clocks.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::Domain("clock names must be nonempty".into()));
            }
            if clocks[..i].contains(c) {
                return Err(Error::Domain(format!("duplicate clock `{c}`")));
            }
        }
        Ok(Self { clocks, k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.clocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clocks.is_empty()
    }

    pub fn clocks(&self) -> &[String] {
        &self.clocks
    }

    pub fn clock_name(&self, idx: usize) -> &str {
        &self.clocks[idx]
    }

    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name)
    }

    /// Builds a valuation, rejecting coordinates outside `[0, k]`.
    pub fn valuation(&self, values: Vec<Rational>) -> Result<ClockValuation> {
        if values.len() != self.clocks.len() {
            return Err(Error::Domain(format!(
                "valuation has {} coordinates, context has {} clocks",
                values.len(),
                self.clocks.len()
            )));
        }
        let k = int(self.k as i64);
        for (c, v) in self.clocks.iter().zip(&values) {
            if v.is_negative() || *v > k {
                return Err(Error::Domain(format!(
                    "clock `{c}` = {} lies outside [0, {}]",
                    fmt_short(v),
                    self.k
                )));
            }
        }
        Ok(ClockValuation { values })
    }

    pub fn zero_valuation(&self) -> ClockValuation {
        ClockValuation {
            values: vec![Rational::zero(); self.clocks.len()],
        }
    }

    /// `ν + t`, rejected when any clock would pass `k`.
    pub fn delay(&self, v: &ClockValuation, t: &Rational) -> Result<ClockValuation> {
        if t.is_negative() {
            return Err(Error::Domain("negative delay".into()));
        }
        self.valuation(v.values.iter().map(|x| x + t).collect())
    }

    pub fn display_valuation(&self, v: &ClockValuation) -> String {
        let parts: Vec<String> = self
            .clocks
            .iter()
            .zip(&v.values)
            .map(|(c, x)| format!("{c}={}", fmt_short(x)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// A point in `[0, k]^C`, stored by clock index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockValuation {
    values: Vec<Rational>,
}

impl ClockValuation {
    pub fn get(&self, clock: usize) -> &Rational {
        &self.values[clock]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `ν[C := 0]`.
    pub fn reset(&self, clocks: &[usize]) -> ClockValuation {
        let mut values = self.values.clone();
        for &c in clocks {
            values[c] = Rational::zero();
        }
        ClockValuation { values }
    }

    /// Bypasses the `[0, k]` check; callers guarantee it.
    pub(crate) fn from_values(values: Vec<Rational>) -> ClockValuation {
        ClockValuation { values }
    }

    /// Shift without the `k` check; callers that need the bound go through
    /// [`ClockContext::delay`].
    pub(crate) fn shifted(&self, t: &Rational) -> ClockValuation {
        ClockValuation {
            values: self.values.iter().map(|x| x + t).collect(),
        }
    }

    pub fn sup_distance(&self, other: &ClockValuation) -> Rational {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for ClockValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(fmt_short).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Witness shift `t > 0` for `ν ⊴ ν′`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagDelta(Rational);

impl DiagDelta {
    pub fn t(&self) -> &Rational {
        &self.0
    }
}

/// Diagonal order: `ν′` raises a nonempty set of clocks by one common
/// `t > 0` and leaves the others unchanged.
pub fn diag_leq(v: &ClockValuation, w: &ClockValuation) -> Option<DiagDelta> {
    let mut shift: Option<Rational> = None;
    for (a, b) in v.values.iter().zip(&w.values) {
        if a == b {
            continue;
        }
        let d = b - a;
        match &shift {
            None => shift = Some(d),
            Some(t) if *t == d => {}
            Some(_) => return None,
        }
    }
    shift.filter(|t| t.is_positive()).map(DiagDelta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ctx() -> ClockContext {
        ClockContext::new(["x", "y"], 2).unwrap()
    }

    fn val(x: Rational, y: Rational) -> ClockValuation {
        ctx().valuation(vec![x, y]).unwrap()
    }

    #[test]
    fn context_rejects_bad_input() {
        assert!(ClockContext::new(Vec::<String>::new(), 2).is_err());
        assert!(ClockContext::new(["x", "x"], 2).is_err());
        assert!(ClockContext::new(["x"], 0).is_err());
        assert!(ClockContext::new([""], 1).is_err());
    }

    #[test]
    fn valuation_outside_bound_is_rejected() {
        assert!(ctx().valuation(vec![int(3), int(0)]).is_err());
        assert!(ctx().valuation(vec![ratio(-1, 2), int(0)]).is_err());
        assert!(ctx().delay(&val(int(1), int(0)), &ratio(3, 2)).is_err());
    }

    #[test]
    fn diag_leq_examples() {
        let v = val(ratio(1, 5), ratio(1, 2));
        let t = diag_leq(&v, &val(ratio(7, 10), int(1))).unwrap();
        assert_eq!(t.t(), &ratio(1, 2));
        let t = diag_leq(&v, &val(ratio(7, 10), ratio(1, 2))).unwrap();
        assert_eq!(t.t(), &ratio(1, 2));
        assert!(diag_leq(&v, &val(ratio(7, 10), ratio(9, 10))).is_none());
        assert!(diag_leq(&v, &v).is_none());
        // Lowering is never ⊴.
        assert!(diag_leq(&val(ratio(7, 10), int(1)), &v).is_none());
    }
}

use std::fmt;

use num_traits::Zero;

use super::{ClockContext, ClockValuation};
use crate::error::{Error, Result};
use crate::rational::{int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub const ALL: [CmpOp; 5] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt];
}

/// `c ⋈ i` (`minus == None`) or `c − c′ ⋈ i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimpleConstraint {
    pub clock: usize,
    pub minus: Option<usize>,
    pub op: CmpOp,
    pub bound: i64,
}

impl SimpleConstraint {
    pub fn atomic(clock: usize, op: CmpOp, bound: i64) -> Self {
        Self {
            clock,
            minus: None,
            op,
            bound,
        }
    }

    pub fn diagonal(clock: usize, minus: usize, op: CmpOp, bound: i64) -> Self {
        Self {
            clock,
            minus: Some(minus),
            op,
            bound,
        }
    }

    pub fn eval(&self, v: &ClockValuation) -> bool {
        let lhs: Rational = match self.minus {
            None => v.get(self.clock).clone(),
            Some(m) => v.get(self.clock) - v.get(m),
        };
        self.op.holds(&lhs, &int(self.bound))
    }
}

/// Conjunction of simple constraints; the empty conjunction is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ClockConstraint {
    pub conjuncts: Vec<SimpleConstraint>,
}

impl ClockConstraint {
    pub fn truth() -> Self {
        Self::default()
    }

    pub fn new(conjuncts: Vec<SimpleConstraint>) -> Self {
        Self { conjuncts }
    }

    pub fn eval(&self, v: &ClockValuation) -> bool {
        self.conjuncts.iter().all(|s| s.eval(v))
    }

    /// Largest absolute bound mentioned, used by validation.
    pub fn max_bound(&self) -> i64 {
        self.conjuncts.iter().map(|s| s.bound.abs()).max().unwrap_or(0)
    }

    /// Checks clock indices and that every bound lies in `[0, k]`.
    pub fn check_bounds(&self, ctx: &ClockContext) -> Result<()> {
        for s in &self.conjuncts {
            if s.bound < 0 || s.bound > ctx.k() as i64 {
                return Err(Error::Domain(format!(
                    "bound {} > k={} in `{}`",
                    s.bound,
                    ctx.k(),
                    self.display(ctx)
                )));
            }
            if s.clock >= ctx.len() || s.minus.is_some_and(|m| m >= ctx.len()) {
                return Err(Error::Domain("constraint refers to an unknown clock".into()));
            }
        }
        Ok(())
    }

    /// Parses `true`, or atoms `c OP n` / `c - c' OP n` joined by `&`.
    pub fn parse(text: &str, ctx: &ClockContext) -> Result<Self> {
        let t = text.trim();
        if t.is_empty() || t == "true" {
            return Ok(Self::truth());
        }
        let conjuncts = t
            .split('&')
            .map(|atom| parse_atom(atom.trim(), ctx))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { conjuncts })
    }

    pub fn display(&self, ctx: &ClockContext) -> String {
        if self.conjuncts.is_empty() {
            return "true".into();
        }
        self.conjuncts
            .iter()
            .map(|s| match s.minus {
                None => format!("{} {} {}", ctx.clock_name(s.clock), s.op.symbol(), s.bound),
                Some(m) => format!(
                    "{} - {} {} {}",
                    ctx.clock_name(s.clock),
                    ctx.clock_name(m),
                    s.op.symbol(),
                    s.bound
                ),
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

impl fmt::Display for SimpleConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.minus {
            None => write!(f, "#{} {} {}", self.clock, self.op.symbol(), self.bound),
            Some(m) => write!(f, "#{} - #{} {} {}", self.clock, m, self.op.symbol(), self.bound),
        }
    }
}

fn parse_atom(atom: &str, ctx: &ClockContext) -> Result<SimpleConstraint> {
    let err = |msg: &str| Error::Parse(format!("constraint atom `{atom}`: {msg}"));
    // Longest operators first so `<=` is not read as `<`.
    let ops = [
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("==", CmpOp::Eq),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
        ("=", CmpOp::Eq),
    ];
    let (pos, sym, op) = ops
        .iter()
        .filter_map(|(sym, op)| atom.find(sym).map(|p| (p, *sym, *op)))
        .min_by_key(|(p, sym, _)| (*p, std::cmp::Reverse(sym.len())))
        .ok_or_else(|| err("missing comparison operator"))?;
    let lhs = atom[..pos].trim();
    let rhs = atom[pos + sym.len()..].trim();
    let bound: i64 = rhs.parse().map_err(|_| err("bound must be an integer"))?;
    let clock = |name: &str| {
        ctx.clock_index(name.trim())
            .ok_or_else(|| err(&format!("unknown clock `{}`", name.trim())))
    };
    match lhs.split_once('-') {
        Some((a, b)) => {
            let (a, b) = (clock(a)?, clock(b)?);
            if a == b {
                return Err(err("diagonal constraint needs two distinct clocks"));
            }
            Ok(SimpleConstraint::diagonal(a, b, op, bound))
        }
        None => Ok(SimpleConstraint::atomic(clock(lhs)?, op, bound)),
    }
}

impl ClockValuation {
    pub fn satisfies(&self, phi: &ClockConstraint) -> bool {
        phi.eval(self)
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(Zero::is_zero)
    }
}

use std::fmt;

use num_traits::{One, Zero};

use super::{ClockConstraint, ClockContext, ClockValuation, CmpOp, SimpleConstraint};
use crate::error::{Error, Result};
use crate::rational::{floor_i64, int, ratio, Rational};

/// Canonical clock region: integer part per clock plus the ordered
/// partition of clocks by fractional part. `frac_order[0]` is the
/// (possibly empty) zero-fraction block; every later block is nonempty and
/// strictly larger in fractional part than the one before. Blocks list
/// clock indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockRegion {
    ints: Vec<u32>,
    frac_order: Vec<Vec<usize>>,
}

/// Where a clock's fractional part sits inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frac {
    Zero,
    Block(usize),
}

impl ClockRegion {
    pub fn integer_part(&self, clock: usize) -> u32 {
        self.ints[clock]
    }

    pub fn integer_parts(&self) -> &[u32] {
        &self.ints
    }

    pub fn zero_block(&self) -> &[usize] {
        &self.frac_order[0]
    }

    pub fn frac_order(&self) -> &[Vec<usize>] {
        &self.frac_order
    }

    /// Thin iff some clock has zero fractional part: any positive delay
    /// leaves the region.
    pub fn is_thin(&self) -> bool {
        !self.frac_order[0].is_empty()
    }

    fn frac_of(&self, clock: usize) -> Frac {
        let pos = self
            .frac_order
            .iter()
            .position(|b| b.contains(&clock))
            .expect("partition covers every clock");
        if pos == 0 {
            Frac::Zero
        } else {
            Frac::Block(pos)
        }
    }

    fn block_index(&self, clock: usize) -> usize {
        match self.frac_of(clock) {
            Frac::Zero => 0,
            Frac::Block(i) => i,
        }
    }

    fn normalized(ints: Vec<u32>, mut frac_order: Vec<Vec<usize>>) -> Self {
        for b in frac_order.iter_mut() {
            b.sort_unstable();
        }
        let zero = frac_order.remove(0);
        frac_order.retain(|b| !b.is_empty());
        frac_order.insert(0, zero);
        Self { ints, frac_order }
    }

    /// An interior point: block `j` of `m` positive blocks gets fraction
    /// `j/(m+1)`.
    pub fn representative(&self) -> Vec<Rational> {
        let m = self.frac_order.len() as i64 - 1;
        let mut v = vec![Rational::zero(); self.ints.len()];
        for (j, block) in self.frac_order.iter().enumerate() {
            for &c in block {
                v[c] = int(self.ints[c] as i64) + ratio(j as i64, m + 1);
            }
        }
        v
    }

    /// `ν ∈ CLOS(ζ)`: integer parts and weak fractional ordering agree,
    /// where a positive block may touch 0 or 1 at the closure boundary.
    pub fn closure_contains(&self, v: &ClockValuation) -> bool {
        let one = Rational::one();
        let mut prev = Rational::zero();
        for (j, block) in self.frac_order.iter().enumerate() {
            let mut block_frac: Option<Rational> = None;
            for &c in block {
                let f = v.get(c) - int(self.ints[c] as i64);
                if f < Rational::zero() || f > one {
                    return false;
                }
                if j == 0 && !f.is_zero() {
                    return false;
                }
                match &block_frac {
                    None => block_frac = Some(f),
                    Some(g) if *g == f => {}
                    Some(_) => return false,
                }
            }
            if let Some(f) = block_frac {
                if f < prev {
                    return false;
                }
                prev = f;
            }
        }
        true
    }

    /// Exact membership `[ν] = ζ`.
    pub fn contains(&self, ctx: &ClockContext, v: &ClockValuation) -> bool {
        ctx.region_of(v).map(|r| &r == self).unwrap_or(false)
    }

    /// Decides a simple constraint from the canonical form alone.
    fn sat_simple(&self, s: &SimpleConstraint) -> bool {
        let bound = s.bound;
        // The constrained quantity is `base + δ`, where δ is 0 or ranges over
        // an open unit interval above (`+1`) or below (`-1`) `base`.
        let (base, side): (i64, i8) = match s.minus {
            None => {
                let base = self.ints[s.clock] as i64;
                match self.frac_of(s.clock) {
                    Frac::Zero => (base, 0),
                    Frac::Block(_) => (base, 1),
                }
            }
            Some(m) => {
                let base = self.ints[s.clock] as i64 - self.ints[m] as i64;
                let (bc, bm) = (self.block_index(s.clock), self.block_index(m));
                (base, (bc as i64 - bm as i64).signum() as i8)
            }
        };
        match side {
            0 => s.op.holds(&base, &bound),
            // value ∈ (base, base + 1)
            1 => match s.op {
                CmpOp::Lt | CmpOp::Le => base < bound,
                CmpOp::Gt | CmpOp::Ge => base >= bound,
                CmpOp::Eq => false,
            },
            // value ∈ (base − 1, base)
            _ => match s.op {
                CmpOp::Lt | CmpOp::Le => base <= bound,
                CmpOp::Gt | CmpOp::Ge => base > bound,
                CmpOp::Eq => false,
            },
        }
    }

    pub fn display(&self, ctx: &ClockContext) -> String {
        let ints: Vec<String> = (0..ctx.len())
            .map(|c| format!("{}:{}", ctx.clock_name(c), self.ints[c]))
            .collect();
        let blocks: Vec<String> = self
            .frac_order
            .iter()
            .enumerate()
            .filter(|(j, b)| *j > 0 || !b.is_empty())
            .map(|(j, b)| {
                let names: Vec<&str> = b.iter().map(|&c| ctx.clock_name(c)).collect();
                if j == 0 {
                    format!("0={{{}}}", names.join(","))
                } else {
                    format!("{{{}}}", names.join(","))
                }
            })
            .collect();
        format!("[{} | {}]", ints.join(" "), blocks.join(" < "))
    }
}

impl fmt::Display for ClockRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self.frac_order.iter().map(|b| format!("{b:?}")).collect();
        write!(f, "{:?}|{}", self.ints, blocks.join("<"))
    }
}

impl ClockContext {
    /// `[ν]`.
    pub fn region_of(&self, v: &ClockValuation) -> Result<ClockRegion> {
        let k = int(self.k() as i64);
        let mut ints = Vec::with_capacity(self.len());
        let mut fracs: Vec<(Rational, usize)> = Vec::new();
        let mut zero = Vec::new();
        for c in 0..self.len() {
            let x = v.get(c);
            if *x < Rational::zero() || *x > k {
                return Err(Error::Domain(format!(
                    "clock `{}` outside [0, {}]",
                    self.clock_name(c),
                    self.k()
                )));
            }
            let i = floor_i64(x);
            ints.push(i as u32);
            let f = x - int(i);
            if f.is_zero() {
                zero.push(c);
            } else {
                fracs.push((f, c));
            }
        }
        fracs.sort();
        let mut frac_order = vec![zero];
        let mut last: Option<Rational> = None;
        for (f, c) in fracs {
            if last.as_ref() == Some(&f) {
                frac_order.last_mut().unwrap().push(c);
            } else {
                frac_order.push(vec![c]);
                last = Some(f);
            }
        }
        Ok(ClockRegion::normalized(ints, frac_order))
    }

    pub fn zero_region(&self) -> ClockRegion {
        ClockRegion {
            ints: vec![0; self.len()],
            frac_order: vec![(0..self.len()).collect()],
        }
    }

    /// The next region entered by letting time elapse, or `None` when a
    /// clock already sits at `k`.
    pub fn time_successor(&self, r: &ClockRegion) -> Option<ClockRegion> {
        if r.is_thin() {
            if r.zero_block().iter().any(|&c| r.ints[c] == self.k()) {
                return None;
            }
            let mut order = r.frac_order.clone();
            let zero = std::mem::take(&mut order[0]);
            order.insert(1, zero);
            Some(ClockRegion::normalized(r.ints.clone(), order))
        } else {
            let mut ints = r.ints.clone();
            let mut order = r.frac_order.clone();
            let top = order.pop().expect("thick region has a positive block");
            for &c in &top {
                ints[c] += 1;
            }
            order[0] = top;
            Some(ClockRegion::normalized(ints, order))
        }
    }

    /// The region left immediately before entering `r`, if any.
    pub fn time_predecessor(&self, r: &ClockRegion) -> Option<ClockRegion> {
        if r.is_thin() {
            if r.zero_block().iter().any(|&c| r.ints[c] == 0) {
                return None;
            }
            let mut ints = r.ints.clone();
            let mut order = r.frac_order.clone();
            let zero = std::mem::take(&mut order[0]);
            for &c in &zero {
                ints[c] -= 1;
            }
            order.push(zero);
            Some(ClockRegion::normalized(ints, order))
        } else {
            let mut order = r.frac_order.clone();
            let low = order.remove(1);
            order[0] = low;
            Some(ClockRegion::normalized(r.ints.clone(), order))
        }
    }

    /// `r, succ(r), succ(succ(r)), ...` up to the last region before `k`
    /// blocks further elapse.
    pub fn future_chain(&self, r: &ClockRegion) -> Vec<ClockRegion> {
        let mut chain = vec![r.clone()];
        while let Some(next) = self.time_successor(chain.last().unwrap()) {
            chain.push(next);
        }
        chain
    }

    pub fn is_future(&self, from: &ClockRegion, to: &ClockRegion) -> bool {
        self.future_chain(from).iter().any(|r| r == to)
    }

    /// `ζ[C := 0]`.
    pub fn reset_region(&self, r: &ClockRegion, clocks: &[usize]) -> ClockRegion {
        let mut ints = r.ints.clone();
        let mut order: Vec<Vec<usize>> = r
            .frac_order
            .iter()
            .map(|b| b.iter().copied().filter(|c| !clocks.contains(c)).collect())
            .collect();
        for &c in clocks {
            ints[c] = 0;
            order[0].push(c);
        }
        order[0].sort_unstable();
        order[0].dedup();
        ClockRegion::normalized(ints, order)
    }

    pub fn satisfies(&self, r: &ClockRegion, phi: &ClockConstraint) -> Result<bool> {
        phi.check_bounds(self)?;
        Ok(phi.conjuncts.iter().all(|s| r.sat_simple(s)))
    }

    /// `(b, c)` with `r →_{b,c} r_thin`: from every `ν ∈ r`, delaying
    /// `b − ν(c)` lands in `r_thin`. `c` is the first clock (context order)
    /// of the target's zero block.
    pub fn boundary_coordinates(
        &self,
        r: &ClockRegion,
        r_thin: &ClockRegion,
    ) -> Result<Option<(u32, usize)>> {
        if !r_thin.is_thin() {
            return Err(Error::Domain("boundary target must be a thin region".into()));
        }
        if !self.is_future(r, r_thin) {
            return Ok(None);
        }
        let c = r_thin.zero_block()[0];
        Ok(Some((r_thin.ints[c], c)))
    }

    /// `{t ≥ 0 | ν + t ∈ target}` as its bounds `(lo, hi)`. A thin target
    /// gives `lo = hi`; a thick one the open interval, closed at `0` when
    /// `target = [ν]`. `None` when `target` is not in the future of `[ν]`.
    pub fn delay_interval(&self, v: &ClockValuation, target: &ClockRegion) -> Result<Option<(Rational, Rational)>> {
        let here = self.region_of(v)?;
        if !self.is_future(&here, target) {
            return Ok(None);
        }
        let time_to = |thin: &ClockRegion| -> Result<Rational> {
            let (b, c) = self
                .boundary_coordinates(&here, thin)?
                .ok_or_else(|| Error::Internal("thin boundary not in the future".into()))?;
            Ok(int(i64::from(b)) - v.get(c))
        };
        if target.is_thin() {
            let t = time_to(target)?;
            return Ok(Some((t.clone(), t)));
        }
        let lo = if *target == here {
            Rational::zero()
        } else {
            let pred = self
                .time_predecessor(target)
                .ok_or_else(|| Error::Internal("thick region without a predecessor".into()))?;
            time_to(&pred)?
        };
        let succ = self
            .time_successor(target)
            .ok_or_else(|| Error::Internal("thick region without a successor".into()))?;
        Ok(Some((lo, time_to(&succ)?)))
    }

    /// Every canonical region of this context.
    pub fn all_regions(&self) -> Vec<ClockRegion> {
        let n = self.len();
        let k = self.k();
        let mut out = Vec::new();
        let mut ints = vec![0u32; n];
        loop {
            // Clocks at k must have zero fraction; the rest choose a level
            // 0 (zero block) or 1..=m for positive blocks.
            let free: Vec<usize> = (0..n).filter(|&c| ints[c] < k).collect();
            let fixed: Vec<usize> = (0..n).filter(|&c| ints[c] == k).collect();
            let mut levels = vec![0usize; free.len()];
            loop {
                let m = levels.iter().copied().max().unwrap_or(0);
                if (1..=m).all(|l| levels.contains(&l)) {
                    let mut order = vec![fixed.clone()];
                    order.extend((1..=m).map(|_| Vec::new()));
                    for (i, &c) in free.iter().enumerate() {
                        order[levels[i]].push(c);
                    }
                    out.push(ClockRegion::normalized(ints.clone(), order));
                }
                // next level assignment
                let mut i = 0;
                while i < levels.len() {
                    levels[i] += 1;
                    if levels[i] <= free.len() {
                        break;
                    }
                    levels[i] = 0;
                    i += 1;
                }
                if i == levels.len() {
                    break;
                }
            }
            // next integer vector
            let mut i = 0;
            while i < n {
                ints[i] += 1;
                if ints[i] <= k {
                    break;
                }
                ints[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

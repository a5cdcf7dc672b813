//! Order relations and deviations between curves: `f <= g`, super-additivity,
//! first crossing and horizontal deviation.

use std::iter::Peekable;

use super::Curve;
use crate::error::{Error, Result};
use crate::rat::Rat;

/// How many common pseudo-periods past both transients a curve-wide check covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HorizonSpec {
    periods_to_check: u32,
}

impl HorizonSpec {
    pub fn new(periods_to_check: u32) -> Result<HorizonSpec> {
        if periods_to_check < 2 {
            return Err(Error::Precondition(format!(
                "periods_to_check must be >= 2, got {periods_to_check}"
            )));
        }
        Ok(HorizonSpec { periods_to_check })
    }

    pub fn periods(&self) -> u32 {
        self.periods_to_check
    }
}

impl Default for HorizonSpec {
    fn default() -> HorizonSpec {
        HorizonSpec { periods_to_check: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeqResult {
    pub holds: bool,
    /// Some `x` with `f(x) > g(x)` when `holds` is false.
    pub witness: Option<Rat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuperadditivityResult {
    pub holds: bool,
    /// `(s, t)` where the inequality fails.
    pub witness: Option<(Rat, Rat)>,
}

/// Horizontal deviation and where it is reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Deviation {
    pub value: Rat,
    /// Arrival instant whose delay attains (or approaches) the supremum.
    pub at: Rat,
    /// First `u > 0` with `alpha(u) <= beta(u)`, when one exists.
    pub crossing: Option<Rat>,
}

/// Smallest period that both curves can be described with.
pub(crate) fn common_period(a: &Curve, b: &Curve) -> Rat {
    if a.tail_is_linear() && b.tail_is_linear() {
        // any period fits a line; one spanning the transients keeps unrolling short
        a.period.max(b.period).max(a.transient).max(b.transient)
    } else if a.tail_is_linear() {
        b.period
    } else if b.tail_is_linear() {
        a.period
    } else {
        a.period.lcm(b.period)
    }
}

/// Both curves re-described with a shared period.
pub(crate) fn common_period_pair(a: &Curve, b: &Curve) -> (Curve, Curve) {
    let p = common_period(a, b);
    let adapt = |c: &Curve| {
        if c.period == p {
            c.clone()
        } else if c.tail_is_linear() {
            c.with_period(p)
        } else {
            c.with_period_multiple((p / c.period).floor_int())
        }
    };
    (adapt(a), adapt(b))
}

/// Sorted breakpoint abscissae of both curves in `[0, horizon]`, with `horizon` itself.
pub(crate) fn merged_abscissae(a: &Curve, b: &Curve, horizon: Rat) -> Vec<Rat> {
    let mut xs: Vec<Rat> = a
        .unrolled()
        .take_while(|p| p.x <= horizon)
        .map(|p| p.x)
        .chain(b.unrolled().take_while(|p| p.x <= horizon).map(|p| p.x))
        .collect();
    xs.push(horizon);
    xs.sort();
    xs.dedup();
    xs
}

/// Smallest positive integers `(k, m)` with `k * a = m * b`.
pub(crate) fn lcm_multiple(a: Rat, b: Rat) -> (Rat, Rat) {
    let q = a / b;
    (Rat::int(q.denom()), Rat::int(q.numer()))
}

/// Lazy merge of the unrolled breakpoint abscissae of two curves.
struct Merged<A: Iterator<Item = Rat>, B: Iterator<Item = Rat>> {
    a: Peekable<A>,
    b: Peekable<B>,
}

impl<A: Iterator<Item = Rat>, B: Iterator<Item = Rat>> Iterator for Merged<A, B> {
    type Item = Rat;
    fn next(&mut self) -> Option<Rat> {
        let x = match (self.a.peek(), self.b.peek()) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => return None,
        };
        while self.a.peek() == Some(&x) {
            self.a.next();
        }
        while self.b.peek() == Some(&x) {
            self.b.next();
        }
        Some(x)
    }
}

fn merged<'a>(a: &'a Curve, b: &'a Curve) -> impl Iterator<Item = Rat> + 'a {
    Merged {
        a: a.unrolled().map(|p| p.x).peekable(),
        b: b.unrolled().map(|p| p.x).peekable(),
    }
}

impl Curve {
    /// Checks `self <= other` everywhere.
    ///
    /// When the long-term rate of `self` is larger the answer is `false` and
    /// the witness lies wherever the difference first becomes positive.
    /// Otherwise the difference is pseudo-periodic with non-increasing
    /// offsets, so the breakpoints and open segments over the transients
    /// plus `h` common periods settle the question.
    pub fn curve_leq(&self, other: &Curve, h: HorizonSpec) -> LeqResult {
        let (f, g) = common_period_pair(self, other);
        let p = f.period;
        let t0 = f.transient.max(g.transient);
        let mut periods = h.periods() as i128;
        if f.increment > g.increment {
            // the gap grows by a fixed amount each period: find where it turns positive
            let gap0 = g.value_at(t0) - f.value_at(t0);
            let per = f.increment - g.increment;
            periods = periods.max((gap0 / per).floor_int() + 2);
        }
        let horizon = t0 + Rat::int(periods) * p;
        let xs = merged_abscissae(&f, &g, horizon);
        let bad = |x: Rat| f.value_at(x) > g.value_at(x);
        if let Some(&x) = xs.iter().find(|&&x| bad(x)) {
            return LeqResult {
                holds: false,
                witness: Some(x),
            };
        }
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let dr = f.right_at(x0) - g.right_at(x0);
            let dl = f.left_at(x1) - g.left_at(x1);
            if !dr.is_positive() && !dl.is_positive() {
                continue;
            }
            // the difference is affine on (x0, x1): pick a point where it is positive
            let u = if dr.is_positive() && dl.is_positive() {
                Rat::new(1, 2)
            } else if dr.is_positive() {
                dr / (Rat::int(2) * (dr - dl))
            } else {
                Rat::ONE - dl / (Rat::int(2) * (dl - dr))
            };
            let x = x0 + (x1 - x0) * u;
            debug_assert!(bad(x));
            return LeqResult {
                holds: false,
                witness: Some(x),
            };
        }
        LeqResult {
            holds: true,
            witness: None,
        }
    }

    /// Checks `f(s + t) >= f(s) + f(t)` over the breakpoint lattice (and
    /// segment midpoints) of the transient plus `h` periods.
    pub fn check_superadditive(&self, h: HorizonSpec) -> SuperadditivityResult {
        self.lattice_check(h, |sum, split| sum >= split)
    }

    /// Checks `f(s + t) <= f(s) + f(t)` on the same lattice.
    pub fn check_subadditive(&self, h: HorizonSpec) -> SuperadditivityResult {
        self.lattice_check(h, |sum, split| sum <= split)
    }

    fn lattice_check(&self, h: HorizonSpec, ok: impl Fn(Rat, Rat) -> bool) -> SuperadditivityResult {
        let horizon = self.transient + Rat::int(h.periods() as i128) * self.period;
        let bps: Vec<Rat> = self.breakpoints_until(horizon).iter().map(|b| b.x).collect();
        let mut all = bps.clone();
        for w in bps.windows(2) {
            all.push(w[0].mid(w[1]));
        }
        if let Some(&last) = bps.last() {
            if last < horizon {
                all.push(last.mid(horizon));
                all.push(horizon);
            }
        }
        all.sort();
        all.dedup();
        for points in [&bps, &all] {
            let vals: Vec<Rat> = points.iter().map(|&x| self.value_at(x)).collect();
            for (a, &s) in points.iter().enumerate() {
                for (b, &t) in points.iter().enumerate().skip(a) {
                    if !ok(self.value_at(s + t), vals[a] + vals[b]) {
                        return SuperadditivityResult {
                            holds: false,
                            witness: Some((s, t)),
                        };
                    }
                }
            }
        }
        SuperadditivityResult {
            holds: true,
            witness: None,
        }
    }

    /// `inf {u > 0 | self(u) <= other(u)}`, or `None` if the curves never meet.
    pub fn first_crossing(&self, other: &Curve) -> Option<Rat> {
        // a linear tail may take any period; borrow the other curve's so that
        // walking breakpoints does not crawl through tiny periods
        let (a, b) = match (self.tail_is_linear(), other.tail_is_linear()) {
            (true, false) => (self.with_period(other.period), other.clone()),
            (false, true) => (self.clone(), other.with_period(self.period)),
            _ => (self.clone(), other.clone()),
        };
        let (a, b) = (&a, &b);
        let ra = a.long_term_rate();
        let rb = b.long_term_rate();
        let t0 = a.transient.max(b.transient);
        let p = common_period(a, b);
        // past this point the pattern repeats without meeting
        let mut give_up: Option<Rat> = if ra >= rb { Some(t0 + Rat::int(2) * p) } else { None };
        let mut xs = merged(a, b).peekable();
        while let Some(x) = xs.next() {
            if x.is_positive() && a.value_at(x) <= b.value_at(x) {
                return Some(x);
            }
            let next = *xs.peek().expect("unrolled breakpoints are infinite");
            let dr = a.right_at(x) - b.right_at(x);
            let (sa, sb) = (a.slope_right(x), b.slope_right(x));
            if dr.is_negative() || (dr.is_zero() && sa <= sb) {
                return Some(x);
            }
            if sa < sb {
                let u = x + dr / (sb - sa);
                if u < next {
                    return Some(u);
                }
            }
            if give_up.is_none() && x >= t0 + p {
                // rates differ in our favour: the gap shrinks by a fixed amount per period
                let gap = (a.value_at(x) - b.value_at(x)).max(a.right_at(x) - b.right_at(x));
                let k = (gap / ((rb - ra) * p)).ceil_int() + 2;
                give_up = Some(x + Rat::int(k) * p);
            }
            if give_up.is_some_and(|g| x > g) {
                return None;
            }
        }
        None
    }

    /// Horizontal deviation `h(self, beta)`: the worst-case delay of a flow
    /// with arrival curve `self` served with `beta`.
    pub fn horizontal_deviation(&self, beta: &Curve) -> Result<Deviation> {
        let limit = self.deviation_horizon(beta)?;
        let crossing = self.first_crossing(beta);
        let (value, at) = self.deviation_until(beta, limit)?;
        Ok(Deviation { value, at, crossing })
    }

    /// Same as [`Curve::horizontal_deviation`], with the search stopped at the
    /// first crossing. Sound when `self` is sub-additive and `beta` is
    /// super-additive, and much cheaper for long common periods.
    pub fn horizontal_deviation_to_crossing(&self, beta: &Curve) -> Result<Deviation> {
        let limit = self.deviation_horizon(beta)?;
        let crossing = self.first_crossing(beta);
        let stop = crossing.map_or(limit, |s| s.min(limit));
        let (value, at) = self.deviation_until(beta, stop)?;
        Ok(Deviation { value, at, crossing })
    }

    /// Arrival instant past which the per-instant delay can only repeat or shrink.
    fn deviation_horizon(&self, beta: &Curve) -> Result<Rat> {
        if self.long_term_rate() > beta.long_term_rate() {
            return Err(Error::Unbounded);
        }
        if self.increment.is_zero() {
            return Ok(self.period_end());
        }
        let t0 = self.transient.max(beta.transient);
        let p = common_period(self, beta);
        let ystar = beta.inverse_periodic_from();
        let t1 = self.upper_inverse_at(ystar).ok_or(Error::Unbounded)?;
        Ok(t0.max(t1) + p)
    }

    /// `sup_{0 <= t <= limit} [beta^↓(self(t)) - t]^+` including one-sided limits.
    fn deviation_until(&self, beta: &Curve, limit: Rat) -> Result<(Rat, Rat)> {
        let lower = |y: Rat| beta.lower_inverse_at(y).ok_or(Error::Unbounded);
        let upper = |y: Rat| beta.upper_inverse_at(y).ok_or(Error::Unbounded);
        let mut best = (Rat::ZERO, Rat::ZERO);
        let mut offer = |d: Rat, t: Rat| {
            if d > best.0 {
                best = (d, t);
            }
        };
        let mut levels = beta.unrolled().flat_map(|b| [b.value, b.right]).peekable();
        let mut bps = self.unrolled().peekable();
        while let Some(b) = bps.next() {
            if b.x > limit {
                break;
            }
            let t = b.x;
            offer(lower(b.value)? - t, t);
            if t.is_positive() {
                offer(lower(self.left_at(t))? - t, t);
            }
            if t == limit {
                break;
            }
            let end = bps.peek().map_or(limit, |n| n.x.min(limit));
            if b.slope.is_positive() {
                offer(upper(b.right)? - t, t);
                // interior points where the arrival level meets a breakpoint level of beta
                let top = b.seg_at(end);
                while levels.peek().is_some_and(|&v| v <= b.right) {
                    levels.next();
                }
                while let Some(&v) = levels.peek() {
                    if v >= top {
                        break;
                    }
                    let u = t + (v - b.right) / b.slope;
                    offer(lower(v)? - u, u);
                    offer(upper(v)? - u, u);
                    levels.next();
                }
            } else {
                offer(lower(b.right)? - t, t);
            }
            if end == limit && bps.peek().is_none_or(|n| n.x > limit) {
                offer(lower(b.seg_at(limit))? - limit, limit);
                offer(lower(self.value_at(limit))? - limit, limit);
                break;
            }
        }
        Ok(best)
    }
}

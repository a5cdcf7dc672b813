//! Ultimately pseudo-periodic piecewise-linear curves with exact breakpoints.
//!
//! A [`Curve`] stores the function on `[0, T + d)` as a list of
//! [`Breakpoint`]s; beyond that it is unrolled with `f(x + d) = f(x) + c` for
//! `x >= T`. Each breakpoint carries the value at the point, the right-limit,
//! and the slope of the open segment up to the next breakpoint, so left- and
//! right-continuous functions (stairs, pseudo-inverses) are both exact.

pub mod csv_io;
mod ops;
mod order;

use std::fmt;

use crate::error::{Error, Result};
use crate::rat::Rat;

pub use csv_io::{read_csv, write_csv};
pub use ops::max_of;
pub use order::{Deviation, HorizonSpec, LeqResult, SuperadditivityResult};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Breakpoint {
    pub x: Rat,
    pub value: Rat,
    /// `f(x+)`
    pub right: Rat,
    /// Slope on the open segment that starts at `x`.
    pub slope: Rat,
}

impl Breakpoint {
    pub fn new(x: Rat, value: Rat, right: Rat, slope: Rat) -> Breakpoint {
        Breakpoint { x, value, right, slope }
    }

    /// Continuous breakpoint: value and right-limit coincide.
    pub fn cont(x: Rat, value: Rat, slope: Rat) -> Breakpoint {
        Breakpoint {
            x,
            value,
            right: value,
            slope,
        }
    }

    /// Value reached at `at` by the segment starting here.
    pub fn seg_at(&self, at: Rat) -> Rat {
        self.right + self.slope * (at - self.x)
    }

    fn shifted(&self, dx: Rat, dy: Rat) -> Breakpoint {
        Breakpoint {
            x: self.x + dx,
            value: self.value + dy,
            right: self.right + dy,
            slope: self.slope,
        }
    }
}

/// One element of the alternating point / open-segment description.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Element {
    Point {
        x: Rat,
        value: Rat,
    },
    Segment {
        from: Rat,
        to: Rat,
        right_limit: Rat,
        slope: Rat,
    },
}

#[derive(Clone)]
pub struct Curve {
    bps: Vec<Breakpoint>,
    transient: Rat,
    period: Rat,
    increment: Rat,
}

impl Curve {
    /// Builds and validates a curve from breakpoints covering `[0, T + d)`.
    ///
    /// `transient` must not exceed the last breakpoint's reach; a breakpoint
    /// is inserted at `transient` if it falls inside a segment.
    pub fn new(mut bps: Vec<Breakpoint>, transient: Rat, period: Rat, increment: Rat) -> Result<Curve> {
        if !period.is_positive() {
            return Err(Error::InvalidCurve(format!("period must be positive, got {period}")));
        }
        if increment.is_negative() {
            return Err(Error::InvalidCurve(format!("increment must be >= 0, got {increment}")));
        }
        if transient.is_negative() {
            return Err(Error::InvalidCurve(format!("transient must be >= 0, got {transient}")));
        }
        if bps.first().map(|b| b.x) != Some(Rat::ZERO) {
            return Err(Error::InvalidCurve("first breakpoint must be at x = 0".into()));
        }
        let end = transient + period;
        bps.retain(|b| b.x < end);
        if !bps.iter().any(|b| b.x == transient) {
            split_at(&mut bps, transient);
        }
        let curve = Curve {
            bps,
            transient,
            period,
            increment,
        };
        curve.validate()?;
        Ok(curve.normalized())
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCurve(m));
        for w in self.bps.windows(2) {
            if w[0].x >= w[1].x {
                return bad(format!("breakpoints not increasing at {}", w[1].x));
            }
        }
        let end = self.period_end();
        for (k, b) in self.bps.iter().enumerate() {
            if b.slope.is_negative() {
                return bad(format!("negative slope at {}", b.x));
            }
            if b.right < b.value {
                return bad(format!("right-limit below value at {}", b.x));
            }
            let left = if k == 0 {
                None
            } else {
                Some(self.bps[k - 1].seg_at(b.x))
            };
            if let Some(l) = left {
                if l > b.value {
                    return bad(format!("left-limit above value at {}", b.x));
                }
            }
        }
        if self.bps[0].value.is_negative() {
            return bad("negative value at 0".into());
        }
        let last = self.bps.last().expect("non-empty");
        let wrap = self.bps[self.transient_index()].value + self.increment;
        if last.seg_at(end) > wrap {
            return bad(format!("period wrap decreases at {end}"));
        }
        Ok(())
    }

    fn transient_index(&self) -> usize {
        self.bps
            .binary_search_by(|b| b.x.cmp(&self.transient))
            .expect("transient is a breakpoint")
    }

    pub fn period_end(&self) -> Rat {
        self.transient + self.period
    }

    pub fn transient(&self) -> Rat {
        self.transient
    }

    pub fn period(&self) -> Rat {
        self.period
    }

    pub fn increment(&self) -> Rat {
        self.increment
    }

    /// Long-term slope `c / d`.
    pub fn long_term_rate(&self) -> Rat {
        self.increment / self.period
    }

    /// Breakpoints on `[0, T + d)`.
    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.bps
    }

    /// Alternating point / open-segment description of `[0, T + d)`.
    pub fn elements(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(2 * self.bps.len());
        for (k, b) in self.bps.iter().enumerate() {
            out.push(Element::Point { x: b.x, value: b.value });
            let to = self.bps.get(k + 1).map_or(self.period_end(), |n| n.x);
            out.push(Element::Segment {
                from: b.x,
                to,
                right_limit: b.right,
                slope: b.slope,
            });
        }
        out
    }

    // --- evaluation ---------------------------------------------------------

    /// Maps `x >= 0` to `(x_base, k)` with `x_base` in `[0, T + d)` and
    /// `f(x) = f(x_base) + k c`.
    fn reduce(&self, x: Rat) -> (Rat, Rat) {
        if x < self.period_end() {
            (x, Rat::ZERO)
        } else {
            let k = Rat::int(((x - self.transient) / self.period).floor_int());
            (x - k * self.period, k)
        }
    }

    /// Index of the segment containing `x` (the last breakpoint with `bp.x <= x`).
    fn locate(&self, x: Rat) -> usize {
        match self.bps.binary_search_by(|b| b.x.cmp(&x)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    fn check_x(x: Rat) -> Result<()> {
        if x.is_negative() {
            Err(Error::NegativeAbscissa(x))
        } else {
            Ok(())
        }
    }

    pub fn value(&self, x: Rat) -> Result<Rat> {
        Self::check_x(x)?;
        Ok(self.value_at(x))
    }

    pub fn right_limit(&self, x: Rat) -> Result<Rat> {
        Self::check_x(x)?;
        Ok(self.right_at(x))
    }

    /// `f(x-)`; at `x = 0` this is `f(0)`.
    pub fn left_limit(&self, x: Rat) -> Result<Rat> {
        Self::check_x(x)?;
        Ok(self.left_at(x))
    }

    /// `f(x)` for `x >= 0` (panics on negative input).
    pub fn value_at(&self, x: Rat) -> Rat {
        debug_assert!(!x.is_negative());
        let (xb, k) = self.reduce(x);
        let b = &self.bps[self.locate(xb)];
        let v = if b.x == xb { b.value } else { b.seg_at(xb) };
        v + k * self.increment
    }

    pub fn right_at(&self, x: Rat) -> Rat {
        let (xb, k) = self.reduce(x);
        let b = &self.bps[self.locate(xb)];
        b.seg_at(xb) + k * self.increment
    }

    pub fn left_at(&self, x: Rat) -> Rat {
        if !x.is_positive() {
            return self.bps[0].value;
        }
        let (xb, k) = if x <= self.period_end() {
            (x, Rat::ZERO)
        } else {
            let k = Rat::int(((x - self.transient) / self.period).ceil_int() - 1);
            (x - k * self.period, k)
        };
        // last breakpoint strictly left of xb
        let idx = match self.bps.binary_search_by(|b| b.x.cmp(&xb)) {
            Ok(i) => i - 1,
            Err(i) => i - 1,
        };
        self.bps[idx].seg_at(xb) + k * self.increment
    }

    /// Slope of the segment starting at or containing `x`, to the right of `x`.
    pub fn slope_right(&self, x: Rat) -> Rat {
        let (xb, _) = self.reduce(x);
        self.bps[self.locate(xb)].slope
    }

    /// Breakpoint (with periodic unrolling) of the segment containing `x`.
    pub fn segment_at(&self, x: Rat) -> Breakpoint {
        let (xb, k) = self.reduce(x);
        let b = self.bps[self.locate(xb)];
        b.shifted(x - xb, k * self.increment)
    }

    /// All breakpoints with `x <= horizon`, unrolled across periods.
    pub fn breakpoints_until(&self, horizon: Rat) -> Vec<Breakpoint> {
        self.unrolled().take_while(|b| b.x <= horizon).collect()
    }

    /// Unrolled breakpoints with `after < x <= until`, skipping whole
    /// periods before `after` instead of walking through them.
    pub fn breakpoints_in(&self, after: Rat, until: Rat) -> Vec<Breakpoint> {
        if after < self.transient {
            return self
                .unrolled()
                .skip_while(|b| b.x <= after)
                .take_while(|b| b.x <= until)
                .collect();
        }
        let ti = self.transient_index();
        let first = ((after - self.transient) / self.period).floor_int();
        (first..)
            .flat_map(|k| {
                let (dx, dy) = (Rat::int(k) * self.period, Rat::int(k) * self.increment);
                self.bps[ti..].iter().map(move |b| b.shifted(dx, dy))
            })
            .skip_while(|b| b.x <= after)
            .take_while(|b| b.x <= until)
            .collect()
    }

    /// Infinite iterator over the unrolled breakpoints.
    pub fn unrolled(&self) -> impl Iterator<Item = Breakpoint> + '_ {
        let ti = self.transient_index();
        let head = self.bps.iter().copied();
        let tail = (1i128..).flat_map(move |k| {
            let dx = Rat::int(k) * self.period;
            let dy = Rat::int(k) * self.increment;
            self.bps[ti..].iter().map(move |b| b.shifted(dx, dy))
        });
        head.chain(tail)
    }

    /// `true` when, from the transient on, the curve is a single line.
    pub fn tail_is_linear(&self) -> bool {
        let ti = self.transient_index();
        if ti + 1 != self.bps.len() {
            return false;
        }
        let b = &self.bps[ti];
        b.value == b.right && b.slope * self.period == self.increment
    }

    /// Same function with a different period. Only valid for a linear tail.
    pub fn with_period(&self, period: Rat) -> Curve {
        assert!(self.tail_is_linear(), "with_period requires a linear tail");
        let slope = self.bps.last().expect("non-empty").slope;
        Curve {
            bps: self.bps.clone(),
            transient: self.transient,
            period,
            increment: slope * period,
        }
    }

    // --- constructors -------------------------------------------------------

    pub fn zero() -> Curve {
        Curve::token_bucket(Rat::ZERO, Rat::ZERO)
    }

    /// `γ_{r,b}`: 0 at 0 and `r t + b` for `t > 0`.
    pub fn token_bucket(rate: Rat, burst: Rat) -> Curve {
        assert!(
            !rate.is_negative() && !burst.is_negative(),
            "token bucket needs r, b >= 0"
        );
        // the jump at 0 is not repeated, so the periodic part starts at 1
        let bps = vec![Breakpoint::new(Rat::ZERO, Rat::ZERO, burst, rate)];
        Curve::new(bps, Rat::ONE, Rat::ONE, rate).expect("token bucket is valid")
    }

    /// `ν_{a,b}(t) = a ⌈t / b⌉`.
    pub fn stair(height: Rat, width: Rat) -> Curve {
        assert!(height.is_positive() && width.is_positive(), "stair needs a, b > 0");
        Curve {
            bps: vec![Breakpoint::new(Rat::ZERO, Rat::ZERO, height, Rat::ZERO)],
            transient: Rat::ZERO,
            period: width,
            increment: height,
        }
    }

    /// `β_{r,T}(t) = r [t - T]^+`.
    pub fn rate_latency(rate: Rat, latency: Rat) -> Curve {
        assert!(
            rate.is_positive() && !latency.is_negative(),
            "rate-latency needs r > 0, T >= 0"
        );
        let mut bps = Vec::with_capacity(2);
        if latency.is_positive() {
            bps.push(Breakpoint::cont(Rat::ZERO, Rat::ZERO, Rat::ZERO));
        }
        bps.push(Breakpoint::cont(latency, Rat::ZERO, rate));
        Curve {
            bps,
            transient: latency,
            period: Rat::ONE,
            increment: rate,
        }
    }

    /// `λ_r(t) = r t`.
    pub fn linear(rate: Rat) -> Curve {
        Curve::rate_latency(rate, Rat::ZERO)
    }

    /// `λ_1`.
    pub fn unit_rate() -> Curve {
        Curve::linear(Rat::ONE)
    }

    /// Continuous curve through `points` (starting at `x = 0`), continued
    /// pseudo-periodically so that the last `period` of the list repeats with
    /// `increment`.
    pub fn from_points(points: &[(Rat, Rat)], period: Rat, increment: Rat) -> Result<Curve> {
        if points.len() < 2 {
            return Err(Error::InvalidCurve("need at least two points".into()));
        }
        let last = points[points.len() - 1];
        let transient = last.0 - period;
        if transient.is_negative() {
            return Err(Error::InvalidCurve("points must span at least one period".into()));
        }
        let mut bps = Vec::with_capacity(points.len());
        for w in points.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x1 <= x0 {
                return Err(Error::InvalidCurve(format!("points not increasing at {x1}")));
            }
            bps.push(Breakpoint::cont(x0, y0, (y1 - y0) / (x1 - x0)));
        }
        let curve = Curve::new(bps, transient, period, increment)?;
        if curve.value_at(transient) + increment != last.1 {
            return Err(Error::InvalidCurve(format!(
                "last point {} does not match value at {} plus increment",
                last.1, transient
            )));
        }
        Ok(curve)
    }

    /// Curve given by `bps` up to the last breakpoint and constant after it
    /// (the last segment must be flat).
    pub fn eventually_constant(bps: Vec<Breakpoint>) -> Result<Curve> {
        let last = bps.last().ok_or_else(|| Error::InvalidCurve("no breakpoints".into()))?;
        if !last.slope.is_zero() {
            return Err(Error::InvalidCurve(
                "last segment of an eventually constant curve must be flat".into(),
            ));
        }
        let t = last.x;
        Curve::new(bps, t, Rat::ONE, Rat::ZERO)
    }

    /// Continuous polyline through `points` (first at `x = 0`), constant after
    /// the last point. Repeated points are ignored.
    pub fn polyline(points: &[(Rat, Rat)]) -> Result<Curve> {
        let mut pts: Vec<(Rat, Rat)> = Vec::with_capacity(points.len());
        for &p in points {
            match pts.last() {
                Some(&q) if q == p => continue,
                Some(&q) if q.0 >= p.0 => {
                    return Err(Error::InvalidCurve(format!(
                        "polyline abscissae not increasing at {}",
                        p.0
                    )))
                }
                _ => pts.push(p),
            }
        }
        let mut bps: Vec<Breakpoint> = pts
            .windows(2)
            .map(|w| Breakpoint::cont(w[0].0, w[0].1, (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
            .collect();
        let &(x, y) = pts.last().ok_or_else(|| Error::InvalidCurve("empty polyline".into()))?;
        bps.push(Breakpoint::cont(x, y, Rat::ZERO));
        Curve::eventually_constant(bps)
    }

    /// Builds a curve from unrolled breakpoints computed over at least
    /// `[0, transient + period)`; entries beyond are dropped.
    pub(crate) fn fold(bps: Vec<Breakpoint>, transient: Rat, period: Rat, increment: Rat) -> Curve {
        debug_assert!(bps.last().is_some_and(|b| b.x >= transient));
        Curve::new(bps, transient, period, increment).unwrap_or_else(|e| panic!("fold produced invalid curve: {e}"))
    }

    // --- simple transforms --------------------------------------------------

    /// `x ↦ y_mul · f(x / x_mul)`.
    pub fn scale(&self, y_mul: Rat, x_mul: Rat) -> Curve {
        assert!(x_mul.is_positive() && !y_mul.is_negative());
        let bps = self
            .bps
            .iter()
            .map(|b| Breakpoint::new(b.x * x_mul, b.value * y_mul, b.right * y_mul, b.slope * y_mul / x_mul))
            .collect();
        Curve {
            bps,
            transient: self.transient * x_mul,
            period: self.period * x_mul,
            increment: self.increment * y_mul,
        }
        .normalized()
    }

    /// `f + k`.
    pub fn shift_up(&self, k: Rat) -> Curve {
        let bps = self.bps.iter().map(|b| b.shifted(Rat::ZERO, k)).collect();
        Curve { bps, ..self.clone() }
    }

    /// `x ↦ f([x - a]^+)`.
    pub fn delay(&self, a: Rat) -> Curve {
        assert!(!a.is_negative());
        if a.is_zero() {
            return self.clone();
        }
        let v0 = self.bps[0].value;
        let mut bps = vec![Breakpoint::cont(Rat::ZERO, v0, Rat::ZERO)];
        bps.extend(self.bps.iter().map(|b| b.shifted(a, Rat::ZERO)));
        Curve::fold(bps, self.transient + a, self.period, self.increment)
    }

    /// `true` when the curve has no jump anywhere.
    pub fn is_continuous(&self) -> bool {
        self.first_jump().is_none()
    }

    /// First abscissa where the curve is discontinuous, if any.
    pub fn first_jump(&self) -> Option<Rat> {
        for (k, b) in self.bps.iter().enumerate() {
            if b.right != b.value {
                return Some(b.x);
            }
            if k > 0 && self.bps[k - 1].seg_at(b.x) != b.value {
                return Some(b.x);
            }
        }
        let end = self.period_end();
        let last = self.bps.last().expect("non-empty");
        if last.seg_at(end) != self.bps[self.transient_index()].value + self.increment {
            return Some(end);
        }
        None
    }

    /// Largest slope over all segments.
    pub fn max_slope(&self) -> Rat {
        self.bps.iter().map(|b| b.slope).max().expect("non-empty")
    }

    // --- normalization ------------------------------------------------------

    /// Drops redundant breakpoints and shortens the transient as far as the
    /// periodic pattern allows.
    fn normalized(mut self) -> Curve {
        self.shrink_transient();
        self.merge_redundant();
        self
    }

    fn merge_redundant(&mut self) {
        let t = self.transient;
        let mut out: Vec<Breakpoint> = Vec::with_capacity(self.bps.len());
        for b in self.bps.drain(..) {
            if let Some(prev) = out.last() {
                let redundant = b.x != t && prev.seg_at(b.x) == b.value && b.value == b.right && prev.slope == b.slope;
                if redundant {
                    continue;
                }
            }
            out.push(b);
        }
        self.bps = out;
    }

    fn shrink_transient(&mut self) {
        while self.transient.is_positive() {
            let t = self.transient;
            let d = self.period;
            let c = self.increment;
            let ti = self.transient_index();
            // largest candidate below t: a breakpoint, or a breakpoint of the
            // last period shifted back by d
            let mut cand = self.bps[ti - 1].x;
            if let Some(b) = self.bps[ti + 1..].last() {
                cand = cand.max(b.x - d);
            }
            if cand.is_negative() {
                break;
            }
            let here = self.segment_at(cand);
            let here_value = self.value_at(cand);
            let there = self.segment_at(cand + d);
            let there_value = self.value_at(cand + d);
            let same = here_value + c == there_value
                && here.seg_at(cand) + c == there.seg_at(cand + d)
                && here.slope == there.slope
                && self.left_at(t) + c == self.left_at(t + d);
            if !same {
                break;
            }
            if !self.bps.iter().any(|b| b.x == cand) {
                split_at(&mut self.bps, cand);
            }
            self.transient = cand;
            let end = cand + d;
            self.bps.retain(|b| b.x < end);
        }
    }

    /// Functional equality: same value, one-sided limits and slopes everywhere.
    pub fn same_function(&self, other: &Curve) -> bool {
        if self.long_term_rate() != other.long_term_rate() {
            return false;
        }
        let (a, b) = order::common_period_pair(self, other);
        let horizon = a.transient.max(b.transient) + a.period;
        let xs = order::merged_abscissae(&a, &b, horizon);
        xs.iter().all(|&x| {
            a.value_at(x) == b.value_at(x)
                && a.right_at(x) == b.right_at(x)
                && a.left_at(x) == b.left_at(x)
                && a.slope_right(x) == b.slope_right(x)
        })
    }
}

/// Inserts a breakpoint at `x` inside the segment that contains it.
fn split_at(bps: &mut Vec<Breakpoint>, x: Rat) {
    let idx = match bps.binary_search_by(|b| b.x.cmp(&x)) {
        Ok(_) => return,
        Err(i) => i,
    };
    let seg = bps[idx - 1];
    let v = seg.seg_at(x);
    bps.insert(idx, Breakpoint::cont(x, v, seg.slope));
}

impl PartialEq for Curve {
    fn eq(&self, other: &Curve) -> bool {
        self.same_function(other)
    }
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Curve[T={}, d={}, c={}; ",
            self.transient, self.period, self.increment
        )?;
        for (k, b) in self.bps.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if b.value == b.right {
                write!(f, "({}, {}) /{}", b.x, b.value, b.slope)?;
            } else {
                write!(f, "({}, {}|{}) /{}", b.x, b.value, b.right, b.slope)?;
            }
        }
        write!(f, "]")
    }
}

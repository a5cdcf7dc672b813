//! Constructive operations: unit-rate smoothing, pseudo-inverse,
//! composition, pointwise max / sum and packetization.

use super::{order, Breakpoint, Curve};
use crate::error::{Error, Result};
use crate::rat::Rat;

impl Curve {
    /// Level above which `f^↓(y + c) = f^↓(y) + d` holds.
    pub(crate) fn inverse_periodic_from(&self) -> Rat {
        let t = self.transient;
        let y = self.left_at(self.period_end()) - self.increment;
        if t.is_positive() {
            y.max(self.left_at(t))
        } else {
            y
        }
    }

    /// `f^↓(y) = inf {x >= 0 | f(x) >= y}`; `None` when `f` never reaches `y`.
    pub fn lower_inverse_at(&self, y: Rat) -> Option<Rat> {
        self.inverse_at(y, false)
    }

    /// `inf {x >= 0 | f(x) > y}`, i.e. the right-limit of `f^↓` at `y`.
    pub fn upper_inverse_at(&self, y: Rat) -> Option<Rat> {
        self.inverse_at(y, true)
    }

    fn inverse_at(&self, y: Rat, strict: bool) -> Option<Rat> {
        let reaches = |v: Rat| if strict { v > y } else { v >= y };
        if reaches(self.bps[0].value) {
            return Some(Rat::ZERO);
        }
        let ystar = self.inverse_periodic_from();
        let (yb, k) = if y > ystar {
            if self.increment.is_zero() {
                return None;
            }
            let k = ((y - ystar) / self.increment).ceil_int() - 1;
            let k = Rat::int(k.max(0));
            (y - k * self.increment, k)
        } else {
            (y, Rat::ZERO)
        };
        let x = self.base_inverse(yb, strict)?;
        Some(x + k * self.period)
    }

    /// Breakpoint `i` of the first two periods, unrolled.
    fn virtual_bp(&self, i: usize) -> Breakpoint {
        let n = self.bps.len();
        if i < n {
            self.bps[i]
        } else {
            let ti = self.transient_index();
            self.bps[ti + (i - n)].shifted(self.period, self.increment)
        }
    }

    /// Inverse restricted to `[0, T + 2d)`.
    fn base_inverse(&self, y: Rat, strict: bool) -> Option<Rat> {
        let reaches = |v: Rat| if strict { v > y } else { v >= y };
        let count = 2 * self.bps.len() - self.transient_index();
        // first breakpoint whose right-limit reaches y
        let (mut lo, mut hi) = (0usize, count);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if reaches(self.virtual_bp(mid).right) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo == 0 {
            return Some(Rat::ZERO);
        }
        let prev = self.virtual_bp(lo - 1);
        let next_x = if lo < count {
            self.virtual_bp(lo).x
        } else {
            self.transient + Rat::int(2) * self.period
        };
        if prev.slope.is_positive() {
            let x = prev.x + (y - prev.right) / prev.slope;
            if x < next_x {
                return Some(x);
            }
        }
        let wrap_right = self.bps[self.transient_index()].right + Rat::int(2) * self.increment;
        (lo < count || reaches(wrap_right)).then_some(next_x)
    }

    /// Lower pseudo-inverse `f^↓(y) = inf {x | f(x) >= y}` as a curve.
    pub fn lower_pseudo_inverse(&self) -> Result<Curve> {
        if self.increment.is_zero() {
            return Err(Error::InverseDiverges);
        }
        let (d, c) = (self.period, self.increment);
        let y_transient = self.inverse_periodic_from().max(Rat::ZERO) + c;
        let y_end = y_transient + c;
        let x_end = self.transient + Rat::int(3) * d;
        debug_assert!(self.value_at(x_end) >= y_end);

        // monotone polyline of the completed graph, as (x, y) vertices
        let mut verts: Vec<(Rat, Rat)> = Vec::new();
        if self.bps[0].value.is_positive() {
            verts.push((Rat::ZERO, Rat::ZERO));
        }
        let bps = self.breakpoints_until(x_end);
        for (k, b) in bps.iter().enumerate() {
            if k > 0 {
                verts.push((b.x, bps[k - 1].seg_at(b.x)));
            }
            verts.push((b.x, b.value));
            verts.push((b.x, b.right));
        }
        let last = bps.last().expect("non-empty");
        if last.x < x_end {
            verts.push((x_end, last.seg_at(x_end)));
        }

        // group by level: (y, first x, last x)
        let mut groups: Vec<(Rat, Rat, Rat)> = Vec::new();
        for (x, y) in verts {
            match groups.last_mut() {
                Some(g) if g.0 == y => g.2 = x,
                _ => groups.push((y, x, x)),
            }
        }
        let mut out = Vec::with_capacity(groups.len());
        for (k, g) in groups.iter().enumerate() {
            if g.0 > y_end {
                break;
            }
            let slope = match groups.get(k + 1) {
                Some(n) => (n.1 - g.2) / (n.0 - g.0),
                None => Rat::ZERO,
            };
            out.push(Breakpoint::new(g.0, g.1, g.2, slope));
        }
        Ok(Curve::fold(out, y_transient, c, d))
    }

    /// `λ_1 ⊗ f`, i.e. `t ↦ inf_{0 <= s <= t} { s + f(t - s) }`.
    pub fn convolve_unit_rate(&self) -> Curve {
        let (t, d, c) = (self.transient, self.period, self.increment);
        let (new_t, new_c) = if c >= d {
            (t + d, d)
        } else {
            // running minimum of f(u) - u over [0, T] and over the first period
            let (before, first) = self.smoothing_minima();
            let gap = d - c;
            let k0 = (Rat::ONE + (first - before) / gap).ceil_int().max(1);
            (t + Rat::int(k0 + 1) * d, c)
        };
        let horizon = new_t + d;
        let bps = self.breakpoints_until(horizon);
        let mut out: Vec<Breakpoint> = Vec::with_capacity(bps.len() * 2);
        let mut running = bps[0].value;
        for (k, b) in bps.iter().enumerate() {
            if k > 0 {
                let left = bps[k - 1].seg_at(b.x);
                running = running.min(left - b.x);
            }
            let next_x = bps.get(k + 1).map_or(horizon, |n| n.x);
            let h_start = b.right - b.x;
            let sigma = b.slope - Rat::ONE;
            if sigma.is_negative() && next_x > b.x {
                let cross = b.x + (h_start - running) / (-sigma);
                if cross < next_x {
                    if cross > b.x {
                        out.push(Breakpoint::cont(b.x, b.x + running, Rat::ONE));
                    }
                    out.push(Breakpoint::cont(cross, cross + running, b.slope));
                    continue;
                }
            }
            out.push(Breakpoint::cont(b.x, b.x + running, Rat::ONE));
        }
        Curve::fold(out, new_t, d, new_c)
    }

    /// `(inf over [0, T], inf over (T, T + d])` of `f(u-) - u`.
    fn smoothing_minima(&self) -> (Rat, Rat) {
        let t = self.transient;
        let end = self.period_end();
        let bps: Vec<Breakpoint> = self.breakpoints_until(end).into_iter().filter(|b| b.x < end).collect();
        let mut before = bps[0].value;
        let mut first: Option<Rat> = None;
        for (k, b) in bps.iter().enumerate() {
            let left = if k > 0 { bps[k - 1].seg_at(b.x) - b.x } else { b.value };
            if b.x <= t {
                before = before.min(left);
            } else {
                first = Some(first.map_or(left, |m| m.min(left)));
            }
            if b.x >= t {
                let r = b.right - b.x;
                first = Some(first.map_or(r, |m| m.min(r)));
            }
        }
        let tail = bps.last().expect("non-empty").seg_at(end) - end;
        let first = first.map_or(tail, |m| m.min(tail));
        (before, first)
    }

    /// `t ↦ outer(inner(t))` for a continuous `inner`.
    pub fn compose(outer: &Curve, inner: &Curve) -> Result<Curve> {
        if let Some(x) = inner.first_jump() {
            return Err(Error::DiscontinuousInner(x));
        }
        let (inner, outer, period, increment, transient) = if inner.increment.is_zero() {
            (inner.clone(), outer.clone(), inner.period, Rat::ZERO, inner.transient)
        } else {
            let (inner, outer) = align_composition(inner, outer);
            let k = order::lcm_multiple(inner.increment, outer.period);
            let period = inner.period * k.0;
            let increment = outer.increment * k.1;
            let reach = inner.lower_inverse_at(outer.transient).expect("inner is unbounded");
            let transient = inner.transient.max(reach);
            (inner, outer, period, increment, transient)
        };
        let horizon = transient + period;
        let mut xs: Vec<Rat> = inner.breakpoints_until(horizon).into_iter().map(|b| b.x).collect();
        let y_lo = inner.value_at(Rat::ZERO);
        let y_hi = inner.value_at(horizon);
        for b in outer.unrolled() {
            if b.x > y_hi {
                break;
            }
            if b.x < y_lo {
                continue;
            }
            if let Some(t) = inner.lower_inverse_at(b.x) {
                xs.push(t);
            }
        }
        xs.push(transient);
        xs.sort();
        xs.dedup();
        let bps = xs
            .iter()
            .map(|&t| {
                let y = inner.value_at(t);
                let s_in = inner.slope_right(t);
                let (right, slope) = if s_in.is_positive() {
                    (outer.right_at(y), outer.slope_right(y) * s_in)
                } else {
                    (outer.value_at(y), Rat::ZERO)
                };
                Breakpoint::new(t, outer.value_at(y), right, slope)
            })
            .collect();
        Ok(Curve::fold(bps, transient, period, increment))
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Curve) -> Curve {
        let (a, b) = order::common_period_pair(self, other);
        let t = a.transient.max(b.transient);
        let horizon = t + a.period;
        let xs = order::merged_abscissae(&a, &b, horizon);
        let bps = xs
            .iter()
            .map(|&x| {
                Breakpoint::new(
                    x,
                    a.value_at(x) + b.value_at(x),
                    a.right_at(x) + b.right_at(x),
                    a.slope_right(x) + b.slope_right(x),
                )
            })
            .collect();
        Curve::fold(bps, t, a.period, a.increment + b.increment)
    }

    /// Pointwise maximum of two curves.
    pub fn max(&self, other: &Curve) -> Curve {
        let (mut a, mut b) = order::common_period_pair(self, other);
        if a.long_term_rate() < b.long_term_rate() {
            std::mem::swap(&mut a, &mut b);
        }
        let p = a.period;
        let t0 = a.transient.max(b.transient);
        let transient = if a.long_term_rate() == b.long_term_rate() {
            t0
        } else {
            // from some period on, the faster curve stays above
            let xs = order::merged_abscissae(&a, &b, t0 + p);
            let worst = xs
                .iter()
                .filter(|&&x| x >= t0)
                .flat_map(|&x| {
                    [
                        a.value_at(x) - b.value_at(x),
                        a.right_at(x) - b.right_at(x),
                        a.left_at(x) - b.left_at(x),
                    ]
                })
                .min()
                .expect("non-empty");
            if worst.is_negative() {
                let per_period = a.increment - b.increment;
                t0 + Rat::int((-worst / per_period).ceil_int()) * p
            } else {
                t0
            }
        };
        let horizon = transient + p;
        let mut xs = order::merged_abscissae(&a, &b, horizon);
        let mut crossings = Vec::new();
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let g0 = a.right_at(x0) - b.right_at(x0);
            let g1 = a.left_at(x1) - b.left_at(x1);
            if (g0.is_positive() && g1.is_negative()) || (g0.is_negative() && g1.is_positive()) {
                crossings.push(x0 + (x1 - x0) * g0 / (g0 - g1));
            }
        }
        xs.extend(crossings);
        xs.sort();
        xs.dedup();
        let bps = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let next = xs.get(k + 1).copied().unwrap_or(x + p);
                let mid = x.mid(next);
                let slope = if a.value_at(mid) >= b.value_at(mid) {
                    a.slope_right(x)
                } else {
                    b.slope_right(x)
                };
                Breakpoint::new(
                    x,
                    a.value_at(x).max(b.value_at(x)),
                    a.right_at(x).max(b.right_at(x)),
                    slope,
                )
            })
            .collect();
        Curve::fold(bps, transient, p, a.increment)
    }

    /// Same function described with period `k · d`.
    pub(crate) fn with_period_multiple(&self, k: i128) -> Curve {
        assert!(k >= 1);
        if k == 1 {
            return self.clone();
        }
        let period = self.period * Rat::int(k);
        let bps = self.breakpoints_until(self.transient + period);
        Curve {
            bps: bps.into_iter().filter(|b| b.x < self.transient + period).collect(),
            transient: self.transient,
            period,
            increment: self.increment * Rat::int(k),
        }
    }

    /// `⌈f / l⌉ · l`.
    pub fn packetize_ceil(&self, l: Rat) -> Curve {
        assert!(l.is_positive(), "packet length must be positive");
        let base = if self.increment.is_zero() {
            self.clone()
        } else if self.tail_is_linear() {
            self.with_period(l / self.long_term_rate())
        } else {
            let k = (self.increment / l).denom();
            self.with_period_multiple(k)
        };
        let ceil_l = |v: Rat| Rat::int((v / l).ceil_int()) * l;
        let horizon = base.period_end();
        let bps = base.breakpoints_until(horizon);
        let mut out = Vec::with_capacity(bps.len() * 2);
        for (k, b) in bps.iter().enumerate() {
            let next_x = bps.get(k + 1).map_or(horizon, |n| n.x);
            let right = if b.slope.is_positive() && (b.right / l).is_integer() {
                b.right + l
            } else {
                ceil_l(b.right)
            };
            out.push(Breakpoint::new(b.x, ceil_l(b.value), right, Rat::ZERO));
            if b.slope.is_positive() {
                // multiples of l crossed strictly inside the segment
                let end_val = b.seg_at(next_x);
                let mut m = (b.right / l).floor_int() + 1;
                while Rat::int(m) * l < end_val {
                    let level = Rat::int(m) * l;
                    let x = b.x + (level - b.right) / b.slope;
                    out.push(Breakpoint::new(x, level, level + l, Rat::ZERO));
                    m += 1;
                }
            }
        }
        Curve::fold(out, base.transient, base.period, base.increment)
    }
}

/// Picks periods for a composition so that one inner period maps onto a whole
/// number of outer periods with as little unrolling as possible.
fn align_composition(inner: &Curve, outer: &Curve) -> (Curve, Curve) {
    if inner.tail_is_linear() {
        let slope = inner.long_term_rate();
        (inner.with_period(outer.period / slope), outer.clone())
    } else if outer.tail_is_linear() {
        (inner.clone(), outer.with_period(inner.increment))
    } else {
        (inner.clone(), outer.clone())
    }
}

/// Pointwise maximum of a non-empty list of curves.
pub fn max_of(curves: &[Curve]) -> Result<Curve> {
    let (first, rest) = curves.split_first().ok_or(Error::EmptyList)?;
    Ok(rest.iter().fold(first.clone(), |acc, c| acc.max(c)))
}

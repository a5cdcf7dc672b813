//! Brute-force grid evaluations used to cross-check the closed forms.
//!
//! Every grid point is an exact rational, so "within one step" is a bracket
//! and not a float tolerance. Nothing here is fast.

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::rat::Rat;

/// Largest number of points a grid may hold.
pub const MAX_GRID_POINTS: usize = 1 << 20;

/// Points `0, step, 2 step, ...` up to and including `horizon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub step: Rat,
    pub horizon: Rat,
}

impl Grid {
    pub fn new(step: Rat, horizon: Rat) -> Result<Grid> {
        if !step.is_positive() || !horizon.is_positive() {
            return Err(Error::Precondition("grid step and horizon must be positive".into()));
        }
        let g = Grid { step, horizon };
        if g.len() > MAX_GRID_POINTS {
            return Err(Error::Precondition(format!(
                "grid of {} points exceeds the cap of {MAX_GRID_POINTS}",
                g.len()
            )));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        (self.horizon / self.step).floor_int() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> Rat {
        Rat::from(k) * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = Rat> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// `f` sampled at every grid point.
    pub fn sample(&self, f: &Curve) -> Vec<(Rat, Rat)> {
        self.points().map(|x| (x, f.value_at(x))).collect()
    }
}

/// `min_{0 <= k <= m} f((m - k) step) + g(k step)` at every grid point `m step`.
pub fn grid_convolution(f: &Curve, g: &Curve, grid: &Grid) -> Vec<(Rat, Rat)> {
    let fs: Vec<Rat> = grid.points().map(|x| f.value_at(x)).collect();
    let gs: Vec<Rat> = grid.points().map(|x| g.value_at(x)).collect();
    (0..grid.len())
        .map(|m| {
            let v = (0..=m).map(|k| fs[m - k] + gs[k]).min().expect("non-empty range");
            (grid.point(m), v)
        })
        .collect()
}

/// Leftmost grid point `x` with `f(x) >= y`, for each `y`; `None` when no
/// grid point reaches `y`. The exact `f^↓(y)` lies in `(x - step, x]`.
pub fn grid_pseudo_inverse(f: &Curve, grid: &Grid, ys: &[Rat]) -> Vec<Option<Rat>> {
    let fs: Vec<Rat> = grid.points().map(|x| f.value_at(x)).collect();
    ys.iter()
        .map(|&y| {
            let k = fs.partition_point(|&v| v < y);
            (k < fs.len()).then(|| grid.point(k))
        })
        .collect()
}

/// Grid estimate of `h(alpha, beta)`: for every grid instant `t` in the
/// first half of the grid, the smallest grid delay `d` with
/// `alpha(t+) <= beta(t + d)`; the maximum over `t`. Delays are rounded up
/// to the grid, instants are sampled, so the exact value lies within one
/// step of the estimate when the supremum is reached at (or right after) a
/// grid instant. An instant that the grid cannot serve means unbounded.
pub fn grid_hdev(alpha: &Curve, beta: &Curve, grid: &Grid) -> Result<Rat> {
    let n = grid.len();
    let bs: Vec<Rat> = grid.points().map(|x| beta.value_at(x)).collect();
    let mut best = Rat::ZERO;
    let mut u = 0;
    for k in 0..n.div_ceil(2) {
        let t = grid.point(k);
        let need = alpha.right_at(t);
        u = u.max(k);
        while u < n && bs[u] < need {
            u += 1;
        }
        if u == n {
            return Err(Error::Unbounded);
        }
        best = best.max(grid.point(u) - t);
    }
    Ok(best)
}

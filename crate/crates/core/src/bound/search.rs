//! One-dimensional minimization of `lambda -> objective(lambda)` on `(0, upper)`.
//!
//! A geometric grid locates a bracket around the smallest sample, then
//! golden-section search shrinks it. The objectives minimized here have the
//! form `(psi(lambda) + c) / lambda` with convex `psi`, `psi(0) = 0`, which
//! are quasi-convex on the positive axis.

use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 64;
pub const REL_TOL: f64 = 1e-10;
const GRID_DECADES: f64 = 12.0;
const MAX_WINDOW_SHIFTS: usize = 24;
const MAX_GOLDEN_ITERS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub argmin: f64,
    pub value: f64,
}

fn geometric_grid(lo: f64, hi: f64) -> Vec<f64> {
    let ratio = (hi / lo).powf(1.0 / (GRID_POINTS - 1) as f64);
    let mut grid = Vec::with_capacity(GRID_POINTS);
    let mut x = lo;
    for _ in 0..GRID_POINTS {
        grid.push(x);
        x *= ratio;
    }
    grid[GRID_POINTS - 1] = hi;
    grid
}

fn argmin_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Minimizes `f` over `(0, upper)`; `upper` may be `f64::INFINITY`.
pub fn minimize_positive<F: Fn(f64) -> f64>(f: F, upper: f64) -> Result<Minimum> {
    if upper.is_nan() || upper <= 0.0 {
        return Err(Error::NonConvergence(format!("empty search interval (0, {upper})")));
    }
    let span = 10f64.powf(GRID_DECADES);
    let (mut lo, mut hi) = if upper.is_finite() {
        let hi = upper * (1.0 - 1e-12);
        (hi / span, hi)
    } else {
        (1.0 / span.sqrt(), span.sqrt())
    };

    for _ in 0..MAX_WINDOW_SHIFTS {
        let grid = geometric_grid(lo, hi);
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        if values.iter().all(|v| v.is_infinite() || v.is_nan()) {
            return Err(Error::NonConvergence("objective is not finite anywhere on the grid".into()));
        }
        let i = argmin_index(&values);
        if i == 0 {
            // Minimum sits below the window; slide it toward zero.
            hi = grid[1];
            lo = hi / span;
            if lo < f64::MIN_POSITIVE * span {
                break;
            }
            continue;
        }
        if i == GRID_POINTS - 1 {
            if upper.is_finite() {
                return golden(&f, grid[i - 1], grid[i]);
            }
            lo = grid[i - 1];
            hi = lo * span;
            if !hi.is_finite() {
                break;
            }
            continue;
        }
        return golden(&f, grid[i - 1], grid[i + 1]);
    }
    Err(Error::NonConvergence("bracket never stabilized inside the search window".into()))
}

fn golden<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> Result<Minimum> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_GOLDEN_ITERS {
        if (b - a) <= REL_TOL * 0.5 * (a + b) {
            let candidates = [(c, fc), (d, fd), (0.5 * (a + b), f(0.5 * (a + b)))];
            let (argmin, value) = candidates
                .into_iter()
                .fold((f64::NAN, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
            return Ok(Minimum { argmin, value });
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::NonConvergence(format!("bracket [{a}, {b}] did not reach relative width {REL_TOL}")))
}

//! Brute-force minimiser of `g(b) = U(b) − w b + μ|b|` in one dimension.

use crate::diagnostics::ScalarConvex;

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const MAX_DOUBLINGS: usize = 200;

fn objective<S: ScalarConvex + ?Sized>(u: &S, w: f64, mu: f64, b: f64) -> f64 {
    u.value(b) - w * b + mu * b.abs()
}

fn golden<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    while hi - lo > tol {
        if gc <= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - INV_PHI * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + INV_PHI * (hi - lo);
            gd = g(d);
        }
        if c >= d {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Symmetric interval `[−s, s]` containing the minimiser, found by doubling
/// `s` until the subgradient points strictly outward at both ends. `None`
/// if the objective is unbounded below in the search range.
pub fn scalar_bounds<S: ScalarConvex + ?Sized>(u: &S, w: f64, mu: f64) -> Option<(f64, f64)> {
    let mut s = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let right = u.first(s) - w + mu;
        let left = u.first(-s) - w - mu;
        if right > 0.0 && left < 0.0 {
            return Some((-s, s));
        }
        s *= 2.0;
    }
    None
}

/// Minimiser of `U(b) − w b + μ|b|` over `[lo, hi]` to within `grid_tol`,
/// searching each sign region separately and the kink at zero. Ties go to
/// zero.
pub fn scalar_grid_solve<S: ScalarConvex + ?Sized>(u: &S, w: f64, mu: f64, bounds: (f64, f64), grid_tol: f64) -> f64 {
    let (lo, hi) = bounds;
    let g = |b: f64| objective(u, w, mu, b);
    let mut candidates = Vec::with_capacity(3);
    if lo < 0.0 {
        candidates.push(golden(g, lo, hi.min(0.0), grid_tol));
    }
    if hi > 0.0 {
        candidates.push(golden(g, lo.max(0.0), hi, grid_tol));
    }
    let (mut best, mut best_val) = if lo <= 0.0 && hi >= 0.0 {
        (0.0, g(0.0))
    } else {
        (f64::NAN, f64::INFINITY)
    };
    for c in candidates {
        let v = g(c);
        if v < best_val {
            best = c;
            best_val = v;
        }
    }
    best
}

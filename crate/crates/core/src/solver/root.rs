//! Safeguarded Newton iteration for monotone scalar equations.

use crate::error::{Error, Result};

/// Interval `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)` for a nondecreasing `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    lo: f64,
    hi: f64,
}

impl RootBracket {
    /// Checks the sign condition by evaluating `f` at both ends.
    pub fn new<F: FnMut(f64) -> f64>(lo: f64, hi: f64, mut f: F) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidConfig(format!("bracket [{lo}, {hi}] is empty")));
        }
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo <= 0.0 && fhi >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "f({lo}) = {flo}, f({hi}) = {fhi} do not bracket a root"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// For callers that have already verified the sign condition.
    pub(crate) fn new_unchecked(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

const MAX_ITER: usize = 1_000;

/// Root of a nondecreasing `f`, starting from the bracket midpoint.
///
/// `f` returns `(f(x), f′(x))`. See [`solve_root_from`].
pub fn solve_root<F: FnMut(f64) -> (f64, f64)>(bracket: RootBracket, f: F, root_tol: f64) -> f64 {
    let mid = 0.5 * (bracket.lo + bracket.hi);
    solve_root_from(bracket, mid, f, root_tol)
}

/// Newton steps that stay inside the bracket, bisection otherwise.
///
/// Stops when `|f(x)| < root_tol` and the Newton correction is below
/// `root_tol` (the correction is then applied once more), or when the
/// bracket is narrower than `root_tol`.
pub fn solve_root_from<F: FnMut(f64) -> (f64, f64)>(bracket: RootBracket, start: f64, mut f: F, root_tol: f64) -> f64 {
    let RootBracket { mut lo, mut hi } = bracket;
    let mut x = if start >= lo && start <= hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = fx.is_finite() && dfx.is_finite() && dfx > 0.0;
        if newton {
            let step = fx / dfx;
            if fx.abs() < root_tol && step.abs() < root_tol {
                let polished = x - step;
                return if polished >= lo && polished <= hi { polished } else { x };
            }
        }
        if hi - lo < root_tol {
            return 0.5 * (lo + hi);
        }
        let candidate = if newton { x - fx / dfx } else { f64::NAN };
        let next = if candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            return x;
        }
        x = next;
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(t: f64) -> f64 {
        1.0 / (1.0 + (-t).exp())
    }

    #[test]
    fn linear_root() {
        let b = RootBracket::new(0.0, 5.0, |x| x - 2.0).unwrap();
        let r = solve_root(b, |x| (x - 2.0, 1.0), 1e-12);
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_root_at_origin() {
        let b = RootBracket::new(-1.0, 1.0, |x| x.exp() - 1.0).unwrap();
        let r = solve_root(b, |x| (x.exp() - 1.0, x.exp()), 1e-12);
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn logistic_inverse() {
        let f = |x: f64| {
            let s = logistic(x);
            (s - 0.75, s * (1.0 - s))
        };
        let b = RootBracket::new(-10.0, 10.0, |x| f(x).0).unwrap();
        let r = solve_root(b, f, 1e-12);
        assert!((r - 3.0f64.ln()).abs() < 1e-10);
        assert!((r - 1.098_612).abs() < 1e-6);
    }

    #[test]
    fn bad_brackets_rejected() {
        assert!(RootBracket::new(1.0, 0.0, |x| x).is_err());
        assert!(RootBracket::new(1.0, 2.0, |x| x).is_err());
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // f′ reported as zero everywhere: pure bisection
        let b = RootBracket::new(-3.0, 7.0, |x| x.powi(3) - 1.0).unwrap();
        let r = solve_root(b, |x| (x.powi(3) - 1.0, 0.0), 1e-12);
        assert!((r - 1.0).abs() < 1e-11);
    }

    #[test]
    fn step_function_terminates() {
        // no root where |f| < tol; bracket must shrink
        let b = RootBracket::new(-1.0, 1.0, |x| if x < 0.3 { -1.0 } else { 1.0 }).unwrap();
        let r = solve_root(b, |x| (if x < 0.3 { -1.0 } else { 1.0 }, 0.0), 1e-12);
        assert!((r - 0.3).abs() < 1e-11);
    }

    #[test]
    fn infinite_values_are_bisected() {
        let f = |x: f64| {
            let v = (50.0 * x).exp() - 2.0;
            (v, 50.0 * (50.0 * x).exp())
        };
        let b = RootBracket::new_unchecked(-1.0, 100.0);
        let r = solve_root_from(b, 100.0, f, 1e-14);
        assert!((r - 2.0f64.ln() / 50.0).abs() < 1e-13);
    }
}

//! Reference solvers and synthetic problems for cross-checking the
//! coordinate descent engine.
//!
//! Nothing here calls into the solver. The only shared numerics are the
//! family functions `A`, `A′`, `A″`.

mod ista;
mod scalar;
mod synth;

pub use ista::{ista_solve, ista_solve_with, IstaReport};
pub use scalar::{scalar_bounds, scalar_grid_solve};
pub use synth::{generate, orthogonal_design, Synthetic, SyntheticSpec};

/// `sgn(w) max(|w| − μ, 0)`
pub fn soft_threshold(w: f64, mu: f64) -> f64 {
    if w > mu {
        w - mu
    } else if w < -mu {
        w + mu
    } else {
        0.0
    }
}

//! Coordinate descent engine.
//!
//! A fit runs one complete cycle over all coordinates, then alternates
//! between cycling over the active set (nonzero coefficients) until it
//! settles and another complete cycle, until a complete cycle moves no
//! coefficient by more than `eps`.
//!
//! Every rule shares the same skeleton: decide whether coordinate `j` is
//! active, and if so move it toward the root of `U_j′(β) − w_j + σ_j μ_j`.
//!
//! | rule     | threshold on                      | new value                         |
//! |----------|-----------------------------------|-----------------------------------|
//! | `Exact`  | `w_j − U_j′(0)`                   | root of the 1-D equation          |
//! | `Linear` | `w_j − U_j′(0)`                   | one Newton step from `β̂_j`        |
//! | `Glmnet` | `w_j − U_j′(β̂_j) + U_j″(β̂_j)β̂_j` | one Newton step from `β̂_j`        |

mod root;

pub use root::{solve_root, solve_root_from, RootBracket};

use crate::error::{Error, Result};
use crate::family::{Coordinate, Expansion, Family, PredictorCache};
use crate::model::{score, smooth_gradient, Dataset, FitConfig, FitResult, PenaltySpec, UpdateRule};

/// Cap on geometric bracket expansions before a coordinate is declared
/// divergent.
pub const MAX_BRACKET_DOUBLINGS: usize = 200;

/// Relative slack under which `|d| − μ` counts as a tie (and so as zero).
/// It absorbs rounding in `w_j − w_{0,j}` and the residual error of the
/// other coordinates (the intercept in particular), so that boundary
/// coefficients come out exactly zero rather than `±1e-12`.
pub const THRESHOLD_RTOL: f64 = 1e-9;

const MAX_STEP_HALVINGS: usize = 60;

#[inline]
fn exceeds_threshold(d: f64, mu: f64, scale: f64) -> bool {
    d.abs() - mu > THRESHOLD_RTOL * scale
}

/// `|w_j − w_{0,j}| > μ_j`, the exact activity test.
pub fn exact_threshold(w_j: f64, w0: f64, mu: f64) -> bool {
    exceeds_threshold(w_j - w0, mu, mu.max(w_j.abs()).max(w0.abs()))
}

/// `|w_j − w̃_{0,j}| > μ_j` with `w̃_{0,j} = U_j′(b) − U_j″(b)·b`.
pub fn approx_threshold(w_j: f64, u_first: f64, u_second: f64, b: f64, mu: f64) -> bool {
    let w0 = u_first - u_second * b;
    exceeds_threshold(w_j - w0, mu, mu.max(w_j.abs()).max(w0.abs()))
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn checked(v: f64, what: &str, j: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} for coordinate {j}")))
    }
}

/// What happened in one coordinate update.
#[derive(Debug, Clone, Copy)]
pub struct UpdateRecord<'a> {
    pub coordinate: usize,
    pub old: f64,
    pub new: f64,
    /// Exact-threshold decision; always set for the exact and linear rules.
    pub exact_decision: Option<bool>,
    /// Linearised-threshold decision; always set for the glmnet rule.
    pub approx_decision: Option<bool>,
    /// Coefficients after the update.
    pub beta: &'a [f64],
}

/// Hook into every coordinate update of a fit.
pub trait FitObserver {
    /// When true, the engine evaluates both threshold decisions on every
    /// update (at the cost of an extra pass over the samples).
    fn wants_both_thresholds(&self) -> bool {
        false
    }

    fn on_update(&mut self, record: &UpdateRecord<'_>);
}

impl FitObserver for () {
    fn on_update(&mut self, _: &UpdateRecord<'_>) {}
}

/// Adapts a closure into a [`FitObserver`].
pub struct FnObserver<F>(pub F);

impl<F: FnMut(&UpdateRecord<'_>)> FitObserver for FnObserver<F> {
    fn on_update(&mut self, record: &UpdateRecord<'_>) {
        (self.0)(record)
    }
}

/// Mutable state of one fit.
#[derive(Debug, Clone)]
pub struct FitState {
    beta: Vec<f64>,
    cache: PredictorCache,
    active: Vec<bool>,
    last_cycle_max_delta: f64,
    outer_cycles: usize,
    active_cycles: usize,
    coordinate_updates: usize,
}

impl FitState {
    pub fn new(data: &Dataset, beta: &[f64]) -> Result<Self> {
        if beta.len() != data.p() {
            return Err(Error::Dimension(format!(
                "initial beta has {} entries, p = {}",
                beta.len(),
                data.p()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("initial beta".into()));
        }
        Ok(Self {
            beta: beta.to_vec(),
            cache: PredictorCache::new(data, beta),
            active: beta.iter().map(|&b| b != 0.0).collect(),
            last_cycle_max_delta: f64::INFINITY,
            outer_cycles: 0,
            active_cycles: 0,
            coordinate_updates: 0,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn cache(&self) -> &PredictorCache {
        &self.cache
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.active[j]
    }

    pub fn last_cycle_max_delta(&self) -> f64 {
        self.last_cycle_max_delta
    }

    pub fn coordinate_updates(&self) -> usize {
        self.coordinate_updates
    }
}

/// Borrowed problem definition shared by all updates of a fit.
#[derive(Clone, Copy)]
struct Problem<'a> {
    data: &'a Dataset,
    family: Family,
    penalty: &'a PenaltySpec,
    root_tol: f64,
}

fn exact_root(view: &Coordinate<'_>, j: usize, target: f64, sigma: f64, tol: f64) -> Result<f64> {
    let start = view.current();
    let f = |b: f64| -> Result<f64> {
        let v = view.u_prime(b) - target;
        if v.is_nan() {
            Err(Error::NonFinite(format!("U_j' during bracketing of coordinate {j}")))
        } else {
            Ok(v)
        }
    };
    let s = start.abs().max(1.0);
    let (mut lo, mut hi) = (start - s, start + s);
    // f(0) has sign −σ, so zero is always a valid end on the σ side
    if sigma > 0.0 {
        lo = lo.max(0.0);
        if hi <= lo {
            hi = lo + s;
        }
    } else {
        hi = hi.min(0.0);
        if lo >= hi {
            lo = hi - s;
        }
    }
    let mut step = s;
    let mut doublings = 0;
    // strict signs: a saturated A′ (logistic far out) gives f = 0 exactly
    // without a true root, which must count as divergence
    while f(lo)? >= 0.0 {
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::Divergence {
                coordinate: j,
                doublings,
            });
        }
        hi = lo;
        lo -= step;
        step *= 2.0;
        doublings += 1;
    }
    while f(hi)? <= 0.0 {
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::Divergence {
                coordinate: j,
                doublings,
            });
        }
        lo = hi;
        hi += step;
        step *= 2.0;
        doublings += 1;
    }
    let bracket = RootBracket::new_unchecked(lo, hi);
    let root = solve_root_from(
        bracket,
        start.clamp(lo, hi),
        |b| {
            let (d1, d2) = view.derivatives_floored(b);
            (d1 - target, d2)
        },
        tol,
    );
    checked(root, "root", j)
}

/// Newton step toward `U_j′(β) = target`, halved while it increases the
/// penalised 1-D objective.
fn guarded_newton(
    view: &Coordinate<'_>,
    family: Family,
    w_j: f64,
    mu_j: f64,
    at_current: &Expansion,
    target: f64,
) -> f64 {
    let old = view.current();
    let mut step = (target - at_current.first) / at_current.second_floored;
    // quadratic U_j: the step lands on the minimiser
    if family == Family::Gaussian {
        return old + step;
    }
    let g_old = at_current.value - w_j * old + mu_j * old.abs();
    let slack = 1e-13 * (1.0 + g_old.abs());
    for _ in 0..MAX_STEP_HALVINGS {
        let cand = old + step;
        let g = view.value(cand) - w_j * cand + mu_j * cand.abs();
        if g.is_finite() && g <= g_old + slack {
            return cand;
        }
        step *= 0.5;
    }
    old
}

fn update_coordinate<O: FitObserver + ?Sized>(
    state: &mut FitState,
    prob: Problem<'_>,
    rule: UpdateRule,
    j: usize,
    observer: &mut O,
) -> Result<f64> {
    let old = state.beta[j];
    let w_j = prob.data.w()[j];
    let mu_j = prob.penalty.mu()[j];
    let view = Coordinate::new(prob.data, prob.family, state.cache.eta(), j, old, prob.penalty.lambda());
    let both = observer.wants_both_thresholds();

    let (new, exact_decision, approx_decision) = match rule {
        UpdateRule::Exact => {
            let w0 = checked(view.u_prime(0.0), "w0", j)?;
            let active = exact_threshold(w_j, w0, mu_j);
            let approx = if both {
                let e = view.expansion(old);
                Some(approx_threshold(w_j, e.first, e.second, old, mu_j))
            } else {
                None
            };
            let new = if active {
                let sigma = sign(w_j - w0);
                exact_root(&view, j, w_j - sigma * mu_j, sigma, prob.root_tol)?
            } else {
                0.0
            };
            (new, Some(active), approx)
        }
        UpdateRule::Linear => {
            let e = view.expansion(old);
            checked(e.value, "U_j", j)?;
            checked(e.first, "U_j'", j)?;
            checked(e.second, "U_j''", j)?;
            let w0 = if old == 0.0 {
                e.first
            } else {
                checked(view.u_prime(0.0), "w0", j)?
            };
            let active = exact_threshold(w_j, w0, mu_j);
            let approx = both.then(|| approx_threshold(w_j, e.first, e.second, old, mu_j));
            let new = if active {
                let sigma = sign(w_j - w0);
                let target = w_j - sigma * mu_j;
                guarded_newton(&view, prob.family, w_j, mu_j, &e, target)
            } else {
                0.0
            };
            (new, Some(active), approx)
        }
        UpdateRule::Glmnet => {
            let (first, second) = view.derivatives_floored(old);
            checked(first, "U_j'", j)?;
            let raw_second = checked(view.u_second(old), "U_j''", j)?;
            let z = w_j - first + raw_second * old;
            let active = approx_threshold(w_j, first, raw_second, old, mu_j);
            let exact = if both {
                let w0 = checked(view.u_prime(0.0), "w0", j)?;
                Some(exact_threshold(w_j, w0, mu_j))
            } else {
                None
            };
            let new = if active {
                old + (w_j - first - sign(z) * mu_j) / second
            } else {
                0.0
            };
            (new, exact, Some(active))
        }
    };
    let new = checked(new, "updated coefficient", j)?;

    let delta = new - old;
    state.beta[j] = new;
    state.active[j] = new != 0.0;
    state.cache.shift(prob.data, &state.beta, j, delta);
    state.coordinate_updates += 1;
    observer.on_update(&UpdateRecord {
        coordinate: j,
        old,
        new,
        exact_decision,
        approx_decision,
        beta: &state.beta,
    });
    Ok(delta)
}

fn coordinate_update_with(
    state: &mut FitState,
    data: &Dataset,
    family: Family,
    penalty: &PenaltySpec,
    config: &FitConfig,
    rule: UpdateRule,
    j: usize,
) -> Result<f64> {
    if j >= data.p() || state.beta.len() != data.p() || penalty.p() != data.p() {
        return Err(Error::Dimension(format!(
            "coordinate {j} out of range for p = {}",
            data.p()
        )));
    }
    let prob = Problem {
        data,
        family,
        penalty,
        root_tol: config.root_tol,
    };
    update_coordinate(state, prob, rule, j, &mut ())
}

/// Exact generalised soft-threshold update of coordinate `j`. Returns the
/// coefficient change.
pub fn coordinate_update_exact(
    state: &mut FitState,
    data: &Dataset,
    family: Family,
    penalty: &PenaltySpec,
    config: &FitConfig,
    j: usize,
) -> Result<f64> {
    coordinate_update_with(state, data, family, penalty, config, UpdateRule::Exact, j)
}

/// Exact threshold, then one (descent-guarded) Newton step.
pub fn coordinate_update_linear(
    state: &mut FitState,
    data: &Dataset,
    family: Family,
    penalty: &PenaltySpec,
    config: &FitConfig,
    j: usize,
) -> Result<f64> {
    coordinate_update_with(state, data, family, penalty, config, UpdateRule::Linear, j)
}

/// Linearised threshold and Newton step, as in the standard quadratic
/// approximation.
pub fn coordinate_update_glmnet(
    state: &mut FitState,
    data: &Dataset,
    family: Family,
    penalty: &PenaltySpec,
    config: &FitConfig,
    j: usize,
) -> Result<f64> {
    coordinate_update_with(state, data, family, penalty, config, UpdateRule::Glmnet, j)
}

fn complete_cycle<O: FitObserver + ?Sized>(
    state: &mut FitState,
    prob: Problem<'_>,
    rule: UpdateRule,
    observer: &mut O,
) -> Result<f64> {
    let mut max_delta: f64 = 0.0;
    for j in 0..prob.data.p() {
        let d = update_coordinate(state, prob, rule, j, observer)?;
        max_delta = max_delta.max(d.abs());
    }
    state.outer_cycles += 1;
    state.last_cycle_max_delta = max_delta;
    Ok(max_delta)
}

fn active_cycle<O: FitObserver + ?Sized>(
    state: &mut FitState,
    prob: Problem<'_>,
    rule: UpdateRule,
    observer: &mut O,
) -> Result<f64> {
    let mut max_delta: f64 = 0.0;
    for j in 0..prob.data.p() {
        if state.active[j] {
            let d = update_coordinate(state, prob, rule, j, observer)?;
            max_delta = max_delta.max(d.abs());
        }
    }
    state.active_cycles += 1;
    Ok(max_delta)
}

/// Penalised fit from `beta_init` (zeros for a cold start).
pub fn fit(
    data: &Dataset,
    family: Family,
    penalty: &PenaltySpec,
    config: &FitConfig,
    beta_init: &[f64],
) -> Result<FitResult> {
    fit_observed(data, family, penalty, config, beta_init, &mut ())
}

/// [`fit`] with a hook called after every coordinate update.
pub fn fit_observed<O: FitObserver + ?Sized>(
    data: &Dataset,
    family: Family,
    penalty: &PenaltySpec,
    config: &FitConfig,
    beta_init: &[f64],
    observer: &mut O,
) -> Result<FitResult> {
    config.validate()?;
    if penalty.p() != data.p() {
        return Err(Error::Dimension(format!(
            "penalty has {} entries, p = {}",
            penalty.p(),
            data.p()
        )));
    }
    let mut state = FitState::new(data, beta_init)?;
    let prob = Problem {
        data,
        family,
        penalty,
        root_tol: config.root_tol,
    };
    let rule = config.update_rule;

    let mut converged = complete_cycle(&mut state, prob, rule, observer)? < config.eps;
    while !converged && state.outer_cycles < config.max_outer_cycles {
        let mut inner_settled = true;
        let mut inner = 0;
        while state.active.iter().any(|&a| a) {
            let d = active_cycle(&mut state, prob, rule, observer)?;
            inner += 1;
            if d < config.eps {
                break;
            }
            if inner >= config.max_active_cycles {
                inner_settled = false;
                break;
            }
        }
        converged = complete_cycle(&mut state, prob, rule, observer)? < config.eps && inner_settled;
    }

    let objective = score(data, family, penalty, &state.beta)?;
    let dual_u = smooth_gradient(data, family, penalty.lambda(), &state.beta);
    Ok(FitResult {
        objective,
        dual_u,
        outer_cycles: state.outer_cycles,
        active_cycles: state.active_cycles,
        coordinate_updates: state.coordinate_updates,
        last_max_delta: state.last_cycle_max_delta,
        converged,
        beta: state.beta,
    })
}

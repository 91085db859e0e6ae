//! Exponential-family kernels and single-coordinate derivatives.
//!
//! A family is defined by its log-partition function `A(η)`; the mean is
//! `A′(η)` and the variance function `A″(η)`. For coordinate `j`, with all
//! other coefficients held at their current values,
//!
//! ```text
//! U_j′(b)  = (1/n) Σ_i x_ij A′(η_i + x_ij (b − β̂_j)) + 2λ b
//! U_j″(b)  = (1/n) Σ_i x_ij² A″(η_i + x_ij (b − β̂_j)) + 2λ
//! ```
//!
//! where `η` is the cached linear predictor at `β̂` and the `λ` terms are
//! dropped for the intercept.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::sum::{pairwise_sum_by, pairwise_sums_by};

/// Lower bound applied to `A″` when it is used as a Newton denominator.
pub const CURVATURE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `A(η) = η²/2`
    Gaussian,
    /// `A(η) = log(1 + e^η)`
    Binomial,
    /// `A(η) = e^η`
    Poisson,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gaussian, Family::Binomial, Family::Poisson];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
            Family::Poisson => "poisson",
        }
    }

    /// Log-partition function.
    #[inline]
    pub fn a(self, eta: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * eta * eta,
            // max(η,0) + log1p(e^{−|η|}) never overflows
            Family::Binomial => eta.max(0.0) + (-eta.abs()).exp().ln_1p(),
            Family::Poisson => eta.exp(),
        }
    }

    /// Mean function `A′(η)`.
    #[inline]
    pub fn a1(self, eta: f64) -> f64 {
        match self {
            Family::Gaussian => eta,
            Family::Binomial => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
            Family::Poisson => eta.exp(),
        }
    }

    /// Variance function `A″(η)`.
    #[inline]
    pub fn a2(self, eta: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Binomial => {
                let e = (-eta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Family::Poisson => eta.exp(),
        }
    }

    /// `(A′(η), A″(η))` sharing one exponential. Bit-identical to calling
    /// [`Family::a1`] and [`Family::a2`].
    #[inline]
    pub fn a1_a2(self, eta: f64) -> (f64, f64) {
        match self {
            Family::Gaussian => (eta, 1.0),
            Family::Binomial => {
                let e = (-eta.abs()).exp();
                let mean = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                (mean, e / ((1.0 + e) * (1.0 + e)))
            }
            Family::Poisson => {
                let e = eta.exp();
                (e, e)
            }
        }
    }

    /// `(A(η), A′(η), A″(η))` sharing one exponential.
    #[inline]
    pub fn a_a1_a2(self, eta: f64) -> (f64, f64, f64) {
        match self {
            Family::Gaussian => (0.5 * eta * eta, eta, 1.0),
            Family::Binomial => {
                let e = (-eta.abs()).exp();
                let mean = if eta >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                (eta.max(0.0) + e.ln_1p(), mean, e / ((1.0 + e) * (1.0 + e)))
            }
            Family::Poisson => {
                let e = eta.exp();
                (e, e, e)
            }
        }
    }

    /// `A″` bounded below by [`CURVATURE_FLOOR`]; only for denominators.
    #[inline]
    pub fn a2_floored(self, eta: f64) -> f64 {
        self.a2(eta).max(CURVATURE_FLOOR)
    }

    /// Checks that every response lies in the family's support.
    pub fn check_response(self, y: &[f64]) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            let ok = match self {
                Family::Gaussian => v.is_finite(),
                Family::Binomial => v == 0.0 || v == 1.0,
                Family::Poisson => v >= 0.0 && v.fract() == 0.0 && v.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidData(format!(
                    "response {v} at sample {i} is outside the {} support",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "binomial" | "logistic" => Ok(Family::Binomial),
            "poisson" => Ok(Family::Poisson),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

/// Cached linear predictors `η = Xβ̂`, updated incrementally and recomputed
/// from scratch every `refresh_period` shifts.
#[derive(Debug, Clone)]
pub struct PredictorCache {
    eta: Vec<f64>,
    refresh_counter: usize,
    refresh_period: usize,
}

impl PredictorCache {
    pub fn new(data: &Dataset, beta: &[f64]) -> Self {
        Self {
            eta: data.linear_predictor(beta),
            refresh_counter: 0,
            refresh_period: 2 * data.p(),
        }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn refresh_counter(&self) -> usize {
        self.refresh_counter
    }

    pub fn refresh_period(&self) -> usize {
        self.refresh_period
    }

    pub fn refresh(&mut self, data: &Dataset, beta: &[f64]) {
        self.eta = data.linear_predictor(beta);
        self.refresh_counter = 0;
    }

    /// Applies `η += x_j · delta`. `beta` must already hold the new value of
    /// coordinate `j`; it is used when the periodic refresh fires.
    pub fn shift(&mut self, data: &Dataset, beta: &[f64], j: usize, delta: f64) {
        if delta != 0.0 {
            for (e, &x) in self.eta.iter_mut().zip(data.column(j)) {
                *e += x * delta;
            }
        }
        self.refresh_counter += 1;
        if self.refresh_counter >= self.refresh_period {
            self.refresh(data, beta);
        }
    }
}

/// The one-dimensional restriction `U_j` of the smooth part around the
/// current coefficient vector.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate<'a> {
    family: Family,
    column: &'a [f64],
    eta: &'a [f64],
    current: f64,
    ridge: f64,
    inv_n: f64,
}

impl<'a> Coordinate<'a> {
    /// `current` is the value of `β̂_j` that `eta` was computed with.
    pub fn new(data: &'a Dataset, family: Family, eta: &'a [f64], j: usize, current: f64, lambda: f64) -> Self {
        Self {
            family,
            column: data.column(j),
            eta,
            current,
            ridge: if j == 0 { 0.0 } else { lambda },
            inv_n: 1.0 / data.n() as f64,
        }
    }

    #[inline]
    fn eta_at(&self, i: usize, b: f64) -> f64 {
        self.eta[i] + self.column[i] * (b - self.current)
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    /// `U_j(b)` up to terms that do not depend on `b`.
    pub fn value(&self, b: f64) -> f64 {
        let s = pairwise_sum_by(self.eta.len(), |i| self.family.a(self.eta_at(i, b)));
        s * self.inv_n + self.ridge * b * b
    }

    pub fn u_prime(&self, b: f64) -> f64 {
        let s = pairwise_sum_by(self.eta.len(), |i| self.column[i] * self.family.a1(self.eta_at(i, b)));
        s * self.inv_n + 2.0 * self.ridge * b
    }

    pub fn u_second(&self, b: f64) -> f64 {
        let s = pairwise_sum_by(self.eta.len(), |i| {
            let x = self.column[i];
            x * x * self.family.a2(self.eta_at(i, b))
        });
        s * self.inv_n + 2.0 * self.ridge
    }

    /// `(U_j′(b), U_j″(b))` in one pass, with `A″` floored.
    pub fn derivatives_floored(&self, b: f64) -> (f64, f64) {
        let [s1, s2] = pairwise_sums_by(self.eta.len(), |i| {
            let x = self.column[i];
            let (a1, a2) = self.family.a1_a2(self.eta_at(i, b));
            [x * a1, x * x * a2.max(CURVATURE_FLOOR)]
        });
        (
            s1 * self.inv_n + 2.0 * self.ridge * b,
            s2 * self.inv_n + 2.0 * self.ridge,
        )
    }

    /// `(U_j′(b), U_j″(b), U_j″_floored(b), U_j(b))` in one pass.
    pub fn expansion(&self, b: f64) -> Expansion {
        let [s0, s1, s2, s2f] = pairwise_sums_by(self.eta.len(), |i| {
            let x = self.column[i];
            let (a, a1, a2) = self.family.a_a1_a2(self.eta_at(i, b));
            [a, x * a1, x * x * a2, x * x * a2.max(CURVATURE_FLOOR)]
        });
        Expansion {
            value: s0 * self.inv_n + self.ridge * b * b,
            first: s1 * self.inv_n + 2.0 * self.ridge * b,
            second: s2 * self.inv_n + 2.0 * self.ridge,
            second_floored: s2f * self.inv_n + 2.0 * self.ridge,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Expansion {
    pub value: f64,
    pub first: f64,
    pub second: f64,
    pub second_floored: f64,
}

fn finite(v: f64, what: &str, j: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} for coordinate {j}")))
    }
}

/// `U_j′(beta_j)` with every other coordinate at the cached state.
/// `beta` is the coefficient vector the cache was built from.
pub fn u_prime_j(
    data: &Dataset,
    family: Family,
    cache: &PredictorCache,
    beta: &[f64],
    j: usize,
    beta_j: f64,
    lambda: f64,
) -> Result<f64> {
    let view = Coordinate::new(data, family, cache.eta(), j, beta[j], lambda);
    finite(view.u_prime(beta_j), "U_j'", j)
}

/// `U_j″(beta_j)`; see [`u_prime_j`].
pub fn u_second_j(
    data: &Dataset,
    family: Family,
    cache: &PredictorCache,
    beta: &[f64],
    j: usize,
    beta_j: f64,
    lambda: f64,
) -> Result<f64> {
    let view = Coordinate::new(data, family, cache.eta(), j, beta[j], lambda);
    finite(view.u_second(beta_j), "U_j''", j)
}

/// `w_{0,j} = U_j′(0)`. The ridge term vanishes at zero.
pub fn w0_j(data: &Dataset, family: Family, cache: &PredictorCache, beta: &[f64], j: usize) -> Result<f64> {
    u_prime_j(data, family, cache, beta, j, 0.0, 0.0)
}

//! Problem definition: data, penalties, solver configuration and the
//! penalised objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::sum::{pairwise_sum, pairwise_sum_by};

/// Design matrix with an implicit intercept column, response vector and the
/// moment vector `w = (1/n) Σ_i y_i x_i`.
///
/// The matrix is stored column-major; column 0 is identically `1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from predictor columns (intercept excluded).
    pub fn from_predictor_columns(columns: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        let p = columns.len() + 1;
        let mut x = Vec::with_capacity(n * p);
        x.extend(std::iter::repeat_n(1.0, n));
        for (k, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "predictor column {} has {} entries, response has {n}",
                    k + 1,
                    col.len()
                )));
            }
            x.extend_from_slice(col);
        }
        Self::from_design(n, p, x, y)
    }

    /// Builds a dataset from predictor rows (intercept excluded).
    pub fn from_predictor_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::Dimension(format!(
                "{} predictor rows but {} responses",
                rows.len(),
                y.len()
            )));
        }
        let k = rows.first().map_or(0, Vec::len);
        let mut cols = vec![Vec::with_capacity(rows.len()); k];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension(format!(
                    "row {i} has {} predictors, expected {k}",
                    row.len()
                )));
            }
            for (c, &v) in cols.iter_mut().zip(row) {
                c.push(v);
            }
        }
        Self::from_predictor_columns(&cols, y)
    }

    /// Builds a dataset from a full column-major `n × p` design whose first
    /// column must be all ones.
    pub fn from_design(n: usize, p: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Dimension("need n >= 1 and p >= 1".into()));
        }
        if x.len() != n * p || y.len() != n {
            return Err(Error::Dimension(format!(
                "design has {} entries and response {} for n={n}, p={p}",
                x.len(),
                y.len()
            )));
        }
        if x[..n].iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidData("column 0 must be the intercept (all 1.0)".into()));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite predictor at sample {}, column {}",
                pos % n,
                pos / n
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at sample {i}")));
        }
        let inv_n = 1.0 / n as f64;
        let w = (0..p)
            .map(|j| {
                let col = &x[j * n..(j + 1) * n];
                pairwise_sum_by(n, |i| y[i] * col[i]) * inv_n
            })
            .collect();
        Ok(Self { n, p, x, y, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[j * self.n + i]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Column-major design including the intercept column.
    pub fn design(&self) -> &[f64] {
        &self.x
    }

    /// `η_i = x_iᵀβ` for every sample.
    pub fn linear_predictor(&self, beta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(beta.len(), self.p);
        (0..self.n)
            .map(|i| pairwise_sum_by(self.p, |j| self.get(i, j) * beta[j]))
            .collect()
    }

    /// Mean of each column.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.p)
            .map(|j| pairwise_sum(self.column(j)) / self.n as f64)
            .collect()
    }
}

/// Per-coefficient ℓ1 weights `μ` and the global ℓ2 strength `λ`.
///
/// The intercept (index 0) carries neither penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    mu: Vec<f64>,
    lambda: f64,
}

impl PenaltySpec {
    pub fn new(mu: Vec<f64>, lambda: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidPenalty("mu must have length p >= 1".into()));
        }
        if mu[0] != 0.0 {
            return Err(Error::InvalidPenalty(
                "intercept must be unpenalised (mu[0] = 0)".into(),
            ));
        }
        if let Some(j) = mu.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidPenalty(format!(
                "mu[{j}] = {} is not a finite non-negative value",
                mu[j]
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidPenalty(format!(
                "lambda = {lambda} must be finite and >= 0"
            )));
        }
        Ok(Self { mu, lambda })
    }

    /// Same `μ` on every coefficient except the intercept.
    pub fn uniform(p: usize, mu: f64, lambda: f64) -> Result<Self> {
        let mut v = vec![mu; p];
        if let Some(first) = v.first_mut() {
            *first = 0.0;
        }
        Self::new(v, lambda)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }
}

/// Coordinate update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// Exact generalised soft-threshold with a 1-D root solve.
    Exact,
    /// One Newton step from the current value, exact threshold.
    #[default]
    Linear,
    /// One Newton step with the linearised threshold `w_j − U_j′ + U_j″ β̂_j`.
    Glmnet,
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateRule::Exact => "exact",
            UpdateRule::Linear => "linear",
            UpdateRule::Glmnet => "glmnet",
        })
    }
}

impl FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(UpdateRule::Exact),
            "linear" | "linear-approx" => Ok(UpdateRule::Linear),
            "glmnet" | "glmnet-style" => Ok(UpdateRule::Glmnet),
            other => Err(Error::InvalidConfig(format!("unknown update rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Convergence threshold on the largest coefficient change in a cycle.
    pub eps: f64,
    pub max_outer_cycles: usize,
    /// Cap on consecutive active-set cycles between two complete cycles.
    pub max_active_cycles: usize,
    pub update_rule: UpdateRule,
    pub root_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_outer_cycles: 10_000,
            max_active_cycles: 100_000,
            update_rule: UpdateRule::Linear,
            root_tol: 1e-10,
        }
    }
}

impl FitConfig {
    /// Config with the given `eps` and `root_tol = eps / 100`.
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            root_tol: eps / 100.0,
            ..Self::default()
        }
    }

    pub fn rule(mut self, rule: UpdateRule) -> Self {
        self.update_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("eps = {} must be > 0", self.eps)));
        }
        if !(self.root_tol > 0.0 && self.root_tol <= self.eps / 10.0) {
            return Err(Error::InvalidConfig(format!(
                "root_tol = {} must lie in (0, eps/10 = {}]",
                self.root_tol,
                self.eps / 10.0
            )));
        }
        if self.max_outer_cycles == 0 || self.max_active_cycles == 0 {
            return Err(Error::InvalidConfig("cycle caps must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one penalised fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    /// `H(β̂)` recomputed from scratch.
    pub objective: f64,
    /// Gradient of `U + λ‖β‖²` at `β̂`.
    pub dual_u: Vec<f64>,
    /// Complete cycles run.
    pub outer_cycles: usize,
    pub active_cycles: usize,
    pub coordinate_updates: usize,
    /// Largest coefficient change in the final complete cycle.
    pub last_max_delta: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.beta.iter().copied().enumerate().filter(|(_, b)| *b != 0.0)
    }
}

fn check_lengths(data: &Dataset, penalty: &PenaltySpec, beta: &[f64]) -> Result<()> {
    if penalty.p() != data.p() || beta.len() != data.p() {
        return Err(Error::Dimension(format!(
            "p = {} but penalty has {} and beta has {} entries",
            data.p(),
            penalty.p(),
            beta.len()
        )));
    }
    Ok(())
}

/// `U(β) = (1/n) Σ_i A(x_iᵀβ)`, without penalties.
pub fn smooth_loss(data: &Dataset, family: Family, beta: &[f64]) -> f64 {
    let eta = data.linear_predictor(beta);
    pairwise_sum_by(eta.len(), |i| family.a(eta[i])) / data.n() as f64
}

/// `U(β) − wᵀβ`: the unpenalised minus log-likelihood (up to constants).
pub fn unpenalised_objective(data: &Dataset, family: Family, beta: &[f64]) -> Result<f64> {
    if beta.len() != data.p() {
        return Err(Error::Dimension(format!(
            "beta has {} entries, p = {}",
            beta.len(),
            data.p()
        )));
    }
    let u = smooth_loss(data, family, beta);
    let wb = pairwise_sum_by(beta.len(), |j| data.w()[j] * beta[j]);
    let h = u - wb;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::NonFinite("objective (beta numerically invalid)".into()))
    }
}

/// Penalised objective `U(β) − wᵀβ + λ Σ_{j≥1} β_j² + Σ_j μ_j |β_j|`.
pub fn score(data: &Dataset, family: Family, penalty: &PenaltySpec, beta: &[f64]) -> Result<f64> {
    check_lengths(data, penalty, beta)?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite("score: beta has non-finite entries".into()));
    }
    let lambda = penalty.lambda();
    let mu = penalty.mu();
    let u = smooth_loss(data, family, beta);
    let rest = pairwise_sum_by(beta.len(), |j| {
        let b = beta[j];
        let ridge = if j == 0 { 0.0 } else { lambda * b * b };
        ridge + mu[j] * b.abs() - data.w()[j] * b
    });
    let h = u + rest;
    if h.is_finite() {
        Ok(h)
    } else {
        Err(Error::NonFinite("score (beta numerically invalid)".into()))
    }
}

/// Gradient of `U(β) + λ Σ_{j≥1} β_j²`.
pub fn smooth_gradient(data: &Dataset, family: Family, lambda: f64, beta: &[f64]) -> Vec<f64> {
    let eta = data.linear_predictor(beta);
    let mean: Vec<f64> = eta.iter().map(|&e| family.a1(e)).collect();
    let inv_n = 1.0 / data.n() as f64;
    (0..data.p())
        .map(|j| {
            let col = data.column(j);
            let g = pairwise_sum_by(data.n(), |i| col[i] * mean[i]) * inv_n;
            if j == 0 {
                g
            } else {
                g + 2.0 * lambda * beta[j]
            }
        })
        .collect()
}

/// `max_k (h1[k] − h2[k]) / h1[k]`.
pub fn relative_score_difference(h1: &[f64], h2: &[f64]) -> Result<f64> {
    if h1.len() != h2.len() || h1.is_empty() {
        return Err(Error::Dimension(format!(
            "score vectors have lengths {} and {}",
            h1.len(),
            h2.len()
        )));
    }
    h1.iter()
        .zip(h2)
        .enumerate()
        .map(|(k, (&a, &b))| {
            if a == 0.0 {
                Err(Error::DivisionByZero(format!("reference score h1[{k}] is zero")))
            } else {
                Ok((a - b) / a)
            }
        })
        .try_fold(f64::NEG_INFINITY, |acc, r| r.map(|v| acc.max(v)))
}

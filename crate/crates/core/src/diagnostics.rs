//! Optimality checks for candidate solutions.
//!
//! The dual vector is `û = ∇(U + λ‖·‖²)(β̂)`. A solution is optimal exactly
//! when `û` lies in the box `|û − w| ⪯ μ` and sits on its boundary
//! (`û_j = w_j − sgn(β̂_j) μ_j`) for every nonzero coefficient.

use serde::{Deserialize, Serialize};

use crate::family::{Coordinate, Family, PredictorCache};
use crate::model::{score, smooth_gradient, smooth_loss, Dataset, PenaltySpec};
use crate::solver::{approx_threshold, exact_threshold, FitObserver, UpdateRecord};
use crate::sum::pairwise_sum_by;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub u_hat: Vec<f64>,
    /// `max_j max(0, |û_j − w_j| − μ_j)`
    pub box_violation: f64,
    /// `max_{β̂_j ≠ 0} |û_j − (w_j − sgn(β̂_j) μ_j)|`
    pub complementarity_violation: f64,
    /// `max_{β̂_j = 0, j ≥ 1} max(0, |w_j − û_j| − μ_j)`
    pub stationarity_violation: f64,
    /// `H(β̂) + ûᵀβ̂ − (U + λ‖·‖²)(β̂)`: primal value minus the dual value
    /// at `û`. Nonnegative up to the violations above.
    pub duality_gap: f64,
}

impl DualCertificate {
    pub fn max_violation(&self) -> f64 {
        self.box_violation
            .max(self.complementarity_violation)
            .max(self.stationarity_violation)
    }

    /// All three violations strictly below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.box_violation < tol && self.complementarity_violation < tol && self.stationarity_violation < tol
    }
}

/// Default certificate tolerance for a fit run at convergence threshold `eps`.
pub fn default_tolerance(eps: f64) -> f64 {
    100.0 * eps
}

/// Computes the dual certificate of `beta`. Violations are reported as
/// computed, never clamped.
pub fn certify(data: &Dataset, family: Family, penalty: &PenaltySpec, beta: &[f64]) -> DualCertificate {
    let u_hat = smooth_gradient(data, family, penalty.lambda(), beta);
    let w = data.w();
    let mu = penalty.mu();
    let mut box_violation: f64 = 0.0;
    let mut complementarity_violation: f64 = 0.0;
    let mut stationarity_violation: f64 = 0.0;
    for j in 0..beta.len() {
        let gap = (u_hat[j] - w[j]).abs() - mu[j];
        box_violation = box_violation.max(gap.max(0.0));
        if beta[j] != 0.0 {
            let boundary = w[j] - beta[j].signum() * mu[j];
            complementarity_violation = complementarity_violation.max((u_hat[j] - boundary).abs());
        } else if j > 0 {
            stationarity_violation = stationarity_violation.max(gap.max(0.0));
        }
    }
    let lambda = penalty.lambda();
    let smooth =
        smooth_loss(data, family, beta) + lambda * pairwise_sum_by(beta.len() - 1, |k| beta[k + 1] * beta[k + 1]);
    let dual_value = pairwise_sum_by(beta.len(), |j| u_hat[j] * beta[j]) - smooth;
    let duality_gap = match score(data, family, penalty, beta) {
        Ok(h) => h + dual_value,
        Err(_) => f64::NAN,
    };
    DualCertificate {
        u_hat,
        box_violation,
        complementarity_violation,
        stationarity_violation,
        duality_gap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub coordinate: usize,
    pub exact_decision: bool,
    pub approx_decision: bool,
    pub agree: bool,
}

/// Append-only log comparing the exact and linearised threshold decisions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAudit {
    records: Vec<ThresholdRecord>,
}

impl ThresholdAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coordinate: usize, exact_decision: bool, approx_decision: bool) {
        self.records.push(ThresholdRecord {
            coordinate,
            exact_decision,
            approx_decision,
            agree: exact_decision == approx_decision,
        });
    }

    pub fn records(&self) -> &[ThresholdRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl FitObserver for ThresholdAudit {
    fn wants_both_thresholds(&self) -> bool {
        true
    }

    fn on_update(&mut self, record: &UpdateRecord<'_>) {
        if let (Some(e), Some(a)) = (record.exact_decision, record.approx_decision) {
            self.push(record.coordinate, e, a);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub total: usize,
    pub agreements: usize,
    pub disagreements: usize,
}

/// Counts agreements. Disagreements are reported, not treated as errors:
/// the two rules are only guaranteed to coincide at an exact optimum.
pub fn threshold_audit_check(audit: &ThresholdAudit) -> AuditSummary {
    let agreements = audit.records.iter().filter(|r| r.agree).count();
    AuditSummary {
        total: audit.records.len(),
        agreements,
        disagreements: audit.records.len() - agreements,
    }
}

/// Evaluates both threshold decisions for every coordinate at `beta`
/// without moving it.
pub fn audit_fixed_point(data: &Dataset, family: Family, penalty: &PenaltySpec, beta: &[f64]) -> ThresholdAudit {
    let cache = PredictorCache::new(data, beta);
    let mut audit = ThresholdAudit::new();
    for j in 0..beta.len() {
        let view = Coordinate::new(data, family, cache.eta(), j, beta[j], penalty.lambda());
        let w_j = data.w()[j];
        let mu_j = penalty.mu()[j];
        let w0 = view.u_prime(0.0);
        let first = view.u_prime(beta[j]);
        let second = view.u_second(beta[j]);
        audit.push(
            j,
            exact_threshold(w_j, w0, mu_j),
            approx_threshold(w_j, first, second, beta[j], mu_j),
        );
    }
    audit
}

/// A smooth convex function of one variable with its first two derivatives.
pub trait ScalarConvex {
    fn value(&self, b: f64) -> f64;
    fn first(&self, b: f64) -> f64;
    fn second(&self, b: f64) -> f64;
}

/// `U(b) = (1/n) Σ_i A(o_i + x_i b) + λ b²`: a GLM likelihood along one
/// coordinate with fixed offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGlm {
    pub family: Family,
    pub offsets: Vec<f64>,
    pub xs: Vec<f64>,
    pub ridge: f64,
}

impl ScalarGlm {
    /// Restriction of `U + λ‖·‖²` to coordinate `j` around `beta`.
    pub fn along(data: &Dataset, family: Family, lambda: f64, beta: &[f64], j: usize) -> Self {
        let eta = data.linear_predictor(beta);
        let col = data.column(j);
        Self {
            family,
            offsets: eta.iter().zip(col).map(|(e, x)| e - x * beta[j]).collect(),
            xs: col.to_vec(),
            ridge: if j == 0 { 0.0 } else { lambda },
        }
    }

    fn mean_of(&self, f: impl Fn(f64, f64) -> f64, b: f64) -> f64 {
        let total: f64 = self.xs.iter().zip(&self.offsets).map(|(&x, &o)| f(x, o + x * b)).sum();
        total / self.xs.len() as f64
    }
}

impl ScalarConvex for ScalarGlm {
    fn value(&self, b: f64) -> f64 {
        self.mean_of(|_, e| self.family.a(e), b) + self.ridge * b * b
    }

    fn first(&self, b: f64) -> f64 {
        self.mean_of(|x, e| x * self.family.a1(e), b) + 2.0 * self.ridge * b
    }

    fn second(&self, b: f64) -> f64 {
        self.mean_of(|x, e| x * x * self.family.a2(e), b) + 2.0 * self.ridge
    }
}

/// At the scalar optimum `beta_hat` of `U(β) − wβ + μ|β|`, checks that
/// `|w − U′(0)| > μ` and `|w − (U′(β̂) − U″(β̂) β̂)| > μ` agree.
pub fn scalar_prop1_check<S: ScalarConvex + ?Sized>(u: &S, w: f64, mu: f64, beta_hat: f64) -> bool {
    let w0 = u.first(0.0);
    let w0_tilde = u.first(beta_hat) - u.second(beta_hat) * beta_hat;
    ((w - w0).abs() > mu) == ((w - w0_tilde).abs() > mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FitConfig;
    use crate::solver::fit_observed;
    use crate::testkit::{orthogonal_design, soft_threshold};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthonormal_problem(seed: u64) -> (Dataset, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 40;
        let curv: Vec<f64> = (0..5)
            .map(|j| if j == 0 { 1.0 } else { rng.random_range(0.5..2.0) })
            .collect();
        let cols = orthogonal_design(n, &curv, &mut rng);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (Dataset::from_predictor_columns(&cols, y).unwrap(), curv)
    }

    #[test]
    fn analytic_solution_certifies_exactly() {
        let (d, c) = orthonormal_problem(1);
        let pen = PenaltySpec::uniform(5, 0.1, 0.0).unwrap();
        let beta: Vec<f64> = (0..5).map(|j| soft_threshold(d.w()[j], pen.mu()[j]) / c[j]).collect();
        let cert = certify(&d, Family::Gaussian, &pen, &beta);
        assert!(cert.passes(1e-12), "{cert:?}");
        assert!(cert.duality_gap.abs() < 1e-12);
    }

    #[test]
    fn zero_solution_inside_box() {
        let (d, _) = orthonormal_problem(2);
        let mu_big = d.w().iter().skip(1).fold(0.0f64, |a, w| a.max(w.abs())) + 0.01;
        let pen = PenaltySpec::uniform(5, mu_big, 0.0).unwrap();
        let mut beta = vec![0.0; 5];
        beta[0] = d.w()[0];
        let cert = certify(&d, Family::Gaussian, &pen, &beta);
        assert!(cert.box_violation < 1e-14);
        assert_eq!(cert.stationarity_violation, 0.0);
    }

    #[test]
    fn perturbation_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..60).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y = (0..60).map(|_| rng.random_range(0..2) as f64).collect();
        let d = Dataset::from_predictor_columns(&cols, y).unwrap();
        let pen = PenaltySpec::uniform(4, 0.01, 0.0).unwrap();
        let r = crate::solver::fit(&d, Family::Binomial, &pen, &FitConfig::with_eps(1e-10), &[0.0; 4]).unwrap();
        let j = (1..4).find(|&j| r.beta[j] != 0.0).expect("an active coordinate");
        let cert = certify(&d, Family::Binomial, &pen, &r.beta);
        assert!(cert.passes(1e-7));
        let mut moved = r.beta.clone();
        moved[j] += 0.1;
        let bad = certify(&d, Family::Binomial, &pen, &moved);
        let curvature = ScalarGlm::along(&d, Family::Binomial, 0.0, &r.beta, j).second(r.beta[j]);
        let predicted = 0.1 * curvature;
        assert!(bad.complementarity_violation > 1e-4);
        assert!((bad.complementarity_violation - predicted).abs() < 0.2 * predicted);
    }

    #[test]
    fn audit_counts() {
        let mut a = ThresholdAudit::new();
        a.push(0, true, true);
        a.push(1, false, true);
        a.push(2, false, false);
        let s = threshold_audit_check(&a);
        assert_eq!((s.total, s.agreements, s.disagreements), (3, 2, 1));
        assert!(!a.records()[1].agree);
    }

    #[test]
    fn gaussian_fits_never_disagree() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..30).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let y = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = Dataset::from_predictor_columns(&cols, y).unwrap();
            let pen = PenaltySpec::uniform(7, 0.05, 0.0).unwrap();
            let mut audit = ThresholdAudit::new();
            fit_observed(&d, Family::Gaussian, &pen, &FitConfig::default(), &[0.0; 7], &mut audit).unwrap();
            let s = threshold_audit_check(&audit);
            assert!(s.total > 0);
            assert_eq!(s.disagreements, 0);
        }
    }

    #[test]
    fn prop1_zero_case_and_active_case() {
        let u = ScalarGlm {
            family: Family::Binomial,
            offsets: vec![0.2, -0.4, 0.1],
            xs: vec![1.0, -0.5, 2.0],
            ridge: 0.0,
        };
        // β̂ = 0: w̃0 = w0
        assert!(scalar_prop1_check(&u, u.first(0.0) + 0.01, 0.05, 0.0));
        // active, σ = 1: choose w so that β̂ = 0.7 solves U′(β̂) = w − μ
        let mu = 0.02;
        let w = u.first(0.7) + mu;
        assert!((w - u.first(0.0)).abs() > mu);
        assert!(scalar_prop1_check(&u, w, mu, 0.7));
    }
}

//! Natural coordinate descent for ℓ1/ℓ2-penalised maximum-likelihood
//! regression in generalised linear models.
//!
//! The penalised cost for coefficients `β` (with `β[0]` the unpenalised
//! intercept) is
//!
//! ```text
//! H(β) = U(β) − wᵀβ + λ Σ_{j≥1} β_j² + Σ_j μ_j |β_j|,
//! U(β) = (1/n) Σ_i A(x_iᵀβ),   w = (1/n) Σ_i y_i x_i,
//! ```
//!
//! where `A` is the log-partition function of the response family. Each
//! coordinate update is an exact generalised soft-threshold: the coefficient
//! is zero when `|w_j − U_j′(0)| ≤ μ_j`, and otherwise the root of
//! `U_j′(β) − w_j + σ_j μ_j`. The quadratic-approximation variants are
//! available through [`UpdateRule`].

pub mod diagnostics;
pub mod error;
pub mod family;
pub mod io;
pub mod model;
pub mod path;
pub mod report;
pub mod solver;
pub mod sum;
pub mod testkit;

pub use diagnostics::{certify, threshold_audit_check, AuditSummary, DualCertificate, ThresholdAudit};
pub use error::{Error, Result};
pub use family::{Family, PredictorCache};
pub use model::{relative_score_difference, score, Dataset, FitConfig, FitResult, PenaltySpec, UpdateRule};
pub use path::{make_path, model_size, run_path, PathEntry, PathResult, PathSpec, StartMode};
pub use solver::{fit, fit_observed, FitObserver, UpdateRecord};

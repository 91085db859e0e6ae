//! Machine-readable run reports.
//!
//! Coefficients are listed sparsely as `(index, value)` pairs in the space
//! the model was fitted in; index 0 is the intercept.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{certify, AuditSummary, DualCertificate};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{score, Dataset, FitResult, PenaltySpec, UpdateRule};
use crate::path::StartMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    pub input: Option<String>,
    pub response: Option<String>,
    pub family: Family,
    pub lambda: f64,
    pub eps: f64,
    pub rule: UpdateRule,
    pub start: Option<StartMode>,
    pub path_length: Option<usize>,
    pub standardize: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub box_violation: f64,
    pub complementarity_violation: f64,
    pub stationarity_violation: f64,
    pub duality_gap: f64,
}

impl From<&DualCertificate> for CertificateSummary {
    fn from(c: &DualCertificate) -> Self {
        Self {
            box_violation: c.box_violation,
            complementarity_violation: c.complementarity_violation,
            stationarity_violation: c.stationarity_violation,
            duality_gap: c.duality_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub k: usize,
    pub mu: f64,
    pub converged: bool,
    pub objective: Option<f64>,
    pub coefficients: Vec<(usize, f64)>,
    /// Coefficients mapped back to the unstandardised predictors.
    pub original_coefficients: Option<Vec<(usize, f64)>>,
    pub certificate: Option<CertificateSummary>,
    pub audit: Option<AuditSummary>,
    pub outer_cycles: usize,
    pub active_cycles: usize,
    pub coordinate_updates: usize,
    pub runtime_seconds: f64,
    pub error: Option<String>,
}

impl ReportEntry {
    pub fn from_fit(
        k: usize,
        penalty: &PenaltySpec,
        fit: &Result<FitResult>,
        runtime: Duration,
        data: &Dataset,
        family: Family,
    ) -> Self {
        let mu = penalty.mu().get(1).copied().unwrap_or(0.0);
        match fit {
            Ok(r) => {
                let c = certify(data, family, penalty, &r.beta);
                Self {
                    k,
                    mu,
                    converged: r.converged,
                    objective: Some(r.objective),
                    coefficients: r.nonzero().collect(),
                    original_coefficients: None,
                    certificate: Some(CertificateSummary::from(&c)),
                    audit: None,
                    outer_cycles: r.outer_cycles,
                    active_cycles: r.active_cycles,
                    coordinate_updates: r.coordinate_updates,
                    runtime_seconds: runtime.as_secs_f64(),
                    error: None,
                }
            }
            Err(e) => Self {
                k,
                mu,
                converged: false,
                objective: None,
                coefficients: Vec::new(),
                original_coefficients: None,
                certificate: None,
                audit: None,
                outer_cycles: 0,
                active_cycles: 0,
                coordinate_updates: 0,
                runtime_seconds: runtime.as_secs_f64(),
                error: Some(e.to_string()),
            },
        }
    }

    /// Dense coefficient vector of length `p`.
    pub fn dense(&self, p: usize) -> Vec<f64> {
        let mut beta = vec![0.0; p];
        for &(j, v) in &self.coefficients {
            beta[j] = v;
        }
        beta
    }

    /// Fills `original_coefficients` given per-coefficient divisors.
    pub fn attach_scales(&mut self, scales: &[f64]) {
        self.original_coefficients = Some(self.coefficients.iter().map(|&(j, v)| (j, v / scales[j])).collect());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    /// Coefficient names, intercept first.
    pub names: Vec<String>,
    pub entries: Vec<ReportEntry>,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Largest relative gap between a reported objective and the score of
    /// the reported coefficients.
    pub fn max_rescore_error(&self, data: &Dataset) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for e in &self.entries {
            let Some(obj) = e.objective else { continue };
            let penalty = PenaltySpec::uniform(data.p(), e.mu, self.config.lambda)?;
            let h = score(data, self.config.family, &penalty, &e.dense(data.p()))?;
            if obj == 0.0 && h != 0.0 {
                return Err(Error::DivisionByZero(format!("entry {} reports objective 0", e.k)));
            }
            let rel = if obj == 0.0 { 0.0 } else { (h - obj).abs() / obj.abs() };
            worst = worst.max(rel);
        }
        Ok(worst)
    }

    /// One row per nonzero coefficient of every entry.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\tmu\tconverged\tobjective\tindex\tname\tvalue\n");
        for e in &self.entries {
            let obj = e.objective.map_or_else(|| "NA".to_string(), |o| o.to_string());
            if e.coefficients.is_empty() {
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t\t\t", e.k, e.mu, e.converged, obj);
            }
            for &(j, v) in &e.coefficients {
                let name = self.names.get(j).map_or("", String::as_str);
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    e.k, e.mu, e.converged, obj, j, name, v
                );
            }
        }
        out
    }
}

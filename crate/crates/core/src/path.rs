//! Regularisation paths: a geometric grid of ℓ1 penalties from the
//! intercept-only threshold down by a factor `m`, fitted cold or warm.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{Dataset, FitConfig, FitResult, PenaltySpec};
use crate::solver::fit;
use crate::sum::pairwise_sum_by;

/// `values[k] = mu_max / m^{k/(m−1)}` for `k = 0..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub m: usize,
    pub mu_max: f64,
    pub values: Vec<f64>,
}

impl PathSpec {
    pub fn from_mu_max(mu_max: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidConfig(format!("path length {m} < 2")));
        }
        if !(mu_max > 0.0 && mu_max.is_finite()) {
            return Err(Error::DegeneratePath);
        }
        let mf = m as f64;
        let values = (0..m)
            .map(|k| {
                if k == 0 {
                    mu_max
                } else if k == m - 1 {
                    mu_max / mf
                } else {
                    mu_max / mf.powf(k as f64 / (mf - 1.0))
                }
            })
            .collect();
        Ok(Self { m, mu_max, values })
    }
}

/// Smallest uniform penalty at which every penalised coefficient is zero:
/// `max_{j≥1} |w_j − ȳ x̄_j|`.
///
/// At `β = (β_0, 0, …)` the intercept solves `A′(β_0) = ȳ`, so
/// `U_j′(0) = ȳ x̄_j`. For centred predictors this is just `max |w_j|`.
pub fn intercept_only_threshold(data: &Dataset) -> f64 {
    let n = data.n();
    let ybar = data.w()[0];
    (1..data.p())
        .map(|j| {
            let xbar = pairwise_sum_by(n, |i| data.column(j)[i]) / n as f64;
            (data.w()[j] - ybar * xbar).abs()
        })
        .fold(0.0, f64::max)
}

pub fn make_path(data: &Dataset, m: usize) -> Result<PathSpec> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!("path length {m} < 2")));
    }
    if data.p() < 2 {
        return Err(Error::InvalidConfig(
            "a path needs at least one penalised predictor".into(),
        ));
    }
    PathSpec::from_mu_max(intercept_only_threshold(data), m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    #[default]
    Cold,
    Warm,
}

impl std::str::FromStr for StartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cold" => Ok(StartMode::Cold),
            "warm" => Ok(StartMode::Warm),
            other => Err(Error::InvalidConfig(format!("unknown start mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for StartMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StartMode::Cold => "cold",
            StartMode::Warm => "warm",
        })
    }
}

#[derive(Debug)]
pub struct PathEntry {
    /// 1-based position on the path.
    pub k: usize,
    pub mu: f64,
    pub result: Result<FitResult>,
    pub runtime: Duration,
}

#[derive(Debug)]
pub struct PathResult {
    pub start_mode: StartMode,
    pub entries: Vec<PathEntry>,
}

impl PathResult {
    /// Objectives, `NaN` for failed or unconverged fits.
    pub fn objectives(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match &e.result {
                Ok(r) if r.converged => r.objective,
                _ => f64::NAN,
            })
            .collect()
    }
}

fn timed_fit(
    data: &Dataset,
    family: Family,
    penalty: Result<PenaltySpec>,
    config: &FitConfig,
    init: &[f64],
) -> (Result<FitResult>, Duration) {
    let start = Instant::now();
    let result = penalty.and_then(|p| fit(data, family, &p, config, init));
    (result, start.elapsed())
}

/// Fits every penalty on the path. Cold fits run in parallel; warm fits
/// run in order, each seeded by the last converged solution. Errors are
/// recorded per entry and do not stop the path.
pub fn run_path(
    data: &Dataset,
    family: Family,
    lambda: f64,
    path: &PathSpec,
    config: &FitConfig,
    start_mode: StartMode,
) -> PathResult {
    let p = data.p();
    let entries = match start_mode {
        StartMode::Cold => {
            let zeros = vec![0.0; p];
            path.values
                .par_iter()
                .enumerate()
                .map(|(k, &mu)| {
                    let (result, runtime) =
                        timed_fit(data, family, PenaltySpec::uniform(p, mu, lambda), config, &zeros);
                    PathEntry {
                        k: k + 1,
                        mu,
                        result,
                        runtime,
                    }
                })
                .collect()
        }
        StartMode::Warm => {
            let mut seed = vec![0.0; p];
            let mut entries = Vec::with_capacity(path.m);
            for (k, &mu) in path.values.iter().enumerate() {
                let (result, runtime) = timed_fit(data, family, PenaltySpec::uniform(p, mu, lambda), config, &seed);
                if let Ok(r) = &result {
                    if r.converged {
                        seed.clone_from(&r.beta);
                    }
                }
                entries.push(PathEntry {
                    k: k + 1,
                    mu,
                    result,
                    runtime,
                });
            }
            entries
        }
    };
    PathResult { start_mode, entries }
}

/// Number of penalised coefficients with `|β_j| > threshold`.
pub fn model_size(result: &FitResult, threshold: f64) -> usize {
    result.beta.iter().skip(1).filter(|b| b.abs() > threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::unpenalised_objective;
    use crate::testkit::{generate, orthogonal_design, SyntheticSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn result_with(beta: Vec<f64>) -> FitResult {
        FitResult {
            beta,
            objective: 0.0,
            dual_u: vec![],
            outer_cycles: 0,
            active_cycles: 0,
            coordinate_updates: 0,
            last_max_delta: 0.0,
            converged: true,
        }
    }

    #[test]
    fn model_size_examples() {
        assert_eq!(model_size(&result_with(vec![0.0; 4]), 1e-3), 0);
        assert_eq!(model_size(&result_with(vec![5.0, 0.5, 1e-4]), 1e-3), 1);
    }

    #[test]
    fn grid_endpoints_and_ratio() {
        let s = PathSpec::from_mu_max(2.0, 100).unwrap();
        assert_eq!(s.values[0], 2.0);
        assert_eq!(s.values[99], 0.02);
        let r = 100f64.powf(-1.0 / 99.0);
        for k in 0..99 {
            assert!((s.values[k + 1] / s.values[k] - r).abs() < 1e-13);
            assert!(s.values[k + 1] < s.values[k]);
        }
    }

    #[test]
    fn invalid_paths() {
        let d = Dataset::from_predictor_columns(&[vec![1.0, 2.0, 3.0]], vec![1.0, 1.0, 1.0]).unwrap();
        // constant response: every centred moment vanishes
        assert!(matches!(make_path(&d, 10), Err(Error::DegeneratePath)));
        assert!(make_path(&d, 1).is_err());
        let only_intercept = Dataset::from_predictor_columns(&[], vec![1.0, 2.0]).unwrap();
        assert!(make_path(&only_intercept, 10).is_err());
    }

    #[test]
    fn centred_threshold_matches_max_abs_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let c: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
                let m = c.iter().sum::<f64>() / 20.0;
                c.into_iter().map(|v| v - m).collect()
            })
            .collect();
        let y = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = Dataset::from_predictor_columns(&cols, y).unwrap();
        let plain = d.w()[1..].iter().fold(0.0f64, |a, w| a.max(w.abs()));
        assert!((intercept_only_threshold(&d) - plain).abs() < 1e-15);
    }

    fn synthetic(family: Family, seed: u64) -> Dataset {
        generate(&SyntheticSpec {
            n: 80,
            p: 12,
            family,
            correlation: 0.2,
            sparsity: 3,
            seed,
            min_class_fraction: 0.3,
            signal: 0.5,
        })
        .unwrap()
        .dataset
    }

    #[test]
    fn head_is_intercept_only_in_both_modes() {
        for family in Family::ALL {
            let d = synthetic(family, 9);
            let path = make_path(&d, 10).unwrap();
            for mode in [StartMode::Cold, StartMode::Warm] {
                let r = run_path(&d, family, 0.0, &path, &FitConfig::default(), mode);
                let head = r.entries[0].result.as_ref().unwrap();
                assert!(
                    head.beta[1..].iter().all(|&b| b == 0.0),
                    "{family} {mode}: {:?}",
                    head.beta
                );
            }
        }
    }

    #[test]
    fn warm_and_cold_agree() {
        let d = synthetic(Family::Binomial, 1);
        let path = make_path(&d, 20).unwrap();
        let cfg = FitConfig::default();
        let cold = run_path(&d, Family::Binomial, 0.0, &path, &cfg, StartMode::Cold).objectives();
        let warm = run_path(&d, Family::Binomial, 0.0, &path, &cfg, StartMode::Warm).objectives();
        for (c, w) in cold.iter().zip(&warm) {
            assert!((c - w).abs() / c.abs().max(1.0) < 1e-6, "{c} vs {w}");
        }
    }

    #[test]
    fn orthonormal_activation_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cols = orthogonal_design(60, &[1.0; 9], &mut rng);
        let y = (0..60)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let d = Dataset::from_predictor_columns(&cols, y).unwrap();
        let path = make_path(&d, 30).unwrap();
        let r = run_path(&d, Family::Gaussian, 0.0, &path, &FitConfig::default(), StartMode::Warm);
        let sizes: Vec<usize> = r
            .entries
            .iter()
            .map(|e| e.result.as_ref().unwrap().nonzero().filter(|&(j, _)| j > 0).count())
            .collect();
        assert!(sizes.windows(2).all(|s| s[0] <= s[1]), "{sizes:?}");
        assert_eq!(sizes[0], 0);
    }

    #[test]
    fn unpenalised_fit_improves_along_path() {
        for family in Family::ALL {
            let d = synthetic(family, 2);
            let path = make_path(&d, 15).unwrap();
            let r = run_path(&d, family, 0.0, &path, &FitConfig::with_eps(1e-9), StartMode::Warm);
            let u: Vec<f64> = r
                .entries
                .iter()
                .map(|e| unpenalised_objective(&d, family, &e.result.as_ref().unwrap().beta).unwrap())
                .collect();
            for k in 1..u.len() {
                assert!(u[k] <= u[k - 1] + 1e-9, "{family} k={k}: {} > {}", u[k], u[k - 1]);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let d = synthetic(Family::Poisson, 3);
        let path = make_path(&d, 12).unwrap();
        for mode in [StartMode::Cold, StartMode::Warm] {
            let a = run_path(&d, Family::Poisson, 0.1, &path, &FitConfig::default(), mode);
            let b = run_path(&d, Family::Poisson, 0.1, &path, &FitConfig::default(), mode);
            for (x, y) in a.entries.iter().zip(&b.entries) {
                assert_eq!(x.result.as_ref().unwrap(), y.result.as_ref().unwrap());
            }
        }
    }
}

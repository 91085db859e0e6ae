//! Seeded synthetic regression problems.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::Dataset;

const MAX_REDRAWS: usize = 1_000;
const MAX_POISSON_RATE: f64 = 1e8;

/// `p` counts the intercept, as everywhere else in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub family: Family,
    /// Shared-factor correlation `ρ ∈ [0, 1)` between predictors.
    pub correlation: f64,
    /// Number of nonzero penalised coefficients in the truth.
    pub sparsity: usize,
    pub seed: u64,
    /// Minimum fraction of each response class (binomial only).
    pub min_class_fraction: f64,
    /// Magnitude of every true nonzero coefficient; signs are random.
    pub signal: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 100,
            p: 11,
            family: Family::Gaussian,
            correlation: 0.0,
            sparsity: 0,
            seed: 0,
            min_class_fraction: 0.0,
            signal: 1.0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::Generation(format!(
                "need n ≥ 2 and p ≥ 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::Generation(format!(
                "correlation {} outside [0, 1)",
                self.correlation
            )));
        }
        if self.sparsity > self.p - 1 {
            return Err(Error::Generation(format!(
                "sparsity {} exceeds the {} penalised coefficients",
                self.sparsity,
                self.p - 1
            )));
        }
        if !(0.0..=0.5).contains(&self.min_class_fraction) {
            return Err(Error::Generation(format!(
                "class fraction {} outside [0, 0.5]",
                self.min_class_fraction
            )));
        }
        if !self.signal.is_finite() {
            return Err(Error::Generation("signal must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// True coefficients, intercept (always 0) first.
    pub truth: Vec<f64>,
}

/// Draws predictors `x_ij = √ρ z_i + √(1−ρ) ε_ij`, a sparse truth and
/// responses from the family's model.
pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let SyntheticSpec { n, p, family, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let shared: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let (a, b) = (spec.correlation.sqrt(), (1.0 - spec.correlation).sqrt());
    let columns: Vec<Vec<f64>> = (1..p)
        .map(|_| {
            shared
                .iter()
                .map(|z| {
                    let e: f64 = rng.sample(StandardNormal);
                    a * z + b * e
                })
                .collect()
        })
        .collect();

    let mut positions: Vec<usize> = (1..p).collect();
    positions.shuffle(&mut rng);
    let mut truth = vec![0.0; p];
    for &j in &positions[..spec.sparsity] {
        truth[j] = if rng.random_bool(0.5) {
            spec.signal
        } else {
            -spec.signal
        };
    }
    let eta: Vec<f64> = (0..n)
        .map(|i| columns.iter().enumerate().map(|(k, c)| c[i] * truth[k + 1]).sum())
        .collect();

    let y = match family {
        Family::Gaussian => eta
            .iter()
            .map(|e| {
                let noise: f64 = rng.sample(StandardNormal);
                e + noise
            })
            .collect(),
        Family::Binomial => draw_balanced(&eta, spec.min_class_fraction, &mut rng)?,
        Family::Poisson => eta
            .iter()
            .map(|&e| {
                let rate = e.exp();
                if !(rate <= MAX_POISSON_RATE) {
                    return Err(Error::Generation(format!("poisson rate {rate} too large")));
                }
                let d = Poisson::new(rate).map_err(|err| Error::Generation(err.to_string()))?;
                Ok(d.sample(&mut rng))
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    Ok(Synthetic {
        dataset: Dataset::from_predictor_columns(&columns, y)?,
        truth,
    })
}

fn draw_balanced(eta: &[f64], min_fraction: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let probs: Vec<Bernoulli> = eta
        .iter()
        .map(|&e| Bernoulli::new(Family::Binomial.a1(e)).map_err(|err| Error::Generation(err.to_string())))
        .collect::<Result<_>>()?;
    let n = eta.len() as f64;
    for _ in 0..MAX_REDRAWS {
        let y: Vec<f64> = probs.iter().map(|d| if d.sample(rng) { 1.0 } else { 0.0 }).collect();
        let ones = y.iter().sum::<f64>() / n;
        if ones >= min_fraction && 1.0 - ones >= min_fraction && ones > 0.0 && ones < 1.0 {
            return Ok(y);
        }
    }
    Err(Error::Generation(format!(
        "no response draw with both classes above {min_fraction} after {MAX_REDRAWS} tries"
    )))
}

/// Predictor columns orthogonal to each other and to the intercept, with
/// `(1/n) Σ_i x_ij² = curvatures[j]`.
///
/// `curvatures` has one entry per coefficient including the intercept, whose
/// entry must be 1. Needs `n ≥ curvatures.len()`.
pub fn orthogonal_design<R: Rng + ?Sized>(n: usize, curvatures: &[f64], rng: &mut R) -> Vec<Vec<f64>> {
    assert!(n >= curvatures.len(), "orthogonal design needs n ≥ p");
    assert!(curvatures.first() == Some(&1.0), "intercept curvature must be 1");
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut columns = Vec::with_capacity(curvatures.len() - 1);
    for &c in &curvatures[1..] {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= proj * b;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let q: Vec<f64> = v.iter().map(|a| a / norm).collect();
        let scale = (c * n as f64).sqrt();
        columns.push(q.iter().map(|a| a * scale).collect());
        basis.push(q);
    }
    columns
}

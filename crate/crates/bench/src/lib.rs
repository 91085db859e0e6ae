//! Fixtures shared by the solver benchmarks.

use natcd::testkit::{generate, SyntheticSpec};
use natcd::{make_path, Dataset, Family, PathSpec};

/// A benchmark problem: seeded synthetic data and its penalty grid.
pub struct Problem {
    pub name: String,
    pub family: Family,
    pub data: Dataset,
    pub path: PathSpec,
}

/// `p` counts the intercept. Ten predictors carry signal.
pub fn problem(family: Family, n: usize, p: usize, correlation: f64, path_length: usize) -> Problem {
    let data = generate(&SyntheticSpec {
        n,
        p,
        family,
        correlation,
        sparsity: 10.min(p - 1),
        seed: 7,
        min_class_fraction: 0.2,
        signal: 0.5,
    })
    .expect("benchmark spec is valid")
    .dataset;
    let path = make_path(&data, path_length).expect("benchmark data admits a path");
    Problem {
        name: format!("{family}/n{n}/p{p}/rho{correlation}"),
        family,
        data,
        path,
    }
}

/// The default benchmark set: one problem per family.
pub fn standard_problems() -> Vec<Problem> {
    Family::ALL
        .into_iter()
        .map(|family| problem(family, 200, 101, 0.2, 20))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use natcd::{run_path, FitConfig, StartMode};

    #[test]
    fn fixtures_are_solvable() {
        for prob in standard_problems() {
            assert_eq!(prob.data.p(), 101);
            assert_eq!(prob.path.values.len(), 20);
            let r = run_path(
                &prob.data,
                prob.family,
                0.0,
                &prob.path,
                &FitConfig::default(),
                StartMode::Warm,
            );
            assert!(
                r.entries.iter().all(|e| e.result.as_ref().is_ok_and(|f| f.converged)),
                "{}",
                prob.name
            );
        }
    }
}

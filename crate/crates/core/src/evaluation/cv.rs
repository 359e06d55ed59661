use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{empirical_value, tune, Criterion, Summary, TuningGrid};
use crate::model::{fit_model, Method};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub reps: usize,
    pub seed: u64,
    /// Share of the training folds used for fitting during tuning; the rest
    /// is the inner tuning set.
    pub inner_train_fraction: f64,
    pub solver: SolverConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            reps: 50,
            seed: 0,
            inner_train_fraction: 0.8,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Held-out value per `(rep, fold)`, rep-major; `None` when undefined or
    /// failed.
    pub values: Vec<Option<f64>>,
    pub folds: usize,
    pub reps: usize,
    pub summary: Summary,
    pub missing: usize,
    /// `(rep, fold, message)` for every missing entry.
    pub failures: Vec<(usize, usize, String)>,
}

/// Fold membership for one repetition: a seeded shuffle cut into `folds`
/// contiguous blocks whose sizes differ by at most one.
pub fn fold_partition(n: usize, folds: usize, seed: u64, rep: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    perm.shuffle(&mut rng);
    (0..folds)
        .map(|f| perm[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect()
}

pub fn cross_validate(data: &Dataset, method: Method, grid: &TuningGrid, config: &CvConfig) -> Result<CvReport> {
    let CvConfig { folds, reps, seed, .. } = *config;
    if folds < 2 || folds > data.len() {
        return Err(Error::InvalidInput(format!(
            "need 2 <= folds <= n, got folds={folds}, n={}",
            data.len()
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("need at least one repetition".into()));
    }
    if !(config.inner_train_fraction > 0.0 && config.inner_train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "inner train fraction must lie in (0, 1), got {}",
            config.inner_train_fraction
        )));
    }
    grid.validate()?;

    let partitions: Vec<Vec<Vec<usize>>> = (0..reps).map(|r| fold_partition(data.len(), folds, seed, r)).collect();
    let jobs: Vec<(usize, usize)> = (0..reps).flat_map(|r| (0..folds).map(move |f| (r, f))).collect();
    let outcomes: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let held_out = &partitions[r][f];
            let mut training: Vec<usize> = partitions[r]
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            training.sort_unstable();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((1u64 << 32) + (r * folds + f) as u64);
            let mut shuffled = training.clone();
            shuffled.shuffle(&mut rng);
            let cut =
                ((shuffled.len() as f64 * config.inner_train_fraction).round() as usize).clamp(1, shuffled.len() - 1);
            let inner_train = data.subset(&shuffled[..cut])?;
            let inner_tune = data.subset(&shuffled[cut..])?;
            let chosen = tune(
                &inner_train,
                &inner_tune,
                method,
                grid,
                Criterion::Value,
                &config.solver,
            )?
            .cell;
            // refit on all training folds, keeping the chosen multiplier
            let lambda = chosen.lambda * inner_train.len() as f64 / training.len() as f64;
            let model = fit_model(method, &data.subset(&training)?, lambda, chosen.kernel, &config.solver)?;
            empirical_value(&model, &data.subset(held_out)?)
        })
        .collect();

    let mut values = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    for (&(r, f), out) in jobs.iter().zip(outcomes) {
        match out {
            Ok(v) => values.push(Some(v)),
            Err(e) => {
                failures.push((r, f, e.to_string()));
                values.push(None);
            }
        }
    }
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    Ok(CvReport {
        summary: Summary::of(&present),
        missing: values.len() - present.len(),
        values,
        folds,
        reps,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::KernelKind;
    use crate::simulation::{generate, ScenarioConfig, ScenarioId};

    fn small_grid() -> TuningGrid {
        TuningGrid {
            lambda_multipliers: vec![1.0, 100.0],
            sigmas: vec![],
            kernel: KernelKind::Linear,
        }
    }

    #[test]
    fn partition_covers_every_row_once() {
        let parts = fold_partition(23, 5, 4, 2);
        let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(parts.iter().all(|p| p.len() == 4 || p.len() == 5));
        assert_ne!(fold_partition(23, 5, 4, 3), parts);
    }

    #[test]
    fn leave_one_out_structure() {
        let s = generate(&ScenarioConfig::new(ScenarioId::L2, 10, 1)).unwrap();
        let cfg = CvConfig {
            folds: 10,
            reps: 2,
            ..CvConfig::default()
        };
        let report = cross_validate(&s.data, Method::gowl(), &small_grid(), &cfg).unwrap();
        assert_eq!(report.values.len(), 20);
        assert_eq!(report.missing + report.summary.count, 20);
        assert!(fold_partition(10, 10, 0, 0).iter().all(|p| p.len() == 1));
    }

    #[test]
    fn deterministic_given_seed() {
        let s = generate(&ScenarioConfig::new(ScenarioId::L3, 60, 2)).unwrap();
        let cfg = CvConfig {
            reps: 3,
            seed: 11,
            ..CvConfig::default()
        };
        let a = cross_validate(&s.data, Method::gowl(), &small_grid(), &cfg).unwrap();
        let b = cross_validate(&s.data, Method::gowl(), &small_grid(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_reward_folds_equal_constant() {
        let s = generate(&ScenarioConfig::new(ScenarioId::L3, 40, 3)).unwrap();
        let d = s.data.with_reward(vec![2.5; 40]).unwrap();
        let cfg = CvConfig {
            reps: 2,
            ..CvConfig::default()
        };
        let report = cross_validate(&d, Method::gowl(), &small_grid(), &cfg).unwrap();
        for v in report.values.iter().flatten() {
            assert!((v - 2.5).abs() < 1e-12);
        }
        assert!(report.summary.count > 0);
    }

    #[test]
    fn rejects_bad_fold_counts() {
        let s = generate(&ScenarioConfig::new(ScenarioId::L3, 4, 3)).unwrap();
        let cfg = CvConfig {
            folds: 5,
            ..CvConfig::default()
        };
        assert!(cross_validate(&s.data, Method::gowl(), &small_grid(), &cfg).is_err());
    }
}

use rayon::prelude::*;

use crate::error::Result;
use crate::evaluation::{
    empirical_value, misclassification, tune, Criterion, EvalReport, KernelKind, ReplicateOutcome, TuningGrid,
};
use crate::model::{Method, Model};
use crate::rule::TreatmentRule;
use crate::simulation::{generate_replicate, OracleRule, ScenarioId};
use crate::solver::SolverConfig;

/// A method with its kernel and tuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub grid: TuningGrid,
}

impl MethodSpec {
    pub fn standard(method: Method, kernel: KernelKind) -> Self {
        Self {
            method,
            grid: TuningGrid::standard(kernel),
        }
    }

    /// Report label, e.g. `GOWL-Linear` or `PLS-l1`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Gowl { .. } => format!("GOWL-{}", self.grid.kernel.title()),
            Method::Owl { .. } => format!("OWL-{}", self.grid.kernel.title()),
            Method::PlsL1 => "PLS-l1".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenario: ScenarioId,
    /// Training size; the tuning set has the same size and the test set is
    /// ten times larger.
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    /// Select by misclassification on the tuning set instead of value.
    pub tune_by_misc: bool,
    pub solver: SolverConfig,
}

impl BenchConfig {
    pub fn new(scenario: ScenarioId, n: usize, replicates: usize, seed: u64, methods: Vec<MethodSpec>) -> Self {
        Self {
            scenario,
            n,
            replicates,
            seed,
            methods,
            tune_by_misc: false,
            solver: SolverConfig::default(),
        }
    }
}

/// Generate, tune, fit and evaluate every replicate for every method. A
/// failed replicate is recorded and the run continues.
pub fn run_scenario(config: &BenchConfig) -> Result<Vec<EvalReport>> {
    for spec in &config.methods {
        spec.grid.validate()?;
    }
    let per_replicate: Vec<Vec<std::result::Result<ReplicateOutcome, String>>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(
            |r| match generate_replicate(config.scenario, config.n, config.seed, r) {
                Ok(sets) => config
                    .methods
                    .par_iter()
                    .map(|spec| evaluate_one(config, spec, &sets, r).map_err(|e| e.to_string()))
                    .collect(),
                Err(e) => vec![Err(e.to_string()); config.methods.len()],
            },
        )
        .collect();

    Ok(config
        .methods
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let mut report = EvalReport {
                scenario: Some(config.scenario),
                n: config.n,
                method: spec.label(),
                outcomes: Vec::new(),
                failures: Vec::new(),
            };
            for (r, results) in per_replicate.iter().enumerate() {
                match &results[m] {
                    Ok(o) => report.outcomes.push(o.clone()),
                    Err(e) => report.failures.push((r as u64, e.clone())),
                }
            }
            report
        })
        .collect())
}

fn evaluate_one(
    config: &BenchConfig,
    spec: &MethodSpec,
    sets: &crate::simulation::ReplicateSets,
    replicate: u64,
) -> Result<ReplicateOutcome> {
    let criterion = if config.tune_by_misc {
        Criterion::Misc(&sets.tune.truth)
    } else {
        Criterion::Value
    };
    let tuned = tune(
        &sets.train.data,
        &sets.tune.data,
        spec.method,
        &spec.grid,
        criterion,
        &config.solver,
    )?;
    let test = &sets.test;
    let monotone_intercepts = match &tuned.model {
        Model::Gowl(rule) if rule.levels() > 2 => Some(rule.has_monotone_intercepts()),
        _ => None,
    };
    Ok(ReplicateOutcome {
        replicate,
        misc: misclassification(&tuned.model, &test.data, &test.truth)?,
        value_fitted: empirical_value(&tuned.model, &test.data)?,
        value_optimal: empirical_value(&OracleRule(config.scenario), &test.data)?,
        lambda: tuned.cell.lambda,
        sigma: tuned.cell.kernel.sigma(),
        monotone_intercepts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_method_and_deterministic() {
        let methods = vec![
            MethodSpec::standard(Method::gowl(), KernelKind::Linear),
            MethodSpec::standard(Method::PlsL1, KernelKind::Linear),
        ];
        let cfg = BenchConfig::new(ScenarioId::L3, 40, 2, 5, methods);
        let a = run_scenario(&cfg).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].method, "GOWL-Linear");
        assert_eq!(a[1].method, "PLS-l1");
        assert_eq!(a, run_scenario(&cfg).unwrap());
        for r in &a {
            assert_eq!(r.outcomes.len() + r.failures.len(), 2);
            assert!(r.outcomes.iter().all(|o| (0.0..=1.0).contains(&o.misc)));
            assert!(r.value_error().mean >= 0.0);
        }
    }

    #[test]
    fn single_replicate_has_zero_sd() {
        let cfg = BenchConfig::new(
            ScenarioId::L2,
            30,
            1,
            1,
            vec![MethodSpec::standard(Method::gowl(), KernelKind::Linear)],
        );
        let reports = run_scenario(&cfg).unwrap();
        let misc = reports[0].misc();
        assert_eq!((misc.count, misc.sd), (1, 0.0));
        assert!(misc.sd_undefined());
    }
}

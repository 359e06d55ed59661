//! Metrics, tuning-set selection, cross-validation and the benchmark
//! protocol.

mod bench;
mod cv;
mod tuning;

pub use bench::{run_scenario, BenchConfig, MethodSpec};
pub use cv::{cross_validate, fold_partition, CvConfig, CvReport};
pub use tuning::{tune, Cell, Criterion, KernelKind, Tuned, TuningGrid};

use std::fmt::Write as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rule::TreatmentRule;
use crate::simulation::ScenarioId;

/// Fraction of rows where the rule's prediction differs from `truth`.
pub fn misclassification<R: TreatmentRule + ?Sized>(rule: &R, data: &Dataset, truth: &[usize]) -> Result<f64> {
    if truth.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: truth.len(),
        });
    }
    let mut wrong = 0usize;
    for (i, &t) in truth.iter().enumerate() {
        if rule.predict(data.row(i))? != t {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / data.len() as f64)
}

/// Number of thresholds `k` where `sign(a - k)` matches the sign of the
/// rule's decision value (non-positive values count as `-1`).
pub fn agreements<R: TreatmentRule + ?Sized>(rule: &R, x: &[f64], treatment: usize) -> Result<usize> {
    let values = rule.decision_values(x)?;
    Ok(values
        .iter()
        .enumerate()
        .filter(|(idx, v)| (treatment > idx + 1) == (**v > 0.0))
        .count())
}

/// `Σ_i S_i r_i / π_i / Σ_i S_i / π_i` with `S_i` the agreement count.
pub fn empirical_value<R: TreatmentRule + ?Sized>(rule: &R, data: &Dataset) -> Result<f64> {
    if rule.levels() != data.levels() {
        return Err(Error::DimensionMismatch {
            expected: data.levels(),
            found: rule.levels(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..data.len() {
        let s = agreements(rule, data.row(i), data.treatment()[i])? as f64;
        let w = s / data.propensity()[i];
        num += w * data.reward()[i];
        den += w;
    }
    if den == 0.0 {
        return Err(Error::UndefinedValue);
    }
    Ok(num / den)
}

/// Mean of `(fitted - optimal)²` over replicates.
pub fn value_mse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("value MSE needs at least one replicate".into()));
    }
    Ok(pairs.iter().map(|(f, o)| (f - o).powi(2)).sum::<f64>() / pairs.len() as f64)
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Summary {
                mean: f64::NAN,
                sd: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd, count }
    }

    /// The standard deviation is a placeholder 0 from a single value.
    pub fn sd_undefined(&self) -> bool {
        self.count < 2
    }
}

/// Test-set results of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub misc: f64,
    pub value_fitted: f64,
    pub value_optimal: f64,
    /// Chosen tuning cell.
    pub lambda: f64,
    pub sigma: Option<f64>,
    /// Present for GOWL fits with at least two thresholds.
    pub monotone_intercepts: Option<bool>,
}

impl ReplicateOutcome {
    pub fn value_sq_error(&self) -> f64 {
        (self.value_fitted - self.value_optimal).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scenario: Option<ScenarioId>,
    pub n: usize,
    /// Display label such as `GOWL-Linear`.
    pub method: String,
    pub outcomes: Vec<ReplicateOutcome>,
    /// `(replicate, message)` for replicates that failed.
    pub failures: Vec<(u64, String)>,
}

impl EvalReport {
    pub fn misc(&self) -> Summary {
        Summary::of(&self.outcomes.iter().map(|o| o.misc).collect::<Vec<_>>())
    }

    /// Mean is the value-MSE.
    pub fn value_error(&self) -> Summary {
        Summary::of(&self.outcomes.iter().map(|o| o.value_sq_error()).collect::<Vec<_>>())
    }

    pub fn value_mse(&self) -> Result<f64> {
        value_mse(
            &self
                .outcomes
                .iter()
                .map(|o| (o.value_fitted, o.value_optimal))
                .collect::<Vec<_>>(),
        )
    }

    pub fn fitted_value(&self) -> Summary {
        Summary::of(&self.outcomes.iter().map(|o| o.value_fitted).collect::<Vec<_>>())
    }
}

fn cell(s: Summary) -> String {
    if s.count == 0 {
        return "NA".to_string();
    }
    let flag = if s.sd_undefined() { "*" } else { "" };
    format!("{:.3} ({:.3}){flag}", s.mean, s.sd)
}

/// Renders reports as `scenario × n × method` rows with MISC and Value
/// columns, each `mean (sd)` over replicates.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:>5} {:<16} {:>18} {:>18} {:>5} {:>6}",
        "scenario", "n", "method", "MISC", "Value", "reps", "failed"
    );
    let mut flagged = false;
    for r in reports {
        let (misc, value) = (r.misc(), r.value_error());
        flagged |= misc.count == 1;
        let _ = writeln!(
            out,
            "{:<9} {:>5} {:<16} {:>18} {:>18} {:>5} {:>6}",
            r.scenario.map_or("-".to_string(), |s| s.to_string()),
            r.n,
            r.method,
            cell(misc),
            cell(value),
            r.outcomes.len(),
            r.failures.len()
        );
    }
    if flagged {
        let _ = writeln!(out, "* single replicate: sd reported as 0");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{staircase, ConstantRule};
    use crate::simulation::{generate, OracleRule, ScenarioConfig};
    use ndarray::{array, Array2};

    /// Predicts each row's observed treatment by looking up its first
    /// covariate.
    struct Echo {
        levels: usize,
    }

    impl TreatmentRule for Echo {
        fn levels(&self) -> usize {
            self.levels
        }
        fn dim(&self) -> usize {
            1
        }
        fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(staircase(x[0] as usize, self.levels))
        }
    }

    #[test]
    fn reproducing_rule_gives_mean_reward() {
        let a = vec![1, 3, 2, 2, 3, 1, 1];
        let x = Array2::from_shape_fn((7, 1), |(i, _)| a[i] as f64);
        let r = vec![1.5, -2.0, 0.3, 4.0, 2.2, -1.1, 0.7];
        let d = Dataset::with_uniform_propensity(x, a, r.clone(), 3).unwrap();
        let v = empirical_value(&Echo { levels: 3 }, &d).unwrap();
        assert!((v - r.iter().sum::<f64>() / 7.0).abs() < 1e-12);
    }

    #[test]
    fn hand_enumerated_value() {
        let d = Dataset::with_uniform_propensity(array![[0.0], [0.0]], vec![1, 3], vec![3.0, 6.0], 3).unwrap();
        let rule = ConstantRule {
            treatment: 1,
            levels: 3,
            dim: 1,
        };
        assert_eq!(agreements(&rule, &[0.0], 1).unwrap(), 2);
        assert_eq!(agreements(&rule, &[0.0], 3).unwrap(), 0);
        assert!((empirical_value(&rule, &d).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_agreement_is_undefined() {
        let d = Dataset::with_uniform_propensity(array![[0.0], [0.0]], vec![3, 3], vec![1.0, 2.0], 3).unwrap();
        let rule = ConstantRule {
            treatment: 1,
            levels: 3,
            dim: 1,
        };
        assert_eq!(empirical_value(&rule, &d), Err(Error::UndefinedValue));
    }

    #[test]
    fn value_mse_examples() {
        assert_eq!(value_mse(&[(1.0, 1.0), (2.5, 2.5)]).unwrap(), 0.0);
        assert_eq!(value_mse(&[(1.0, 2.0), (3.0, 3.0)]).unwrap(), 0.5);
        assert!((value_mse(&[(0.4, 0.4 + 0.3)]).unwrap() - 0.09).abs() < 1e-15);
        assert!(value_mse(&[]).is_err());
    }

    #[test]
    fn misc_examples() {
        let s = generate(&ScenarioConfig::new(ScenarioId::L3, 2000, 1)).unwrap();
        assert_eq!(
            misclassification(&OracleRule(ScenarioId::L3), &s.data, &s.truth).unwrap(),
            0.0
        );
        let one = ConstantRule {
            treatment: 1,
            levels: 3,
            dim: 6,
        };
        let non_one = s.truth.iter().filter(|&&t| t != 1).count() as f64 / 2000.0;
        assert!((misclassification(&one, &s.data, &s.truth).unwrap() - non_one).abs() < 1e-15);
    }

    #[test]
    fn random_guess_misclassifies_half() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let x = Array2::from_shape_fn((n, 1), |_| rng.random_range(1..=2) as f64);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
        let d = Dataset::with_uniform_propensity(x, vec![1; n], vec![0.0; n], 2).unwrap();
        let m = misclassification(&Echo { levels: 2 }, &d, &truth).unwrap();
        assert!((m - 0.5).abs() < 0.02);
    }

    #[test]
    fn table_flags_single_replicate() {
        let report = EvalReport {
            scenario: Some(ScenarioId::L3),
            n: 30,
            method: "GOWL-Linear".into(),
            outcomes: vec![ReplicateOutcome {
                replicate: 0,
                misc: 0.1,
                value_fitted: 5.0,
                value_optimal: 5.5,
                lambda: 0.1,
                sigma: None,
                monotone_intercepts: Some(true),
            }],
            failures: vec![],
        };
        assert_eq!(report.misc().sd, 0.0);
        let table = format_table(&[report]);
        assert!(table.contains("0.100 (0.000)*"));
        assert!(table.contains("0.250 (0.000)*"));
        assert!(table.contains("single replicate"));
    }
}

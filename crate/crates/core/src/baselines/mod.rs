//! Comparison methods: pairwise OWL with shifted rewards and pairwise
//! `ℓ1`-penalised least squares. Both fit one binary rule per threshold
//! `{1..k}` vs `{k+1..K}` and predict by summing the indicators.

mod lasso;
mod owl;

pub use lasso::{fit_lasso, soft_threshold, LassoFit, LASSO_TOL};
pub use owl::{fit_owl, fit_owl_with, shifted_rewards, ShiftRule};

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rule::{FittedRule, TreatmentRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    Owl,
    PlsL1,
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Owl => "owl",
            BaselineMethod::PlsL1 => "pls_l1",
        }
    }
}

/// One binary comparison `{1..k}` vs `{k+1..K}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SubRule {
    /// A weighted-hinge classifier fitted as a two-level problem.
    Svm(FittedRule),
    /// `γ + x·δ`
    Linear { intercept: f64, slope: Vec<f64> },
}

impl SubRule {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            SubRule::Svm(rule) => Ok(rule.decision_values(x)?[0]),
            SubRule::Linear { intercept, slope } => {
                if x.len() != slope.len() {
                    return Err(Error::DimensionMismatch {
                        expected: slope.len(),
                        found: x.len(),
                    });
                }
                Ok(intercept + x.iter().zip(slope).map(|(a, b)| a * b).sum::<f64>())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRule {
    pub method: BaselineMethod,
    /// Sub-rule `k` decides between `{1..k}` and `{k+1..K}`.
    pub sub_rules: Vec<SubRule>,
    /// Constant added to every reward before fitting (OWL only).
    pub shift: Option<f64>,
    pub levels: usize,
    pub dim: usize,
    /// Penalty used for every sub-rule.
    pub lambda: f64,
}

impl TreatmentRule for BaselineRule {
    fn levels(&self) -> usize {
        self.levels
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.sub_rules.iter().map(|s| s.eval(x)).collect()
    }
}

/// For each `k`, lasso of `R` on `[1, x, t, t·x]` with `t = sign(a - k)`;
/// the sub-rule keeps the treatment-varying part `γ + x·δ`.
pub fn fit_pls_l1(data: &Dataset, lambda_lasso: f64) -> Result<BaselineRule> {
    let (n, p) = (data.len(), data.dim());
    if n <= 2 {
        return Err(Error::InvalidInput(format!("PLS-l1 needs n > 2, got {n}")));
    }
    let mut sub_rules = Vec::with_capacity(data.levels() - 1);
    let mut design = Array2::zeros((n, 2 * p + 1));
    for k in 1..data.levels() {
        for i in 0..n {
            let t = if data.treatment()[i] > k { 1.0 } else { -1.0 };
            let x = data.row(i);
            for j in 0..p {
                design[[i, j]] = x[j];
                design[[i, p + 1 + j]] = t * x[j];
            }
            design[[i, p]] = t;
        }
        let fit = fit_lasso(&design, data.reward(), lambda_lasso)?;
        sub_rules.push(SubRule::Linear {
            intercept: fit.coefs[p],
            slope: fit.coefs[p + 1..].to_vec(),
        });
    }
    Ok(BaselineRule {
        method: BaselineMethod::PlsL1,
        sub_rules,
        shift: None,
        levels: data.levels(),
        dim: p,
        lambda: lambda_lasso,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pls_sub_rule_count_and_null_fit() {
        let x = array![[0.1], [0.5], [-0.3], [0.9], [-0.7], [0.2]];
        let d =
            Dataset::with_uniform_propensity(x, vec![1, 2, 3, 1, 2, 3], vec![1.0, 2.0, 0.5, 3.0, 1.0, 2.5], 3).unwrap();
        let rule = fit_pls_l1(&d, 1e3).unwrap();
        assert_eq!(rule.sub_rules.len(), 2);
        for s in &rule.sub_rules {
            assert_eq!(
                s,
                &SubRule::Linear {
                    intercept: 0.0,
                    slope: vec![0.0]
                }
            );
        }
        // constant sub-rules of 0 put everyone at level 1
        assert_eq!(rule.predict(&[0.4]).unwrap(), 1);
    }

    #[test]
    fn pls_recovers_interaction_sign() {
        // reward favours high levels when x > 0 and low levels otherwise
        let n = 200;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| (i as f64 / n as f64) * 2.0 - 1.0);
        let a: Vec<usize> = (0..n).map(|i| i % 2 + 1).collect();
        let r: Vec<f64> = (0..n).map(|i| x[[i, 0]] * (2.0 * a[i] as f64 - 3.0)).collect();
        let d = Dataset::with_uniform_propensity(x, a, r, 2).unwrap();
        let rule = fit_pls_l1(&d, 1e-3).unwrap();
        assert_eq!(rule.predict(&[0.8]).unwrap(), 2);
        assert_eq!(rule.predict(&[-0.8]).unwrap(), 1);
    }

    #[test]
    fn pls_rejects_tiny_samples() {
        let d = Dataset::with_uniform_propensity(array![[0.0], [1.0]], vec![1, 2], vec![1.0, 2.0], 2).unwrap();
        assert!(fit_pls_l1(&d, 0.1).is_err());
    }
}

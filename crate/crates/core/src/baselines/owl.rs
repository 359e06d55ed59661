use crate::baselines::{BaselineMethod, BaselineRule, SubRule};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::solver::{fit_with, FitOptions, SolverConfig};

/// How rewards are made nonnegative before an OWL fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftRule {
    /// `r - min(r) + margin_sd · sd(r)`; a zero `sd` uses `margin_sd` itself
    /// so the shifted rewards stay strictly positive.
    Auto { margin_sd: f64 },
    /// `r + c`; every shifted reward must be nonnegative.
    Constant(f64),
}

impl Default for ShiftRule {
    fn default() -> Self {
        ShiftRule::Auto { margin_sd: 0.1 }
    }
}

/// Shifted rewards and the constant that was added.
pub fn shifted_rewards(reward: &[f64], rule: ShiftRule) -> Result<(Vec<f64>, f64)> {
    let (shifted, shift): (Vec<f64>, f64) = match rule {
        ShiftRule::Auto { margin_sd } => {
            if !(margin_sd.is_finite() && margin_sd > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "shift margin must be positive, got {margin_sd}"
                )));
            }
            let n = reward.len() as f64;
            let min = reward.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = reward.iter().sum::<f64>() / n;
            let sd = if reward.len() > 1 {
                (reward.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let margin = if sd > 0.0 { margin_sd * sd } else { margin_sd };
            (reward.iter().map(|r| r - min + margin).collect(), margin - min)
        }
        ShiftRule::Constant(c) => (reward.iter().map(|r| r + c).collect(), c),
    };
    if let Some(r) = shifted.iter().find(|r| r.is_nan() || **r < 0.0) {
        return Err(Error::InvalidInput(format!("shifted reward {r} is negative")));
    }
    Ok((shifted, shift))
}

pub fn fit_owl(data: &Dataset, lambda: f64, spec: KernelSpec) -> Result<BaselineRule> {
    fit_owl_with(data, lambda, spec, ShiftRule::default(), &SolverConfig::default())
}

/// One two-level weighted-hinge fit per threshold on shifted rewards.
pub fn fit_owl_with(
    data: &Dataset,
    lambda: f64,
    spec: KernelSpec,
    shift: ShiftRule,
    solver: &SolverConfig,
) -> Result<BaselineRule> {
    let (reward, constant) = shifted_rewards(data.reward(), shift)?;
    let options = FitOptions {
        solver: solver.clone(),
        ..FitOptions::new(lambda, spec)
    };
    let mut sub_rules = Vec::with_capacity(data.levels() - 1);
    for k in 1..data.levels() {
        let binary: Vec<usize> = data.treatment().iter().map(|&a| if a > k { 2 } else { 1 }).collect();
        let pair = Dataset::new(data.x().clone(), binary, reward.clone(), data.propensity().to_vec(), 2)?;
        sub_rules.push(SubRule::Svm(fit_with(&pair, &options)?.rule));
    }
    Ok(BaselineRule {
        method: BaselineMethod::Owl,
        sub_rules,
        shift: Some(constant),
        levels: data.levels(),
        dim: data.dim(),
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duplication::{duplicate, Strategy};
    use crate::rule::TreatmentRule;
    use crate::solver::fit;
    use ndarray::{array, Array2};

    #[test]
    fn auto_shift_is_strictly_positive() {
        let (r, c) = shifted_rewards(&[-3.0, 1.0, 2.0], ShiftRule::default()).unwrap();
        assert!(r.iter().all(|&v| v > 0.0));
        assert!((r[0] - (c - 3.0)).abs() < 1e-12);
        let (r, _) = shifted_rewards(&[2.0, 2.0], ShiftRule::default()).unwrap();
        assert_eq!(r, vec![0.1, 0.1]);
        assert!(shifted_rewards(&[-1.0], ShiftRule::Constant(0.0)).is_err());
    }

    #[test]
    fn zero_shift_binary_matches_gowl() {
        let x = array![
            [0.2, -0.4],
            [0.9, 0.1],
            [-0.5, 0.7],
            [-0.8, -0.2],
            [0.4, 0.6],
            [0.0, -0.9]
        ];
        let d =
            Dataset::with_uniform_propensity(x, vec![1, 2, 2, 1, 2, 1], vec![1.0, 0.5, 2.0, 3.0, 0.2, 1.2], 2).unwrap();
        let spec = KernelSpec::gaussian(1.0).unwrap();
        let gowl = fit(&d, 0.05, spec, Strategy::Full).unwrap();
        let owl = fit_owl_with(&d, 0.05, spec, ShiftRule::Constant(0.0), &SolverConfig::default()).unwrap();
        for i in 0..d.len() {
            let a = gowl.decision_values(d.row(i)).unwrap();
            let b = owl.decision_values(d.row(i)).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-4);
        }
    }

    #[test]
    fn one_sub_rule_per_threshold() {
        let d = Dataset::with_uniform_propensity(
            Array2::from_shape_fn((9, 1), |(i, _)| i as f64 / 9.0),
            vec![1, 2, 3, 1, 2, 3, 1, 2, 3],
            vec![1.0; 9],
            3,
        )
        .unwrap();
        let rule = fit_owl(&d, 0.1, KernelSpec::Linear).unwrap();
        assert_eq!(rule.sub_rules.len(), 2);
        assert!((1..=3).contains(&rule.predict(&[0.5]).unwrap()));
    }

    /// Two treated patients with rewards -10 and +10.
    fn toy() -> Dataset {
        Dataset::with_uniform_propensity(array![[-1.0], [1.0]], vec![2, 2], vec![-10.0, 10.0], 2).unwrap()
    }

    #[test]
    fn shifted_toy_recommends_treatment_to_both() {
        let d = toy();
        let owl = fit_owl_with(
            &d,
            0.1,
            KernelSpec::Linear,
            ShiftRule::Constant(15.0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(owl.predict(&[-1.0]).unwrap(), 2);
        assert_eq!(owl.predict(&[1.0]).unwrap(), 2);
        // the modified loss keeps the harmed patient away from treatment
        let gowl = fit(&d, 0.1, KernelSpec::Linear, Strategy::Full).unwrap();
        assert_eq!(gowl.predict(&[-1.0]).unwrap(), 1);
        assert_eq!(gowl.predict(&[1.0]).unwrap(), 2);
    }

    #[test]
    fn owl_fit_depends_on_shift_constant() {
        // the toy pair plus two placebo patients
        let d = Dataset::with_uniform_propensity(
            array![[-1.0], [1.0], [0.3], [0.6]],
            vec![2, 2, 1, 1],
            vec![-10.0, 10.0, 2.0, -4.0],
            2,
        )
        .unwrap();
        let values: Vec<Vec<f64>> = [15.0, 40.0]
            .iter()
            .map(|&c| {
                let rule = fit_owl_with(
                    &d,
                    1.0,
                    KernelSpec::Linear,
                    ShiftRule::Constant(c),
                    &SolverConfig::default(),
                )
                .unwrap();
                [-1.0, 0.0, 1.0]
                    .iter()
                    .map(|&x| rule.decision_values(&[x]).unwrap()[0])
                    .collect()
            })
            .collect();
        let spread = values[0]
            .iter()
            .zip(&values[1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(spread > 1e-3, "{values:?}");
    }

    #[test]
    fn gowl_weights_are_unshifted() {
        let d = Dataset::with_uniform_propensity(array![[0.0], [1.0]], vec![1, 2], vec![-2.0, 3.0], 2).unwrap();
        let rows = duplicate(&d).unwrap();
        assert_eq!(rows[0].weight, 4.0);
        assert_eq!(rows[1].weight, 6.0);
    }
}

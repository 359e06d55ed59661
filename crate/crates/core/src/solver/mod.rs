//! Fitting a GOWL rule: duplicate, solve the dual, recover `g`, then the
//! per-threshold intercepts.

mod dual;
mod intercept;

pub use dual::{solve_dual, DualProblem, DualSolution, SolverConfig};
pub use intercept::{project_monotone, recover_intercepts, threshold_loss, InterceptFit};

use crate::data::Dataset;
use crate::duplication::{duplicate_with, DuplicatedSample, Strategy};
use crate::error::{Error, Result};
use crate::kernel::{Gram, KernelSpec};
use crate::rule::{DecisionFunction, FittedRule, TreatmentRule};

/// Eigenvalue floor for the base Gram matrix.
pub const GRAM_EIGEN_FLOOR: f64 = -1e-8;
/// Diagonal jitter added beyond the floor when a Gram matrix breaches it.
pub const GRAM_JITTER: f64 = 1e-10;

/// `C = 1 / (2 λ)`: dividing the penalised objective by `2 λ` gives
/// `½ ‖f‖² + C Σ loss`.
pub fn lambda_to_c(lambda: f64) -> f64 {
    1.0 / (2.0 * lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub lambda: f64,
    pub kernel: KernelSpec,
    pub strategy: Strategy,
    /// Solver settings; `c` is overwritten from `lambda`.
    pub solver: SolverConfig,
    /// Project intercepts onto a monotone sequence after recovery. The
    /// direction follows the sign of the mean reward (decreasing when
    /// positive).
    pub monotone_intercepts: bool,
}

impl FitOptions {
    pub fn new(lambda: f64, kernel: KernelSpec) -> Self {
        Self {
            lambda,
            kernel,
            strategy: Strategy::Full,
            solver: SolverConfig::default(),
            monotone_intercepts: false,
        }
    }

    pub fn strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }
}

/// A fitted rule together with the solver state it came from.
#[derive(Debug, Clone)]
pub struct Fit {
    pub rule: FittedRule,
    pub dual: DualSolution,
    pub rows: Vec<DuplicatedSample>,
    /// `g(x_i)` at the training points.
    pub train_scores: Vec<f64>,
}

/// Fits with default solver settings.
pub fn fit(data: &Dataset, lambda: f64, kernel: KernelSpec, strategy: Strategy) -> Result<FittedRule> {
    Ok(fit_with(data, &FitOptions::new(lambda, kernel).strategy(strategy))?.rule)
}

pub fn fit_with(data: &Dataset, options: &FitOptions) -> Result<Fit> {
    if !(options.lambda.is_finite() && options.lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {}",
            options.lambda
        )));
    }
    options.kernel.validate()?;
    let rows = duplicate_with(data, options.strategy)?;
    let mut gram = Gram::new(&options.kernel, (0..data.len()).map(|i| data.row(i)));
    if data.len() <= options.solver.psd_check_max_points {
        let min_eig = gram.min_eigenvalue();
        if min_eig < GRAM_EIGEN_FLOOR {
            gram.add_to_diagonal(-min_eig + GRAM_JITTER);
        }
    }
    let solver = SolverConfig {
        c: lambda_to_c(options.lambda),
        ..options.solver.clone()
    };
    let dual = solve_dual(&rows, &gram, &solver)?;

    let coeffs = recover_coeffs_kernel(&dual, &rows, data.len());
    let train_scores: Vec<f64> = (0..data.len())
        .map(|i| gram.row(i).iter().zip(&coeffs).map(|(k, c)| k * c).sum())
        .collect();
    let InterceptFit {
        mut intercepts,
        degenerate,
    } = recover_intercepts(&train_scores, &rows, data.levels())?;
    if options.monotone_intercepts {
        let mean_reward = data.reward().iter().sum::<f64>() / data.len() as f64;
        intercepts = project_monotone(&intercepts, mean_reward >= 0.0);
    }

    let function = match options.kernel {
        KernelSpec::Linear => DecisionFunction::Linear {
            beta: recover_slope_linear(&dual, &rows, data)?,
        },
        spec => DecisionFunction::Kernel {
            spec,
            support: data.x().clone(),
            coeffs,
        },
    };
    let rule = FittedRule {
        function,
        intercepts,
        levels: data.levels(),
        lambda: options.lambda,
        c: solver.c,
        kkt_violation: dual.kkt_violation,
        converged: dual.converged,
        degenerate_thresholds: degenerate,
    };
    Ok(Fit {
        rule,
        dual,
        rows,
        train_scores,
    })
}

/// `β = Σ_{i,k} (alpha - eta) a x_i`; the `e_k` block of the duplicated slope
/// is dropped in favour of the separately recovered intercepts.
pub fn recover_slope_linear(dual: &DualSolution, rows: &[DuplicatedSample], data: &Dataset) -> Result<Vec<f64>> {
    if dual.alpha.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: dual.alpha.len(),
        });
    }
    let mut beta = vec![0.0; data.dim()];
    for (m, s) in dual.signed_multipliers().iter().zip(rows) {
        if *m == 0.0 {
            continue;
        }
        let c = m * s.label as f64;
        for (b, x) in beta.iter_mut().zip(data.row(s.base_index)) {
            *b += c * x;
        }
    }
    Ok(beta)
}

/// `c_j = Σ_h (alpha_j^(h) - eta_j^(h)) a_j^(h)` for each training point `j`.
pub fn recover_coeffs_kernel(dual: &DualSolution, rows: &[DuplicatedSample], n: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; n];
    for (m, s) in dual.signed_multipliers().iter().zip(rows) {
        coeffs[s.base_index] += m * s.label as f64;
    }
    coeffs
}

/// `Σ_k I(g(x) + b_k > 0) + 1`
pub fn predict(rule: &FittedRule, x: &[f64]) -> Result<usize> {
    rule.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duplication::duplicate;
    use ndarray::{array, Array2};

    fn toy(n: usize, levels: usize, seed: u64) -> Dataset {
        // deterministic pseudo-random toy data
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        let x = Array2::from_shape_fn((n, 2), |_| next() * 2.0 - 1.0);
        let a: Vec<usize> = (0..n).map(|i| i % levels + 1).collect();
        let r: Vec<f64> = (0..n).map(|i| x[[i, 0]] * (a[i] as f64 - 1.5) + next() - 0.3).collect();
        Dataset::with_uniform_propensity(x, a, r, levels).unwrap()
    }

    #[test]
    fn slope_from_single_active_row() {
        let d = Dataset::with_uniform_propensity(array![[2.0, 0.0]], vec![2], vec![1.0], 2).unwrap();
        let rows = duplicate(&d).unwrap();
        let dual = DualSolution {
            alpha: vec![0.5],
            eta: vec![0.0],
            dual_objective: 0.0,
            primal_objective: 0.0,
            duality_gap: 0.0,
            offset: 0.0,
            kkt_violation: 0.0,
            iterations: 0,
            converged: true,
            trace: vec![],
        };
        assert_eq!(recover_slope_linear(&dual, &rows, &d).unwrap(), vec![1.0, 0.0]);
        assert_eq!(recover_coeffs_kernel(&dual, &rows, 1), vec![0.5]);
        let zero = DualSolution {
            alpha: vec![0.0],
            ..dual
        };
        assert_eq!(recover_slope_linear(&zero, &rows, &d).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_and_kernel_scores_agree() {
        let d = toy(30, 3, 4);
        let fit = fit_with(&d, &FitOptions::new(0.05, KernelSpec::Linear)).unwrap();
        for i in 0..d.len() {
            let g = fit.rule.score(d.row(i)).unwrap();
            assert!((g - fit.train_scores[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn decision_differences_are_intercept_differences() {
        let d = toy(25, 4, 9);
        let rule = fit(&d, 0.1, KernelSpec::gaussian(1.0).unwrap(), Strategy::Full).unwrap();
        for x in [[0.1, 0.2], [-0.9, 0.4], [0.7, -0.7]] {
            let f = rule.decision_values(&x).unwrap();
            for k in 0..3 {
                for h in 0..3 {
                    let diff = (f[k] - f[h]) - (rule.intercepts[k] - rule.intercepts[h]);
                    assert!(diff.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn heavy_regularisation_gives_constant_rule() {
        let d = toy(40, 3, 2);
        let rule = fit(&d, 1e6, KernelSpec::Linear, Strategy::Full).unwrap();
        let DecisionFunction::Linear { beta } = &rule.function else {
            panic!("linear kernel yields a linear rule")
        };
        assert!(beta.iter().all(|b| b.abs() < 1e-4), "{beta:?}");
        let first = rule.predict(d.row(0)).unwrap();
        assert!((0..d.len()).all(|i| rule.predict(d.row(i)).unwrap() == first));
    }

    #[test]
    fn converged_fit_has_small_gap() {
        let d = toy(40, 3, 5);
        let fit = fit_with(&d, &FitOptions::new(0.02, KernelSpec::Linear)).unwrap();
        assert!(fit.dual.converged);
        assert!(fit.dual.duality_gap.abs() < 1e-3, "{}", fit.dual.duality_gap);
        assert!(fit.dual.kkt_violation < 1e-5);
    }

    #[test]
    fn trace_is_monotone() {
        let d = toy(40, 4, 11);
        let mut opts = FitOptions::new(0.01, KernelSpec::gaussian(0.7).unwrap());
        opts.solver.record_trace = true;
        let fit = fit_with(&d, &opts).unwrap();
        let trace = &fit.dual.trace;
        assert!(trace.len() >= 2);
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs())));
    }

    #[test]
    fn rejects_bad_lambda() {
        let d = toy(10, 2, 1);
        assert!(fit(&d, 0.0, KernelSpec::Linear, Strategy::Full).is_err());
        assert!(fit(&d, f64::NAN, KernelSpec::Linear, Strategy::Full).is_err());
    }

    #[test]
    fn monotone_projection_option() {
        let d = toy(30, 4, 3);
        let mut opts = FitOptions::new(0.1, KernelSpec::Linear);
        opts.monotone_intercepts = true;
        let rule = fit_with(&d, &opts).unwrap().rule;
        let mean = d.reward().iter().sum::<f64>() / d.len() as f64;
        let b = &rule.intercepts;
        if mean >= 0.0 {
            assert!(b.windows(2).all(|w| w[0] >= w[1]));
        } else {
            assert!(b.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

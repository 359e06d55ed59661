//! Lasso by cyclic coordinate descent with soft-thresholding.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Largest coefficient change (standardised scale) that ends the descent.
pub const LASSO_TOL: f64 = 1e-7;
const MAX_CYCLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    /// Unpenalised intercept on the original scale.
    pub intercept: f64,
    /// Coefficients on the original scale; constant columns get 0.
    pub coefs: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
    /// Objective on the standardised scale after each full cycle, starting
    /// from the zero solution.
    pub objective_trace: Vec<f64>,
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Minimises `(1/2n) ‖y - b0 - Z b‖² + λ ‖b‖₁` where `Z` is `x` with every
/// column centred and scaled to unit (population) variance.
pub fn fit_lasso(x: &Array2<f64>, y: &[f64], lambda: f64) -> Result<LassoFit> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("lasso needs at least one row".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lasso penalty must be >= 0, got {lambda}")));
    }
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / nf).collect();
    let sds: Vec<f64> = (0..p)
        .map(|j| {
            let var = x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / nf;
            var.sqrt()
        })
        .collect();
    let active: Vec<bool> = sds.iter().map(|&s| s > 1e-12).collect();
    // standardised columns, stored column-major
    let z: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            if active[j] {
                x.column(j).iter().map(|v| (v - means[j]) / sds[j]).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();

    let mut beta = vec![0.0; p];
    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let objective = |resid: &[f64], beta: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * nf) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut trace = vec![objective(&resid, &beta)];
    let mut converged = false;
    let mut cycles = 0;
    while cycles < MAX_CYCLES {
        cycles += 1;
        let mut max_change = 0.0f64;
        for j in (0..p).filter(|&j| active[j]) {
            let zj = &z[j];
            let rho = zj.iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / nf + beta[j];
            let updated = soft_threshold(rho, lambda);
            let delta = updated - beta[j];
            if delta != 0.0 {
                for (r, zv) in resid.iter_mut().zip(zj) {
                    *r -= zv * delta;
                }
                beta[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(objective(&resid, &beta));
        if max_change < LASSO_TOL {
            converged = true;
            break;
        }
    }

    let coefs: Vec<f64> = (0..p).map(|j| if active[j] { beta[j] / sds[j] } else { 0.0 }).collect();
    let intercept = y_mean - coefs.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    Ok(LassoFit {
        intercept,
        coefs,
        cycles,
        converged,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn null_solution_above_lambda_max() {
        let x = array![[1.0, 0.5], [2.0, -1.0], [3.0, 0.0], [4.0, 2.0], [0.0, 1.0]];
        let y = [1.0, 3.0, 2.0, 5.0, 0.5];
        // λ_max = max |Zᵀ(y - ȳ)| / n on the standardised scale
        let nf = 5.0;
        let ybar = y.iter().sum::<f64>() / nf;
        let lambda_max = (0..2)
            .map(|j| {
                let col = x.column(j);
                let m = col.sum() / nf;
                let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / nf).sqrt();
                (col.iter().zip(&y).map(|(v, t)| (v - m) / sd * (t - ybar)).sum::<f64>() / nf).abs()
            })
            .fold(0.0, f64::max);
        let fit = fit_lasso(&x, &y, lambda_max * 1.0001).unwrap();
        assert!(fit.coefs.iter().all(|&c| c == 0.0));
        assert!((fit.intercept - ybar).abs() < 1e-12);
        let fit = fit_lasso(&x, &y, lambda_max * 0.9).unwrap();
        assert!(fit.coefs.iter().any(|&c| c != 0.0));
    }

    #[test]
    fn unpenalised_single_covariate_is_ols() {
        let x = array![[0.3], [1.7], [-0.4], [2.2], [0.9], [1.1]];
        let y = [1.0, 4.1, -0.2, 5.0, 2.6, 2.0];
        let n = 6.0;
        let mx = x.column(0).sum() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.column(0).iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.column(0).iter().map(|a| (a - mx).powi(2)).sum();
        let fit = fit_lasso(&x, &y, 0.0).unwrap();
        assert!((fit.coefs[0] - sxy / sxx).abs() < 1e-10);
        assert!((fit.intercept - (my - sxy / sxx * mx)).abs() < 1e-10);
    }

    #[test]
    fn orthonormal_design_soft_thresholds_ols() {
        // centred ±1 columns, mutually orthogonal, unit population variance
        let x = Array2::from_shape_vec(
            (8, 3),
            vec![
                1., 1., 1., -1., 1., -1., 1., -1., -1., -1., -1., 1., 1., 1., -1., -1., 1., 1., 1., -1., 1., -1., -1.,
                -1.,
            ],
        )
        .unwrap();
        for j in 0..3 {
            assert_eq!(x.column(j).sum(), 0.0);
            for h in 0..j {
                assert_eq!(x.column(j).dot(&x.column(h)), 0.0);
            }
        }
        let y = [2.0, -1.0, 0.5, 3.0, 1.5, -0.5, 0.0, 2.5];
        let lambda = 0.3;
        let fit = fit_lasso(&x, &y, lambda).unwrap();
        for j in 0..3 {
            let ols = x.column(j).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / 8.0;
            assert!((fit.coefs[j] - soft_threshold(ols, lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_gets_zero() {
        let x = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let fit = fit_lasso(&x, &[0.0, 1.0, 2.0, 3.5], 0.01).unwrap();
        assert_eq!(fit.coefs[0], 0.0);
        assert!(fit.coefs[1] > 0.9);
    }

    #[test]
    fn objective_never_increases() {
        let x = Array2::from_shape_fn((30, 5), |(i, j)| {
            ((i * 7 + j * 13) % 11) as f64 - 5.0 + (j as f64) * 0.1 * i as f64
        });
        let y: Vec<f64> = (0..30).map(|i| (i % 7) as f64 - 0.3 * i as f64).collect();
        let fit = fit_lasso(&x, &y, 0.05).unwrap();
        assert!(fit.converged);
        assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

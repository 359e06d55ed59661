//! Treatment propensities `π(a | x)`.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Floor applied to propensities that feed inverse-propensity weights.
pub const DEFAULT_PROBABILITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum PropensityModel {
    /// `π = 1/K`
    Uniform { levels: usize },
    /// Level frequencies, constant in `x`.
    Empirical { probs: Vec<f64> },
    /// `P(A <= k | x) = logistic(θ_k - x·γ)`
    ProportionalOdds { cutpoints: Vec<f64>, slope: Vec<f64> },
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl PropensityModel {
    pub fn levels(&self) -> usize {
        match self {
            PropensityModel::Uniform { levels } => *levels,
            PropensityModel::Empirical { probs } => probs.len(),
            PropensityModel::ProportionalOdds { cutpoints, .. } => cutpoints.len() + 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PropensityModel::Uniform { .. } => "uniform",
            PropensityModel::Empirical { .. } => "empirical",
            PropensityModel::ProportionalOdds { .. } => "proportional_odds",
        }
    }

    /// Class probabilities `π(1 | x), ..., π(K | x)`.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            PropensityModel::Uniform { levels } => Ok(vec![1.0 / *levels as f64; *levels]),
            PropensityModel::Empirical { probs } => Ok(probs.clone()),
            PropensityModel::ProportionalOdds { cutpoints, slope } => {
                if x.len() != slope.len() {
                    return Err(Error::DimensionMismatch {
                        expected: slope.len(),
                        found: x.len(),
                    });
                }
                let eta: f64 = x.iter().zip(slope).map(|(a, b)| a * b).sum();
                let mut probs = Vec::with_capacity(cutpoints.len() + 1);
                let mut prev = 0.0;
                for theta in cutpoints {
                    let cum = logistic(theta - eta);
                    probs.push(cum - prev);
                    prev = cum;
                }
                probs.push(1.0 - prev);
                Ok(probs)
            }
        }
    }

    /// `max(π(a | x), floor)` for a 1-based level `a`.
    pub fn propensity(&self, x: &[f64], a: usize, floor: f64) -> Result<f64> {
        let levels = self.levels();
        if a < 1 || a > levels {
            return Err(Error::InvalidInput(format!("treatment {a} outside 1..={levels}")));
        }
        Ok(self.probabilities(x)?[a - 1].max(floor))
    }

    /// Replaces the dataset's propensity column with this model's values.
    pub fn apply(&self, data: &Dataset, floor: f64) -> Result<Dataset> {
        if self.levels() != data.levels() {
            return Err(Error::DimensionMismatch {
                expected: data.levels(),
                found: self.levels(),
            });
        }
        let pi = (0..data.len())
            .map(|i| {
                self.propensity(data.row(i), data.treatment()[i], floor)
                    .map(|p| p.min(1.0))
            })
            .collect::<Result<Vec<_>>>()?;
        data.with_propensity(pi)
    }
}

pub fn empirical_propensity(data: &Dataset) -> Result<PropensityModel> {
    let counts = data.level_counts();
    if let Some(level) = counts.iter().position(|&c| c == 0) {
        return Err(Error::UnobservedLevel(level + 1));
    }
    let n = data.len() as f64;
    Ok(PropensityModel::Empirical {
        probs: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Outcome of a proportional-odds fit. A non-converged fit still carries
/// its last iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionalOddsFit {
    pub model: PropensityModel,
    pub converged: bool,
    pub iterations: usize,
    /// `‖∇ NLL‖_∞` at the returned iterate.
    pub gradient_norm: f64,
    /// Negative log-likelihood after each accepted step, starting from the
    /// initial point.
    pub nll_trace: Vec<f64>,
    /// Standard errors for `(θ_1..θ_{K-1}, γ)` from the inverse Hessian.
    pub std_errors: Vec<f64>,
    /// Set when a step had to be rejected to keep cutpoints increasing.
    pub cutpoint_projection: bool,
}

const GRADIENT_TOL: f64 = 1e-6;
const MAX_NEWTON: usize = 200;
const MAX_HALVINGS: usize = 50;

/// Maximum likelihood by damped Newton with step halving.
pub fn fit_proportional_odds(x: &Array2<f64>, treatment: &[usize], levels: usize) -> Result<ProportionalOddsFit> {
    let (n, p) = x.dim();
    if treatment.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: treatment.len(),
        });
    }
    if levels < 2 {
        return Err(Error::InvalidInput(format!("need K >= 2, got {levels}")));
    }
    if n <= p + levels {
        return Err(Error::InvalidInput(format!(
            "need n > p + K, got n={n}, p={p}, K={levels}"
        )));
    }
    let mut counts = vec![0usize; levels];
    for &a in treatment {
        if a < 1 || a > levels {
            return Err(Error::InvalidInput(format!("treatment {a} outside 1..={levels}")));
        }
        counts[a - 1] += 1;
    }
    if let Some(level) = counts.iter().position(|&c| c == 0) {
        return Err(Error::UnobservedLevel(level + 1));
    }

    let q = levels - 1;
    let mut params = DVector::zeros(q + p);
    let mut cum = 0usize;
    for k in 0..q {
        cum += counts[k];
        let f = cum as f64 / n as f64;
        params[k] = (f / (1.0 - f)).ln();
    }

    let problem = PoProblem { x, treatment, q };
    let mut nll = problem.nll(&params);
    let mut trace = vec![nll];
    let mut converged = false;
    let mut projected = false;
    let mut iterations = 0;
    let (mut grad, mut hess) = problem.derivatives(&params);
    for _ in 0..MAX_NEWTON {
        if grad.amax() < GRADIENT_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let step = newton_direction(&hess, &grad);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &params + t * &step;
            if !increasing(&candidate.as_slice()[..q]) {
                projected = true;
            } else {
                let value = problem.nll(&candidate);
                if value.is_finite() && value <= nll {
                    accepted = Some((candidate, value));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((candidate, value)) = accepted else {
            break;
        };
        params = candidate;
        nll = value;
        trace.push(nll);
        (grad, hess) = problem.derivatives(&params);
    }
    if !converged && grad.amax() < GRADIENT_TOL {
        converged = true;
    }

    let std_errors = match hess.clone().try_inverse() {
        Some(inv) => (0..q + p).map(|j| inv[(j, j)].max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; q + p],
    };
    Ok(ProportionalOddsFit {
        model: PropensityModel::ProportionalOdds {
            cutpoints: params.as_slice()[..q].to_vec(),
            slope: params.as_slice()[q..].to_vec(),
        },
        converged,
        iterations,
        gradient_norm: grad.amax(),
        nll_trace: trace,
        std_errors,
        cutpoint_projection: projected,
    })
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Newton direction for the NLL; falls back to Levenberg damping when the
/// Hessian is not numerically positive definite.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let dim = grad.len();
    let scale = hess.diagonal().amax().max(1.0);
    let mut mu = 0.0;
    loop {
        let damped = hess + DMatrix::identity(dim, dim) * mu;
        if let Some(chol) = damped.cholesky() {
            return -chol.solve(grad);
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
        if mu > 1e10 * scale {
            return -grad / scale;
        }
    }
}

struct PoProblem<'a> {
    x: &'a Array2<f64>,
    treatment: &'a [usize],
    q: usize,
}

impl PoProblem<'_> {
    /// `(F(upper), F(lower))` for row `i`, with the open ends at 1 and 0.
    fn bounds(&self, params: &DVector<f64>, i: usize) -> (Option<f64>, Option<f64>) {
        let eta: f64 = self
            .x
            .row(i)
            .iter()
            .zip(&params.as_slice()[self.q..])
            .map(|(a, b)| a * b)
            .sum();
        let a = self.treatment[i];
        let upper = (a <= self.q).then(|| params[a - 1] - eta);
        let lower = (a >= 2).then(|| params[a - 2] - eta);
        (upper, lower)
    }

    fn nll(&self, params: &DVector<f64>) -> f64 {
        (0..self.x.nrows())
            .map(|i| {
                let (u, l) = self.bounds(params, i);
                let prob = u.map_or(1.0, logistic) - l.map_or(0.0, logistic);
                -prob.ln()
            })
            .sum()
    }

    /// Gradient and Hessian of the NLL.
    fn derivatives(&self, params: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let dim = params.len();
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        let mut du = DVector::zeros(dim);
        let mut dl = DVector::zeros(dim);
        for i in 0..self.x.nrows() {
            let (u, l) = self.bounds(params, i);
            let a = self.treatment[i];
            // derivatives of the two linear predictors w.r.t. parameters
            du.fill(0.0);
            dl.fill(0.0);
            for (j, xv) in self.x.row(i).iter().enumerate() {
                du[self.q + j] = -xv;
                dl[self.q + j] = -xv;
            }
            let (fu, du1, du2) = match u {
                Some(t) => {
                    du[a - 1] = 1.0;
                    let s = logistic(t);
                    (s, s * (1.0 - s), s * (1.0 - s) * (1.0 - 2.0 * s))
                }
                None => (1.0, 0.0, 0.0),
            };
            let (fl, dl1, dl2) = match l {
                Some(t) => {
                    dl[a - 2] = 1.0;
                    let s = logistic(t);
                    (s, s * (1.0 - s), s * (1.0 - s) * (1.0 - 2.0 * s))
                }
                None => (0.0, 0.0, 0.0),
            };
            let prob = fu - fl;
            let g = (&du * du1 - &dl * dl1) / prob;
            grad -= &g;
            hess -= (&du * du.transpose() * du2 - &dl * dl.transpose() * dl2) / prob;
            hess += &g * g.transpose();
        }
        (grad, hess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simulate(n: usize, cutpoints: &[f64], slope: &[f64], seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = PropensityModel::ProportionalOdds {
            cutpoints: cutpoints.to_vec(),
            slope: slope.to_vec(),
        };
        let x = Array2::from_shape_fn((n, slope.len()), |_| rng.random_range(-1.0..1.0));
        let a = (0..n)
            .map(|i| {
                let probs = model.probabilities(x.row(i).as_slice().unwrap()).unwrap();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return k + 1;
                    }
                }
                probs.len()
            })
            .collect();
        (x, a)
    }

    #[test]
    fn empirical_examples() {
        let x = Array2::zeros((100, 1));
        let a: Vec<usize> = (0..100).map(|i| i % 5 + 1).collect();
        let d = Dataset::with_uniform_propensity(x, a, vec![0.0; 100], 5).unwrap();
        let PropensityModel::Empirical { probs } = empirical_propensity(&d).unwrap() else {
            unreachable!()
        };
        assert!(probs.iter().all(|&p| (p - 0.2).abs() < 1e-15));

        let a: Vec<usize> = (0..100).map(|i| if i < 30 { 1 } else { 2 }).collect();
        let d = Dataset::with_uniform_propensity(Array2::zeros((100, 1)), a, vec![0.0; 100], 2).unwrap();
        let m = empirical_propensity(&d).unwrap();
        assert_eq!(m.probabilities(&[0.0]).unwrap(), vec![0.3, 0.7]);

        let d = Dataset::with_uniform_propensity(Array2::zeros((3, 1)), vec![1, 2, 4], vec![0.0; 3], 4).unwrap();
        assert_eq!(empirical_propensity(&d), Err(Error::UnobservedLevel(3)));
    }

    /// Plain logistic regression of `I(A = 2)` on `[1, x]` by gradient
    /// ascent, written independently of the Newton fit.
    fn logistic_oracle(x: &Array2<f64>, a: &[usize]) -> Vec<f64> {
        let (n, p) = x.dim();
        let mut w = vec![0.0; p + 1];
        for _ in 0..20_000 {
            let mut g = vec![0.0; p + 1];
            for i in 0..n {
                let z = w[0] + (0..p).map(|j| w[j + 1] * x[[i, j]]).sum::<f64>();
                let resid = (a[i] == 2) as u8 as f64 - logistic(z);
                g[0] += resid;
                for j in 0..p {
                    g[j + 1] += resid * x[[i, j]];
                }
            }
            for (wj, gj) in w.iter_mut().zip(&g) {
                *wj += 2.0 * gj / n as f64;
            }
        }
        w
    }

    #[test]
    fn binary_case_is_logistic_regression() {
        let (x, a) = simulate(400, &[0.2], &[1.5, -0.7], 1);
        let fit = fit_proportional_odds(&x, &a, 2).unwrap();
        assert!(fit.converged);
        let PropensityModel::ProportionalOdds { cutpoints, slope } = &fit.model else {
            unreachable!()
        };
        let w = logistic_oracle(&x, &a);
        // P(A = 2) = logistic(x·γ - θ)
        assert!((-cutpoints[0] - w[0]).abs() < 1e-4, "{cutpoints:?} {w:?}");
        assert!((slope[0] - w[1]).abs() < 1e-4);
        assert!((slope[1] - w[2]).abs() < 1e-4);
    }

    #[test]
    fn recovers_parameters_within_three_se() {
        let theta = [-1.0, 0.0, 1.2];
        let gamma = [0.8, -0.5];
        let (x, a) = simulate(2000, &theta, &gamma, 2);
        let fit = fit_proportional_odds(&x, &a, 4).unwrap();
        assert!(fit.converged);
        assert!(fit.gradient_norm < 1e-6);
        let PropensityModel::ProportionalOdds { cutpoints, slope } = &fit.model else {
            unreachable!()
        };
        let estimates: Vec<f64> = cutpoints.iter().chain(slope).copied().collect();
        let truth: Vec<f64> = theta.iter().chain(&gamma).copied().collect();
        for ((e, t), se) in estimates.iter().zip(&truth).zip(&fit.std_errors) {
            assert!((e - t).abs() < 3.0 * se, "{e} vs {t} (se {se})");
        }
    }

    #[test]
    fn independent_treatment_matches_frequencies() {
        let (x, a) = simulate(2000, &[-0.5, 0.6], &[0.0, 0.0, 0.0], 3);
        let fit = fit_proportional_odds(&x, &a, 3).unwrap();
        let mut freq = [0.0; 3];
        for &v in &a {
            freq[v - 1] += 1.0 / 2000.0;
        }
        for i in (0..2000).step_by(97) {
            let probs = fit.model.probabilities(x.row(i).as_slice().unwrap()).unwrap();
            for (p, f) in probs.iter().zip(&freq) {
                assert!((p - f).abs() < 0.02);
            }
        }
    }

    #[test]
    fn likelihood_decreases_monotonically() {
        let (x, a) = simulate(300, &[-0.3, 0.4, 1.1], &[2.0, -1.0, 0.5], 4);
        let fit = fit_proportional_odds(&x, &a, 4).unwrap();
        assert!(fit.nll_trace.windows(2).all(|w| w[1] <= w[0]));
        let PropensityModel::ProportionalOdds { cutpoints, .. } = &fit.model else {
            unreachable!()
        };
        assert!(increasing(cutpoints));
    }

    #[test]
    fn separation_is_flagged_not_fatal() {
        let x = array![[-2.0], [-1.5], [-1.0], [-0.5], [0.5], [1.0], [1.5], [2.0]];
        let a = vec![1, 1, 1, 1, 2, 2, 2, 2];
        let fit = fit_proportional_odds(&x, &a, 2).unwrap();
        assert!(!fit.converged || fit.gradient_norm < 1e-6);
        assert!(fit.nll_trace.last().unwrap() < &fit.nll_trace[0]);
    }

    #[test]
    fn preconditions() {
        let x = Array2::zeros((4, 2));
        assert!(fit_proportional_odds(&x, &[1, 2, 1, 2], 2).is_err());
        let x = Array2::zeros((10, 1));
        let a = vec![1, 2, 1, 2, 1, 2, 1, 2, 1, 2];
        assert_eq!(fit_proportional_odds(&x, &a, 3).unwrap_err(), Error::UnobservedLevel(3));
    }

    #[test]
    fn floor_and_apply() {
        let m = PropensityModel::ProportionalOdds {
            cutpoints: vec![-40.0],
            slope: vec![0.0],
        };
        assert_eq!(m.propensity(&[0.0], 1, 1e-6).unwrap(), 1e-6);
        let d = Dataset::with_uniform_propensity(array![[0.0], [1.0]], vec![1, 2], vec![1.0, 2.0], 2).unwrap();
        let applied = m.apply(&d, 1e-6).unwrap();
        assert_eq!(applied.propensity()[0], 1e-6);
        assert!((applied.propensity()[1] - 1.0).abs() < 1e-12);
    }
}

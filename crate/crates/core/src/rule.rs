use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Anything that maps covariates to an ordinal treatment through K-1
/// per-threshold decision values.
pub trait TreatmentRule: Send + Sync {
    fn levels(&self) -> usize;

    fn dim(&self) -> usize;

    /// Decision values `f(x^(k))` for `k = 1..K-1`.
    fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `Σ_k I(f(x^(k)) > 0) + 1`
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.decision_values(x)?.iter().filter(|&&v| v > 0.0).count() + 1)
    }
}

/// The treatment-invariant part `g(x)` of a fitted decision function.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionFunction {
    Linear {
        beta: Vec<f64>,
    },
    Kernel {
        spec: KernelSpec,
        /// Training covariates, one row per support point.
        support: Array2<f64>,
        coeffs: Vec<f64>,
    },
}

impl DecisionFunction {
    pub fn dim(&self) -> usize {
        match self {
            DecisionFunction::Linear { beta } => beta.len(),
            DecisionFunction::Kernel { support, .. } => support.ncols(),
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        match self {
            DecisionFunction::Linear { .. } => KernelSpec::Linear,
            DecisionFunction::Kernel { spec, .. } => *spec,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(match self {
            DecisionFunction::Linear { beta } => beta.iter().zip(x).map(|(b, v)| b * v).sum(),
            DecisionFunction::Kernel { spec, support, coeffs } => support
                .rows()
                .into_iter()
                .zip(coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(row, &c)| c * spec.eval(row.as_slice().expect("standard layout"), x))
                .sum(),
        })
    }
}

/// A fitted ordinal rule `f(x^(k)) = g(x) + b_k`.
///
/// All thresholds share `g`, so `f(x^(k)) - f(x^(h)) = b_k - b_h` for every
/// `x` and the K-1 boundaries never cross.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedRule {
    pub function: DecisionFunction,
    /// `b_1..b_{K-1}`
    pub intercepts: Vec<f64>,
    pub levels: usize,
    pub lambda: f64,
    pub c: f64,
    pub kkt_violation: f64,
    pub converged: bool,
    /// Thresholds whose intercept had no weighted rows and was set to 0.
    pub degenerate_thresholds: Vec<usize>,
}

impl FittedRule {
    pub fn kernel(&self) -> KernelSpec {
        self.function.kernel()
    }

    /// `g(x)`
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.function.eval(x)
    }

    /// True when the intercepts are strictly decreasing or strictly increasing.
    pub fn has_monotone_intercepts(&self) -> bool {
        let b = &self.intercepts;
        b.windows(2).all(|w| w[0] > w[1]) || b.windows(2).all(|w| w[0] < w[1])
    }
}

impl TreatmentRule for FittedRule {
    fn levels(&self) -> usize {
        self.levels
    }

    fn dim(&self) -> usize {
        self.function.dim()
    }

    fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.function.eval(x)?;
        Ok(self.intercepts.iter().map(|b| g + b).collect())
    }
}

/// Rule that assigns a fixed treatment to everyone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantRule {
    pub treatment: usize,
    pub levels: usize,
    pub dim: usize,
}

impl TreatmentRule for ConstantRule {
    fn levels(&self) -> usize {
        self.levels
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(staircase(self.treatment, self.levels))
    }
}

/// Decision values `±1` that predict `level`: `+1` below it, `-1` from it on.
pub fn staircase(level: usize, levels: usize) -> Vec<f64> {
    (1..levels).map(|k| if level > k { 1.0 } else { -1.0 }).collect()
}

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{empirical_value, misclassification};
use crate::kernel::KernelSpec;
use crate::model::{fit_model, Method, Model};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Gaussian,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Gaussian => "gaussian",
        }
    }

    /// `Linear` or `Gaussian`, as used in report labels.
    pub fn title(&self) -> &'static str {
        match self {
            KernelKind::Linear => "Linear",
            KernelKind::Gaussian => "Gaussian",
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "gaussian" | "rbf" => Ok(KernelKind::Gaussian),
            other => Err(Error::InvalidInput(format!(
                "unknown kernel `{other}` (valid: linear, gaussian)"
            ))),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tuning-set selection criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion<'a> {
    /// Maximise the empirical value.
    Value,
    /// Minimise misclassification against known optimal treatments.
    Misc(&'a [usize]),
}

/// `λ = i / n` for each multiplier `i`, crossed with the bandwidths for the
/// Gaussian kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    pub lambda_multipliers: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub kernel: KernelKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lambda: f64,
    pub kernel: KernelSpec,
}

impl TuningGrid {
    pub const STANDARD_MULTIPLIERS: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 500.0];
    pub const STANDARD_SIGMAS: [f64; 3] = [0.1, 1.0, 10.0];

    pub fn standard(kernel: KernelKind) -> Self {
        Self {
            lambda_multipliers: Self::STANDARD_MULTIPLIERS.to_vec(),
            sigmas: Self::STANDARD_SIGMAS.to_vec(),
            kernel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_multipliers.is_empty() {
            return Err(Error::InvalidInput("lambda grid is empty".into()));
        }
        if self.kernel == KernelKind::Gaussian && self.sigmas.is_empty() {
            return Err(Error::InvalidInput("sigma grid is empty".into()));
        }
        if let Some(v) = self.lambda_multipliers.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidInput(format!("lambda multiplier {v} must be positive")));
        }
        Ok(())
    }

    /// Grid cells for a training set of size `n`.
    pub fn cells(&self, n: usize) -> Result<Vec<Cell>> {
        self.validate()?;
        let lambdas = self.lambda_multipliers.iter().map(|i| i / n as f64);
        Ok(match self.kernel {
            KernelKind::Linear => lambdas
                .map(|lambda| Cell {
                    lambda,
                    kernel: KernelSpec::Linear,
                })
                .collect(),
            KernelKind::Gaussian => {
                let mut cells = Vec::new();
                for lambda in lambdas {
                    for &sigma in &self.sigmas {
                        cells.push(Cell {
                            lambda,
                            kernel: KernelSpec::gaussian(sigma)?,
                        });
                    }
                }
                cells
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct Tuned {
    pub cell: Cell,
    pub model: Model,
    /// Criterion value of the chosen cell (value, or MISC).
    pub score: f64,
    /// Every cell with its criterion value or failure message.
    pub evaluated: Vec<(Cell, std::result::Result<f64, String>)>,
}

/// Fits every grid cell on `train` and keeps the best on `tune_set`; ties go
/// to the larger `λ`. Cells are fitted in parallel and selected in grid
/// order, so the outcome does not depend on scheduling.
pub fn tune(
    train: &Dataset,
    tune_set: &Dataset,
    method: Method,
    grid: &TuningGrid,
    criterion: Criterion<'_>,
    solver: &SolverConfig,
) -> Result<Tuned> {
    let mut cells = grid.cells(train.len())?;
    if !method.uses_kernel() {
        cells.dedup_by(|a, b| a.lambda == b.lambda);
        for c in &mut cells {
            c.kernel = KernelSpec::Linear;
        }
    }
    let results: Vec<Result<(Model, f64)>> = cells
        .par_iter()
        .map(|cell| {
            let model = fit_model(method, train, cell.lambda, cell.kernel, solver)?;
            let score = match criterion {
                Criterion::Value => empirical_value(&model, tune_set)?,
                Criterion::Misc(truth) => misclassification(&model, tune_set, truth)?,
            };
            if !score.is_finite() {
                return Err(Error::Numerical(format!("criterion evaluated to {score}")));
            }
            Ok((model, score))
        })
        .collect();

    let better = |score: f64, lambda: f64, best: (f64, f64)| {
        let (best_score, best_lambda) = best;
        let improves = match criterion {
            Criterion::Value => score > best_score,
            Criterion::Misc(_) => score < best_score,
        };
        improves || (score == best_score && lambda > best_lambda)
    };
    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = Vec::with_capacity(cells.len());
    for (idx, (cell, res)) in cells.iter().zip(&results).enumerate() {
        match res {
            Ok((_, score)) => {
                evaluated.push((*cell, Ok(*score)));
                let take = match best {
                    None => true,
                    Some((b, s)) => better(*score, cell.lambda, (s, cells[b].lambda)),
                };
                if take {
                    best = Some((idx, *score));
                }
            }
            Err(e) => evaluated.push((*cell, Err(e.to_string()))),
        }
    }
    let Some((idx, score)) = best else {
        return Err(Error::AllCellsFailed(
            evaluated
                .iter()
                .map(|(c, r)| format!("{}: {}", describe(c), r.as_ref().err().cloned().unwrap_or_default()))
                .collect(),
        ));
    };
    let model = results
        .into_iter()
        .nth(idx)
        .and_then(|r| r.ok())
        .map(|(m, _)| m)
        .ok_or_else(|| Error::Numerical("selected cell lost its model".into()))?;
    Ok(Tuned {
        cell: cells[idx],
        model,
        score,
        evaluated,
    })
}

fn describe(cell: &Cell) -> String {
    match cell.kernel.sigma() {
        Some(s) => format!("lambda={} sigma={s}", cell.lambda),
        None => format!("lambda={}", cell.lambda),
    }
}

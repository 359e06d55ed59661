//! Uniform handle over the estimation methods.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{fit_owl_with, fit_pls_l1, BaselineRule, ShiftRule};
use crate::data::Dataset;
use crate::duplication::Strategy;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::rule::{FittedRule, TreatmentRule};
use crate::solver::{fit_with, FitOptions, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Gowl {
        strategy: Strategy,
    },
    Owl {
        shift: ShiftRule,
    },
    /// Pairwise `ℓ1`-penalised least squares; the kernel is ignored.
    PlsL1,
}

impl Method {
    pub fn gowl() -> Self {
        Method::Gowl {
            strategy: Strategy::Full,
        }
    }

    pub fn owl() -> Self {
        Method::Owl {
            shift: ShiftRule::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gowl { .. } => "gowl",
            Method::Owl { .. } => "owl",
            Method::PlsL1 => "pls_l1",
        }
    }

    pub fn uses_kernel(&self) -> bool {
        !matches!(self, Method::PlsL1)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gowl" => Ok(Method::gowl()),
            "owl" => Ok(Method::owl()),
            "pls_l1" | "pls-l1" => Ok(Method::PlsL1),
            other => Err(Error::InvalidInput(format!(
                "unknown method `{other}` (valid: gowl, owl, pls_l1)"
            ))),
        }
    }
}

/// Any fitted rule produced by [`fit_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gowl(FittedRule),
    Baseline(BaselineRule),
}

impl TreatmentRule for Model {
    fn levels(&self) -> usize {
        match self {
            Model::Gowl(r) => r.levels(),
            Model::Baseline(r) => r.levels(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Gowl(r) => r.dim(),
            Model::Baseline(r) => r.dim(),
        }
    }

    fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Gowl(r) => r.decision_values(x),
            Model::Baseline(r) => r.decision_values(x),
        }
    }
}

pub fn fit_model(
    method: Method,
    data: &Dataset,
    lambda: f64,
    kernel: KernelSpec,
    solver: &SolverConfig,
) -> Result<Model> {
    match method {
        Method::Gowl { strategy } => {
            let options = FitOptions {
                solver: solver.clone(),
                ..FitOptions::new(lambda, kernel).strategy(strategy)
            };
            Ok(Model::Gowl(fit_with(data, &options)?.rule))
        }
        Method::Owl { shift } => Ok(Model::Baseline(fit_owl_with(data, lambda, kernel, shift, solver)?)),
        Method::PlsL1 => Ok(Model::Baseline(fit_pls_l1(data, lambda)?)),
    }
}

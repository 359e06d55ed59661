//! Generalized outcome weighted learning for ordinal treatments.
//!
//! The K-level problem is duplicated into K-1 coupled binary problems that
//! share one score `g(x)` and differ only in their intercepts. The fitted
//! rule recommends `Σ_k I(g(x) + b_k > 0) + 1`.

pub mod baselines;
pub mod data;
pub mod duplication;
pub mod error;
pub mod evaluation;
pub mod kernel;
pub mod loss;
pub mod model;
pub mod propensity;
pub mod rule;
pub mod simulation;
pub mod solver;

pub use baselines::{fit_owl, fit_pls_l1, BaselineMethod, BaselineRule, ShiftRule, SubRule};
pub use data::Dataset;
pub use duplication::{duplicate, duplicate_partial, duplicate_with, DuplicatedSample, Strategy};
pub use error::{Error, Result};
pub use evaluation::{
    cross_validate, empirical_value, misclassification, run_scenario, tune, value_mse, BenchConfig, CvConfig, CvReport,
    EvalReport, KernelKind, MethodSpec, TuningGrid,
};
pub use kernel::{extended_kernel, Gram, KernelSpec};
pub use loss::{modified_hinge, sign};
pub use model::{fit_model, Method, Model};
pub use propensity::{empirical_propensity, fit_proportional_odds, PropensityModel};
pub use rule::{ConstantRule, DecisionFunction, FittedRule, TreatmentRule};
pub use simulation::{generate, true_optimal, LabeledDataset, OracleRule, ScenarioConfig, ScenarioId};
pub use solver::{fit, fit_with, predict, DualSolution, Fit, FitOptions, SolverConfig};

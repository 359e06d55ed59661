//! Optional JSON configuration file. Every field may be overridden by the
//! matching command-line flag.

use std::path::Path;
use std::str::FromStr;

use ordinal_itr::{KernelKind, KernelSpec, Method, ShiftRule, Strategy, TuningGrid};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub kernel: Option<String>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub sigma_grid: Option<Vec<f64>>,
    pub strategy: Option<String>,
    pub propensity: Option<String>,
    pub levels: Option<usize>,
    pub shift: Option<f64>,
    pub scenario: Option<String>,
    pub scenarios: Option<Vec<String>>,
    pub methods: Option<Vec<String>>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub reps: Option<usize>,
    pub criterion: Option<String>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Where per-row propensities come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropensitySource {
    Uniform,
    Empirical,
    ProportionalOdds,
    Column,
}

impl FromStr for PropensitySource {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "empirical" => Ok(Self::Empirical),
            "proportional_odds" | "proportional-odds" => Ok(Self::ProportionalOdds),
            "column" => Ok(Self::Column),
            other => Err(CliError::Usage(format!(
                "unknown propensity source `{other}` (valid: uniform, empirical, proportional_odds, column)"
            ))),
        }
    }
}

pub fn parse_strategy(s: &str) -> CliResult<Strategy> {
    match s.trim().to_ascii_lowercase().as_str() {
        "full" => Ok(Strategy::Full),
        "partial" => Ok(Strategy::Partial),
        other => Err(CliError::Usage(format!(
            "unknown duplication strategy `{other}` (valid: full, partial)"
        ))),
    }
}

/// Method with its duplication strategy or reward shift applied.
pub fn method(name: &str, strategy: Option<&str>, shift: Option<f64>) -> CliResult<Method> {
    let mut m = Method::from_str(name)?;
    match &mut m {
        Method::Gowl { strategy: s } => {
            if let Some(name) = strategy {
                *s = parse_strategy(name)?;
            }
        }
        Method::Owl { shift: s } => {
            if let Some(c) = shift {
                *s = ShiftRule::Constant(c);
            }
        }
        Method::PlsL1 => {}
    }
    Ok(m)
}

pub fn kernel_spec(kind: KernelKind, sigma: Option<f64>) -> CliResult<KernelSpec> {
    match kind {
        KernelKind::Linear => Ok(KernelSpec::Linear),
        KernelKind::Gaussian => {
            let sigma = sigma.ok_or_else(|| CliError::Usage("the gaussian kernel needs --sigma".into()))?;
            Ok(KernelSpec::gaussian(sigma)?)
        }
    }
}

/// A tuning grid from optional multiplier and bandwidth lists, defaulting to
/// the standard grid.
pub fn grid(kernel: KernelKind, lambdas: Option<Vec<f64>>, sigmas: Option<Vec<f64>>) -> CliResult<TuningGrid> {
    let mut g = TuningGrid::standard(kernel);
    if let Some(l) = lambdas {
        g.lambda_multipliers = l;
    }
    if let Some(s) = sigmas {
        g.sigmas = s;
    }
    g.validate()?;
    Ok(g)
}

pub fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required option --{flag} (flag or config file)")))
}

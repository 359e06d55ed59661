//! Benchmark scenarios with known optimal rules.
//!
//! Covariates are `U(-1, 1)`, treatments uniform on `1..=K` and independent
//! of `X`, and `R = Q(X, A) + N(0, 1)`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rule::{staircase, TreatmentRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    L2,
    L3,
    L5,
    L7,
    N2,
    N3,
    N5,
    N7,
    NP3,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 9] = [
        ScenarioId::L2,
        ScenarioId::L3,
        ScenarioId::L5,
        ScenarioId::L7,
        ScenarioId::N2,
        ScenarioId::N3,
        ScenarioId::N5,
        ScenarioId::N7,
        ScenarioId::NP3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioId::L2 => "L2",
            ScenarioId::L3 => "L3",
            ScenarioId::L5 => "L5",
            ScenarioId::L7 => "L7",
            ScenarioId::N2 => "N2",
            ScenarioId::N3 => "N3",
            ScenarioId::N5 => "N5",
            ScenarioId::N7 => "N7",
            ScenarioId::NP3 => "NP3",
        }
    }

    /// Number of treatment levels `K`.
    pub fn levels(&self) -> usize {
        match self {
            ScenarioId::L2 | ScenarioId::N2 => 2,
            ScenarioId::L3 | ScenarioId::N3 | ScenarioId::NP3 => 3,
            ScenarioId::L5 | ScenarioId::N5 => 5,
            ScenarioId::L7 | ScenarioId::N7 => 7,
        }
    }

    /// Covariate dimension: the smallest `p` covering every covariate the
    /// scenario's formulas use.
    pub fn dim(&self) -> usize {
        match self {
            ScenarioId::L2 | ScenarioId::N2 => 4,
            ScenarioId::NP3 => 2,
            _ => 6,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, ScenarioId::L2 | ScenarioId::L3 | ScenarioId::L5 | ScenarioId::L7)
    }

    /// Interior cut-offs `b_1..b_{K-1}` for the binned scenarios.
    fn cutoffs(&self) -> &'static [f64] {
        match self {
            ScenarioId::L3 => &[-0.5, 1.0],
            ScenarioId::L5 => &[-1.9, -0.5, 0.5, 1.7],
            ScenarioId::L7 => &[-2.1, -1.2, -0.4, 0.4, 1.0, 2.1],
            ScenarioId::N3 => &[0.0, 1.3],
            ScenarioId::N5 => &[-0.4, 0.3, 1.1, 2.1],
            ScenarioId::N7 => &[-0.7, -0.2, 0.4, 1.0, 1.8, 2.8],
            _ => &[],
        }
    }

    /// Main effect `μ(x)`.
    fn main_effect(&self, x: &[f64]) -> f64 {
        match self {
            ScenarioId::L2 => 1.0 + x[0] + x[1] + 2.0 * x[2] + 0.5 * x[3],
            ScenarioId::N2 => 1.0 + x[0] * x[0] + x[1] * x[1] - 2.0 * x[2] + 0.5 * x[3],
            ScenarioId::NP3 => 2.0 + x[0] + 0.5 * x[1],
            _ => 2.0 + 2.0 * x[0] + x[1] + 0.5 * x[2],
        }
    }

    /// The index function whose bin selects the optimal level.
    fn index(&self, x: &[f64]) -> f64 {
        match self {
            ScenarioId::L3 | ScenarioId::L5 | ScenarioId::L7 => {
                -x[0] + 2.0 * x[1] + x[2] + 0.6 * x[3] - 1.5 * (x[4] + x[5])
            }
            ScenarioId::N3 | ScenarioId::N5 | ScenarioId::N7 => {
                let base = -3.0 - x[0] * x[0] + 2.0 * x[1].exp() + (x[2] - 0.6 * x[3]).powi(2) + x[4].powi(3);
                if *self == ScenarioId::N7 {
                    base
                } else {
                    base + (x[5] * x[5]).exp()
                }
            }
            ScenarioId::L2 => 0.3 - x[0] - x[1],
            ScenarioId::N2 => 0.7 - x[0] * x[0] - x[1] * x[1],
            ScenarioId::NP3 => f64::NAN,
        }
    }

    /// `D*(x)`, the unique maximiser of `Q(x, ·)`.
    pub fn true_optimal(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        Ok(self.optimal_unchecked(x))
    }

    fn optimal_unchecked(&self, x: &[f64]) -> usize {
        match self {
            ScenarioId::L2 | ScenarioId::N2 => {
                if self.index(x) > 0.0 {
                    2
                } else {
                    1
                }
            }
            ScenarioId::NP3 => {
                if (x[0] + 1.0).powi(2) + (x[1] + 1.0).powi(2) < 1.0 {
                    1
                } else if x[0] + x[1] > 2.0 / 3.0 {
                    2
                } else {
                    3
                }
            }
            _ => {
                // g in (b_{i-1}, b_i] selects level i
                let g = self.index(x);
                self.cutoffs().iter().filter(|&&b| g > b).count() + 1
            }
        }
    }

    /// `Q(x, a)` for every `a = 1..=K`.
    pub fn q_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.q_unchecked(x))
    }

    fn q_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mu = self.main_effect(x);
        let levels = self.levels();
        match self {
            ScenarioId::L2 | ScenarioId::N2 => {
                let scale = if *self == ScenarioId::L2 { 1.8 } else { 4.0 };
                let t = scale * self.index(x);
                (1..=levels).map(|a| mu + t * (2.0 * a as f64 - 3.0)).collect()
            }
            ScenarioId::NP3 => {
                let d = self.optimal_unchecked(x) as f64;
                (1..=levels).map(|a| mu - 2.0 * (a as f64 - d).abs()).collect()
            }
            _ => {
                let d = self.optimal_unchecked(x) as f64;
                // the three-level interaction peaks at 1, the others at 2
                let peak = if levels == 3 { 1.0 } else { 2.0 };
                (1..=levels).map(|a| mu + 4.0 * (peak - (a as f64 - d).abs())).collect()
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub n: usize,
    pub seed: u64,
    /// ChaCha stream; distinct streams give independent samples under one
    /// seed.
    pub stream: u64,
}

impl ScenarioConfig {
    pub fn new(id: ScenarioId, n: usize, seed: u64) -> Self {
        Self { id, n, seed, stream: 0 }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }
}

/// A simulated dataset with its known optimal treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    /// `D*(x_i)`
    pub truth: Vec<usize>,
    /// `Q(x_i, a)`, one column per level.
    pub q_values: Array2<f64>,
}

pub fn generate(config: &ScenarioConfig) -> Result<LabeledDataset> {
    let ScenarioConfig { id, n, seed, stream } = *config;
    if n == 0 {
        return Err(Error::InvalidInput("scenario sample size must be >= 1".into()));
    }
    let (p, levels) = (id.dim(), id.levels());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let mut x = Array2::zeros((n, p));
    let mut treatment = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut q_values = Array2::zeros((n, levels));
    let mut row = vec![0.0; p];
    for i in 0..n {
        for v in row.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let a = rng.random_range(1..=levels);
        let noise: f64 = rng.sample(StandardNormal);
        let q = id.q_unchecked(&row);
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
        q_values.row_mut(i).assign(&ndarray::ArrayView1::from(&q[..]));
        reward.push(q[a - 1] + noise);
        treatment.push(a);
        truth.push(id.optimal_unchecked(&row));
    }
    let data = Dataset::with_uniform_propensity(x, treatment, reward, levels)?;
    Ok(LabeledDataset { data, truth, q_values })
}

pub fn true_optimal(config: &ScenarioConfig, x: &[f64]) -> Result<usize> {
    config.id.true_optimal(x)
}

/// The known optimal rule of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleRule(pub ScenarioId);

impl TreatmentRule for OracleRule {
    fn levels(&self) -> usize {
        self.0.levels()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(staircase(self.0.true_optimal(x)?, self.0.levels()))
    }
}

/// Training, tuning and test sets of one benchmark replicate.
#[derive(Debug, Clone)]
pub struct ReplicateSets {
    pub train: LabeledDataset,
    pub tune: LabeledDataset,
    pub test: LabeledDataset,
}

/// Test sets are ten times the training size.
pub const TEST_MULTIPLIER: usize = 10;

/// Replicate `r` uses streams `3r`, `3r + 1` and `3r + 2`, so it can be
/// regenerated on its own.
pub fn generate_replicate(id: ScenarioId, n: usize, seed: u64, replicate: u64) -> Result<ReplicateSets> {
    let base = ScenarioConfig::new(id, n, seed);
    Ok(ReplicateSets {
        train: generate(&base.with_stream(3 * replicate))?,
        tune: generate(&base.with_stream(3 * replicate + 1))?,
        test: generate(&ScenarioConfig {
            n: n * TEST_MULTIPLIER,
            ..base.with_stream(3 * replicate + 2)
        })?,
    })
}

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// Observational or trial data: covariates, ordinal treatment, reward and
/// the propensity of the treatment actually received.
///
/// Treatments are 1-based levels in `1..=levels`. The propensity column is
/// always resolved per row before construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    treatment: Vec<usize>,
    reward: Vec<f64>,
    propensity: Vec<f64>,
    levels: usize,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        treatment: Vec<usize>,
        reward: Vec<f64>,
        propensity: Vec<f64>,
        levels: usize,
    ) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || x.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset needs n >= 1 and p >= 1, got {}x{}",
                n,
                x.ncols()
            )));
        }
        if levels < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 treatment levels, got {levels}"
            )));
        }
        for (name, len) in [
            ("treatment", treatment.len()),
            ("reward", reward.len()),
            ("propensity", propensity.len()),
        ] {
            if len != n {
                return Err(Error::InvalidInput(format!(
                    "{name} has {len} entries but X has {n} rows"
                )));
            }
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite covariate {v}")));
        }
        if let Some((i, a)) = treatment.iter().enumerate().find(|(_, &a)| a < 1 || a > levels) {
            return Err(Error::InvalidInput(format!(
                "row {}: treatment {a} outside 1..={levels}",
                i + 1
            )));
        }
        if let Some((i, r)) = reward.iter().enumerate().find(|(_, r)| !r.is_finite()) {
            return Err(Error::InvalidInput(format!("row {}: reward {r}", i + 1)));
        }
        if let Some((i, p)) = propensity.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "row {}: propensity {p} outside (0, 1]",
                i + 1
            )));
        }
        let x = x.as_standard_layout().into_owned();
        Ok(Self {
            x,
            treatment,
            reward,
            propensity,
            levels,
        })
    }

    /// Builds a dataset under randomisation with equal allocation, `π = 1/K`.
    pub fn with_uniform_propensity(
        x: Array2<f64>,
        treatment: Vec<usize>,
        reward: Vec<f64>,
        levels: usize,
    ) -> Result<Self> {
        let n = x.nrows();
        let p = 1.0 / levels.max(1) as f64;
        Self::new(x, treatment, reward, vec![p; n], levels)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Covariate row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        self.x
            .row(i)
            .to_slice()
            .expect("covariates are stored in standard layout")
    }

    pub fn row_view(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn treatment(&self) -> &[usize] {
        &self.treatment
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn propensity(&self) -> &[f64] {
        &self.propensity
    }

    /// Same observations with a different propensity column.
    pub fn with_propensity(&self, propensity: Vec<f64>) -> Result<Self> {
        Self::new(
            self.x.clone(),
            self.treatment.clone(),
            self.reward.clone(),
            propensity,
            self.levels,
        )
    }

    /// Same observations with rewards replaced.
    pub fn with_reward(&self, reward: Vec<f64>) -> Result<Self> {
        Self::new(
            self.x.clone(),
            self.treatment.clone(),
            reward,
            self.propensity.clone(),
            self.levels,
        )
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty subset".into()));
        }
        Self::new(
            self.x.select(Axis(0), indices),
            indices.iter().map(|&i| self.treatment[i]).collect(),
            indices.iter().map(|&i| self.reward[i]).collect(),
            indices.iter().map(|&i| self.propensity[i]).collect(),
            self.levels,
        )
    }

    /// Number of observations per level, index 0 is level 1.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.levels];
        for &a in &self.treatment {
            counts[a - 1] += 1;
        }
        counts
    }
}

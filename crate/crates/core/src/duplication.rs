//! Reduction of a K-level ordinal treatment problem to K-1 coupled binary
//! problems by duplicating every observation once per threshold.
//!
//! Duplicate `(i, k)` asks "is the treatment above level k?": its label is
//! `sign(a_i - k)`. The covariate of a duplicate is conceptually
//! `(x_i, e_k)`, but the `e_k` block is never stored; it enters through the
//! `[k == h]` term of the extended kernel and through per-threshold
//! intercepts.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::sign_unchecked;

/// How rewards are propagated to the duplicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Every duplicate carries the full reward.
    #[default]
    Full,
    /// Duplicate `k` only keeps the reward when `a_i ∈ {k, k+1}`; the rest
    /// have zero weight and are dropped.
    Partial,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::Partial => "partial",
        }
    }
}

/// One row of the duplicated data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuplicatedSample {
    /// 0-based index into the originating dataset.
    pub base_index: usize,
    /// Threshold index, 1-based in `1..K`.
    pub duplicate_index: usize,
    pub label: i8,
    pub reward: f64,
    /// `|reward| / propensity`
    pub weight: f64,
}

impl DuplicatedSample {
    /// `I(reward >= 0)`
    #[inline]
    pub fn nonnegative_reward(&self) -> bool {
        self.reward >= 0.0
    }

    /// Label after folding the reward sign in: `a` for non-negative rewards,
    /// `-a` otherwise. Both hinge branches become `[1 - y f]_+` in this label.
    #[inline]
    pub fn effective_label(&self) -> f64 {
        let a = self.label as f64;
        if self.nonnegative_reward() {
            a
        } else {
            -a
        }
    }
}

/// Full duplication: `n (K - 1)` rows, ordered by observation then threshold.
pub fn duplicate(data: &Dataset) -> Result<Vec<DuplicatedSample>> {
    build(data, Strategy::Full)
}

/// Partial duplication: duplicate `k` keeps `r_i I(a_i ∈ {k, k+1})`, zero rows dropped.
pub fn duplicate_partial(data: &Dataset) -> Result<Vec<DuplicatedSample>> {
    build(data, Strategy::Partial)
}

pub fn duplicate_with(data: &Dataset, strategy: Strategy) -> Result<Vec<DuplicatedSample>> {
    build(data, strategy)
}

fn build(data: &Dataset, strategy: Strategy) -> Result<Vec<DuplicatedSample>> {
    let levels = data.levels();
    if levels < 2 {
        return Err(Error::InvalidInput(format!("duplication needs K >= 2, got {levels}")));
    }
    let mut rows = Vec::with_capacity(data.len() * (levels - 1));
    for i in 0..data.len() {
        let a = data.treatment()[i];
        let r = data.reward()[i];
        let pi = data.propensity()[i];
        for k in 1..levels {
            let reward = match strategy {
                Strategy::Full => r,
                Strategy::Partial if a == k || a == k + 1 => r,
                Strategy::Partial => 0.0,
            };
            if strategy == Strategy::Partial && reward == 0.0 {
                continue;
            }
            rows.push(DuplicatedSample {
                base_index: i,
                duplicate_index: k,
                label: sign_unchecked(a as f64 - k as f64),
                reward,
                weight: reward.abs() / pi,
            });
        }
    }
    Ok(rows)
}

//! Per-threshold intercepts given the shared score `g(x)`.
//!
//! For threshold `k` the loss `Σ_i w_i [1 - y_i (g_i + b)]_+` is convex and
//! piecewise linear in `b`, with one breakpoint per row at `b = y_i - g_i`.
//! Its slope starts at `-Σ_{y=+1} w`, rises by `w_i` at every breakpoint and
//! ends at `Σ_{y=-1} w`, so the minimiser is read off a sorted sweep.

use crate::duplication::DuplicatedSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InterceptFit {
    /// `b_1..b_{K-1}`
    pub intercepts: Vec<f64>,
    /// Thresholds (1-based) with no weighted rows; their intercept is 0.
    pub degenerate: Vec<usize>,
}

/// Weighted hinge loss of threshold `k` at intercept `b`.
pub fn threshold_loss(g_values: &[f64], rows: &[DuplicatedSample], k: usize, b: f64) -> f64 {
    rows.iter()
        .filter(|s| s.duplicate_index == k)
        .map(|s| s.weight * (1.0 - s.effective_label() * (g_values[s.base_index] + b)).max(0.0))
        .sum()
}

/// Minimises each threshold's loss independently. Flat optimal intervals
/// resolve to their midpoint; unbounded ends are clipped to
/// `±(max |g| + 1)`.
pub fn recover_intercepts(g_values: &[f64], rows: &[DuplicatedSample], levels: usize) -> Result<InterceptFit> {
    if levels < 2 {
        return Err(Error::InvalidInput(format!("need K >= 2, got {levels}")));
    }
    if let Some(g) = g_values.iter().find(|g| !g.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite score {g}")));
    }
    let clip = g_values.iter().fold(0.0f64, |m, g| m.max(g.abs())) + 1.0;

    let mut per_threshold: Vec<Vec<(f64, f64, bool)>> = vec![Vec::new(); levels - 1];
    for s in rows {
        if s.duplicate_index == 0 || s.duplicate_index >= levels {
            return Err(Error::InvalidInput(format!(
                "duplicate index {} outside 1..{}",
                s.duplicate_index, levels
            )));
        }
        let g = *g_values.get(s.base_index).ok_or(Error::DimensionMismatch {
            expected: g_values.len(),
            found: s.base_index + 1,
        })?;
        if s.weight > 0.0 {
            let y = s.effective_label();
            per_threshold[s.duplicate_index - 1].push((y - g, s.weight, y > 0.0));
        }
    }

    let mut intercepts = Vec::with_capacity(levels - 1);
    let mut degenerate = Vec::new();
    for (idx, points) in per_threshold.iter_mut().enumerate() {
        if points.is_empty() {
            intercepts.push(0.0);
            degenerate.push(idx + 1);
            continue;
        }
        intercepts.push(minimise(points, clip));
    }
    Ok(InterceptFit { intercepts, degenerate })
}

fn minimise(points: &mut [(f64, f64, bool)], clip: f64) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = points.iter().map(|p| p.1).sum();
    let eps = 1e-12 * total;
    let mut slope = -points.iter().filter(|p| p.2).map(|p| p.1).sum::<f64>();

    // slope is zero on (-inf, first breakpoint]
    if slope >= -eps {
        return 0.5 * (-clip + points[0].0);
    }
    let mut idx = 0;
    while idx < points.len() {
        let t = points[idx].0;
        while idx < points.len() && points[idx].0 == t {
            slope += points[idx].1;
            idx += 1;
        }
        if slope > eps {
            return t;
        }
        if slope >= -eps {
            let right = if idx < points.len() { points[idx].0 } else { clip.max(t) };
            return 0.5 * (t + right);
        }
    }
    // unreachable for non-empty input: the final slope is Σ_{y=-1} w >= 0
    points[points.len() - 1].0
}

/// Pool-adjacent-violators projection onto monotone sequences (equal
/// weights). `decreasing` selects the direction.
pub fn project_monotone(values: &[f64], decreasing: bool) -> Vec<f64> {
    let sign = if decreasing { -1.0 } else { 1.0 };
    // project the sign-flipped sequence onto non-decreasing
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((sign * v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("at least one block");
            *last = ((m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64, c1 + c2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, c)| std::iter::repeat_n(sign * m, c))
        .collect()
}

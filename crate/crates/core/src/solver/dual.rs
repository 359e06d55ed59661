//! Dual of the reward-signed weighted hinge problem on duplicated data.
//!
//! Each duplicate carries exactly one active multiplier: `alpha` when its
//! reward is non-negative, `eta` otherwise. Writing `gamma` for the active
//! multiplier and `y = a` (resp. `-a`) for the label with the reward sign
//! folded in, the dual is the weighted SVM dual
//!
//! ```text
//! max  Σ gamma - ½ Σ_rs gamma_r gamma_s y_r y_s k̃_rs
//! s.t. Σ gamma_r y_r = 0,   0 <= gamma_r <= C |r_r| / π_r
//! ```
//!
//! with `k̃` the extended kernel. It is solved by pairwise coordinate ascent:
//! two multipliers move together along the equality constraint, clipped to
//! the box, with the pair chosen by maximal KKT violation and second-order
//! gain.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::duplication::DuplicatedSample;
use crate::error::{Error, Result};
use crate::kernel::Gram;

/// Curvature floor for pairs along a flat direction.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Box scale, `C = 1 / (2 λ)` when driven by `fit`.
    pub c: f64,
    pub kkt_tol: f64,
    /// Relative duality gap required on top of the KKT tolerance; the
    /// internal KKT target is tightened until both hold.
    pub gap_tol: f64,
    /// Pair updates allowed; `None` means `1000 * rows`.
    pub max_iter: Option<usize>,
    /// Seed for the random fallback pair when the greedy pair stalls.
    pub seed: u64,
    /// Record the dual objective after every sweep of `rows` updates.
    pub record_trace: bool,
    /// Check the base Gram's smallest eigenvalue when it has at most this
    /// many points (0 disables the check).
    pub psd_check_max_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            kkt_tol: 1e-5,
            gap_tol: 1e-4,
            max_iter: None,
            seed: 0,
            record_trace: false,
            psd_check_max_points: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidInput(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tol.is_finite() && self.kkt_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "KKT tolerance must be positive, got {}",
                self.kkt_tol
            )));
        }
        if !(self.gap_tol.is_finite() && self.gap_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gap tolerance must be positive, got {}",
                self.gap_tol
            )));
        }
        Ok(())
    }
}

/// The dual QP for a fixed set of duplicated rows and base Gram matrix.
#[derive(Debug, Clone)]
pub struct DualProblem<'a> {
    gram: &'a Gram,
    base: Vec<usize>,
    threshold: Vec<usize>,
    labels: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> DualProblem<'a> {
    pub fn new(rows: &[DuplicatedSample], gram: &'a Gram, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("C must be positive, got {c}")));
        }
        let mut upper = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            if row.base_index >= gram.size() {
                return Err(Error::DimensionMismatch {
                    expected: gram.size(),
                    found: row.base_index + 1,
                });
            }
            if !(row.weight.is_finite() && row.weight >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "duplicate {r}: infeasible box, weight {}",
                    row.weight
                )));
            }
            upper.push(c * row.weight);
        }
        Ok(Self {
            gram,
            base: rows.iter().map(|s| s.base_index).collect(),
            threshold: rows.iter().map(|s| s.duplicate_index).collect(),
            labels: rows.iter().map(|s| s.effective_label()).collect(),
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    /// Extended kernel between duplicates `r` and `s`.
    #[inline]
    pub fn kernel(&self, r: usize, s: usize) -> f64 {
        let same = if self.threshold[r] == self.threshold[s] {
            1.0
        } else {
            0.0
        };
        self.gram.get(self.base[r], self.base[s]) + same
    }

    /// Column `s` of the extended kernel matrix `K̃`.
    fn kernel_column(&self, s: usize, out: &mut [f64]) {
        let row = self.gram.row(self.base[s]);
        let ks = self.threshold[s];
        for (r, q) in out.iter_mut().enumerate() {
            let same = if self.threshold[r] == ks { 1.0 } else { 0.0 };
            *q = row[self.base[r]] + same;
        }
    }

    /// `u_r = Σ_s gamma_s y_s k̃_rs`: the decision value of duplicate `r`
    /// without the shared offset.
    pub fn scores(&self, gamma: &[f64]) -> Vec<f64> {
        let m = self.len();
        let mut coef_by_base = vec![0.0; self.gram.size()];
        let mut per_threshold = std::collections::BTreeMap::<usize, f64>::new();
        for s in 0..m {
            let c = gamma[s] * self.labels[s];
            if c != 0.0 {
                coef_by_base[self.base[s]] += c;
                *per_threshold.entry(self.threshold[s]).or_default() += c;
            }
        }
        let active: Vec<(usize, f64)> = coef_by_base
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        (0..m)
            .map(|r| {
                let row = self.gram.row(self.base[r]);
                let g: f64 = active.iter().map(|&(j, c)| c * row[j]).sum();
                g + per_threshold.get(&self.threshold[r]).copied().unwrap_or(0.0)
            })
            .collect()
    }

    /// `L_D(gamma) = Σ gamma - ½ gammaᵀ Q gamma`.
    pub fn objective(&self, gamma: &[f64]) -> f64 {
        let u = self.scores(gamma);
        gamma
            .iter()
            .zip(&u)
            .zip(&self.labels)
            .map(|((g, u), y)| g - 0.5 * g * y * u)
            .sum()
    }

    /// `∇ L_D = 1 - Q gamma`.
    pub fn gradient(&self, gamma: &[f64]) -> Vec<f64> {
        self.scores(gamma)
            .iter()
            .zip(&self.labels)
            .map(|(u, y)| 1.0 - y * u)
            .collect()
    }

    /// Dual objective in the split `(alpha, eta)` form:
    /// `Σ (alpha + eta) - ½ Σ_rs (alpha_r - eta_r)(alpha_s - eta_s) a_r a_s k̃_rs`.
    pub fn objective_split(&self, rows: &[DuplicatedSample], alpha: &[f64], eta: &[f64]) -> f64 {
        let m = rows.len();
        let signed: Vec<f64> = (0..m).map(|r| (alpha[r] - eta[r]) * rows[r].label as f64).collect();
        let mut quad = 0.0;
        for r in 0..m {
            if signed[r] == 0.0 {
                continue;
            }
            for s in 0..m {
                quad += signed[r] * signed[s] * self.kernel(r, s);
            }
        }
        alpha.iter().sum::<f64>() + eta.iter().sum::<f64>() - 0.5 * quad
    }

    /// Primal objective `½ ‖w‖² + Σ C w_r [1 - y_r (u_r + offset)]_+`.
    pub fn primal(&self, gamma: &[f64], offset: f64) -> f64 {
        let u = self.scores(gamma);
        let norm2: f64 = gamma
            .iter()
            .zip(&u)
            .zip(&self.labels)
            .map(|((g, u), y)| g * y * u)
            .sum();
        let loss: f64 = (0..self.len())
            .map(|r| self.upper[r] * (1.0 - self.labels[r] * (u[r] + offset)).max(0.0))
            .sum();
        0.5 * norm2 + loss
    }
}

/// Optimal (or best reached) dual multipliers with certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Multiplier of each duplicate with non-negative reward (0 elsewhere).
    pub alpha: Vec<f64>,
    /// Multiplier of each duplicate with negative reward (0 elsewhere).
    pub eta: Vec<f64>,
    pub dual_objective: f64,
    /// Primal objective at `(w(gamma), offset)`.
    pub primal_objective: f64,
    /// `(primal - dual) / (1 + |dual|)`
    pub duality_gap: f64,
    /// Shared offset `b̃` minimising the primal at `w(gamma)`.
    pub offset: f64,
    /// Maximal violating-pair gap; below `kkt_tol` at convergence.
    pub kkt_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective after each sweep when tracing was requested.
    pub trace: Vec<f64>,
}

impl DualSolution {
    /// Active multiplier of each duplicate with the reward sign applied:
    /// `alpha - eta`.
    pub fn signed_multipliers(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.eta).map(|(a, e)| a - e).collect()
    }

    /// `gamma = alpha + eta` (only one of the two is ever non-zero).
    pub fn active_multipliers(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.eta).map(|(a, e)| a + e).collect()
    }

    /// `|Σ (alpha - eta) a|`
    pub fn equality_residual(&self, rows: &[DuplicatedSample]) -> f64 {
        self.signed_multipliers()
            .iter()
            .zip(rows)
            .map(|(m, s)| m * s.label as f64)
            .sum::<f64>()
            .abs()
    }
}

/// Tightest internal KKT target used while chasing the gap tolerance.
const KKT_TARGET_FLOOR: f64 = 1e-13;

/// Relative duality gap from `v = -y ∘ ∇F`, where `∇F = Qγ - 1`.
fn relative_gap(gamma: &[f64], v: &[f64], labels: &[f64], upper: &[f64]) -> f64 {
    // (Qγ)_r = 1 - y_r v_r and the score is u_r = y_r (Qγ)_r = y_r - v_r
    let scores: Vec<f64> = v.iter().zip(labels).map(|(v, y)| y - v).collect();
    let quad: f64 = (0..gamma.len()).map(|r| gamma[r] * labels[r] * scores[r]).sum();
    let dual = gamma.iter().sum::<f64>() - 0.5 * quad;
    let b = best_offset(&scores, labels, upper);
    let loss: f64 = (0..gamma.len())
        .map(|r| upper[r] * (1.0 - labels[r] * (scores[r] + b)).max(0.0))
        .sum();
    (0.5 * quad + loss - dual) / (1.0 + dual.abs())
}

/// Index of the largest `v` over `up`, that value, and the smallest `v`
/// over `low`.
fn extremes(v: &[f64], up: &[bool], low: &[bool]) -> (usize, f64, f64) {
    let (mut i, mut up_max, mut low_min) = (usize::MAX, f64::NEG_INFINITY, f64::INFINITY);
    for (t, ((&vt, &u), &l)) in v.iter().zip(up).zip(low).enumerate() {
        let cand = if u { vt } else { f64::NEG_INFINITY };
        if cand > up_max {
            up_max = cand;
            i = t;
        }
        low_min = low_min.min(if l { vt } else { f64::INFINITY });
    }
    (i, up_max, low_min)
}

/// Largest row count for which `K̃` is stored densely.
const DENSE_MAX_ROWS: usize = 2048;

/// Columns of `K̃`, either precomputed or built on demand.
struct Columns<'p, 'a> {
    problem: &'p DualProblem<'a>,
    dense: Option<Vec<f64>>,
    buf_i: Vec<f64>,
    buf_j: Vec<f64>,
}

impl<'p, 'a> Columns<'p, 'a> {
    fn new(problem: &'p DualProblem<'a>) -> Self {
        let m = problem.len();
        let dense = (m <= DENSE_MAX_ROWS).then(|| {
            let mut q = vec![0.0; m * m];
            for (s, col) in q.chunks_mut(m.max(1)).enumerate().take(m) {
                problem.kernel_column(s, col);
            }
            q
        });
        let buf = if dense.is_some() { Vec::new() } else { vec![0.0; m] };
        Self {
            problem,
            dense,
            buf_i: buf.clone(),
            buf_j: buf,
        }
    }

    fn load_i(&mut self, i: usize) {
        if self.dense.is_none() {
            self.problem.kernel_column(i, &mut self.buf_i);
        }
    }

    fn load_j(&mut self, j: usize) {
        if self.dense.is_none() {
            self.problem.kernel_column(j, &mut self.buf_j);
        }
    }

    fn col_i(&self, i: usize) -> &[f64] {
        match &self.dense {
            Some(q) => {
                let m = self.problem.len();
                &q[i * m..(i + 1) * m]
            }
            None => &self.buf_i,
        }
    }

    /// Column `t`, loading it into the second buffer when not dense.
    fn column(&mut self, t: usize) -> &[f64] {
        self.load_j(t);
        self.col_j(t)
    }

    fn col_j(&self, j: usize) -> &[f64] {
        match &self.dense {
            Some(q) => {
                let m = self.problem.len();
                &q[j * m..(j + 1) * m]
            }
            None => &self.buf_j,
        }
    }
}

/// Largest free set for which a Newton step is tried, keeping its cost
/// within a small multiple of `m` pairwise updates.
fn newton_limit(m: usize) -> usize {
    ((m * m) as f64).cbrt().max(64.0) as usize
}

/// Minimises the dual over the free multipliers with the bounded ones held
/// fixed, then steps towards that point as far as the box allows. Returns
/// the change in `F` and whether the step was cut short by a bound, or
/// `None` when no descent step exists.
fn newton_step(
    gamma: &mut [f64],
    v: &mut [f64],
    y: &[f64],
    upper: &[f64],
    columns: &mut Columns<'_, '_>,
) -> Option<(f64, bool)> {
    let free: Vec<usize> = (0..gamma.len())
        .filter(|&t| gamma[t] > 0.0 && gamma[t] < upper[t])
        .collect();
    let f = free.len();
    if f == 0 || f > newton_limit(gamma.len()) {
        return None;
    }
    // bordered system [K_FF 1; 1ᵀ 0] (e, ν) = (v_F, 0) in label space e = y ∘ dγ
    let mut kff = DMatrix::<f64>::zeros(f, f);
    for (b, &t) in free.iter().enumerate() {
        let col = columns.column(t);
        for (a, &s) in free.iter().enumerate() {
            kff[(a, b)] = col[s];
        }
    }
    let mut system = DMatrix::<f64>::zeros(f + 1, f + 1);
    system.view_mut((0, 0), (f, f)).copy_from(&kff);
    for a in 0..f {
        system[(a, f)] = 1.0;
        system[(f, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(f + 1);
    for (a, &t) in free.iter().enumerate() {
        rhs[a] = v[t];
    }
    let eigen = system.symmetric_eigen();
    let scale = eigen.eigenvalues.amax();
    let cutoff = 1e-10 * scale;
    // split the right-hand side into range and null-space parts
    let mut newton = DVector::<f64>::zeros(f + 1);
    let mut ray = DVector::<f64>::zeros(f + 1);
    for (q, &lam) in eigen.eigenvalues.iter().enumerate() {
        let u = eigen.eigenvectors.column(q);
        let coef = u.dot(&rhs);
        if lam.abs() > cutoff {
            newton.axpy(coef / lam, &u, 1.0);
        } else {
            ray.axpy(coef, &u, 1.0);
        }
    }
    // along a null direction the objective falls linearly, so follow it to the box
    let unbounded = ray.rows(0, f).norm() > 1e-9 * (1.0 + rhs.norm());
    let e = if unbounded {
        ray.rows(0, f).into_owned()
    } else {
        newton.rows(0, f).into_owned()
    };
    let slope: f64 = free.iter().zip(e.iter()).map(|(&t, ei)| v[t] * ei).sum();
    let curvature = if unbounded { 0.0 } else { e.dot(&(&kff * &e)) };
    if slope.is_nan() || slope <= 0.0 {
        return None;
    }
    let mut alpha = if curvature > TAU {
        slope / curvature
    } else {
        f64::INFINITY
    };
    let mut clip = None;
    for (a, &t) in free.iter().enumerate() {
        let d = y[t] * e[a];
        let room = if d > 0.0 {
            (upper[t] - gamma[t]) / d
        } else if d < 0.0 {
            gamma[t] / -d
        } else {
            continue;
        };
        if room < alpha {
            alpha = room;
            clip = Some(a);
        }
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return None;
    }
    let mut moves = Vec::with_capacity(f);
    for (a, &t) in free.iter().enumerate() {
        let old = gamma[t];
        let new = if clip == Some(a) {
            if y[t] * e[a] > 0.0 {
                upper[t]
            } else {
                0.0
            }
        } else {
            (old + alpha * y[t] * e[a]).clamp(0.0, upper[t])
        };
        gamma[t] = new;
        moves.push((t, y[t] * (new - old)));
    }
    for (t, w) in moves {
        if w != 0.0 {
            let col = columns.column(t);
            for (vr, k) in v.iter_mut().zip(col) {
                *vr -= w * k;
            }
        }
    }
    Some((-alpha * slope + 0.5 * alpha * alpha * curvature, clip.is_some()))
}

/// Maximises the dual by pairwise coordinate ascent.
pub fn solve_dual(rows: &[DuplicatedSample], gram: &Gram, config: &SolverConfig) -> Result<DualSolution> {
    config.validate()?;
    let problem = DualProblem::new(rows, gram, config.c)?;
    let m = problem.len();
    let y = problem.labels.clone();
    let upper = problem.upper.clone();
    let diag: Vec<f64> = (0..m).map(|t| problem.kernel(t, t)).collect();
    let max_iter = config.max_iter.unwrap_or(1000 * m.max(1));
    let mut columns = Columns::new(&problem);

    let mut gamma = vec![0.0; m];
    // v = -y ∘ ∇F for the minimisation form F = ½ γᵀQγ - Σ γ
    let mut v = y.clone();
    // membership of the index sets in which γ_t y_t may increase / decrease
    let membership = |t: usize, g: f64| {
        let below = g < upper[t];
        let above = g > 0.0;
        if y[t] > 0.0 {
            (below, above)
        } else {
            (above, below)
        }
    };
    let (mut up, mut low): (Vec<bool>, Vec<bool>) = (0..m).map(|t| membership(t, 0.0)).unzip();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::new();
    let mut f_value = 0.0;
    let mut stalled = 0usize;

    let mut iterations = 0;
    let mut violation;
    let mut converged = false;
    let mut target = config.kkt_tol;
    let (mut i, mut up_max, mut low_min) = extremes(&v, &up, &low);
    loop {
        violation = if i == usize::MAX || low_min == f64::INFINITY {
            0.0
        } else {
            (up_max - low_min).max(0.0)
        };
        if violation < target {
            if target <= KKT_TARGET_FLOOR || relative_gap(&gamma, &v, &y, &upper) <= config.gap_tol {
                converged = true;
                break;
            }
            target = (target * 0.1).max(KKT_TARGET_FLOOR);
            continue;
        }
        // i is the maximal violating index in the "up" set
        if iterations >= max_iter {
            break;
        }

        columns.load_i(i);
        let col_i = columns.col_i(i);
        let k_ii = diag[i];
        let mut j = usize::MAX;
        if stalled > 0 {
            // random violating partner
            let candidates: Vec<usize> = (0..m).filter(|&t| low[t] && v[t] < up_max).collect();
            if !candidates.is_empty() {
                j = candidates[rng.random_range(0..candidates.len())];
            }
        } else {
            let mut best = f64::INFINITY;
            for t in 0..m {
                let b = up_max - v[t];
                if b <= 0.0 || !low[t] {
                    continue;
                }
                let a = (k_ii + diag[t] - 2.0 * col_i[t]).max(TAU);
                let gain = -b * b / a;
                if gain < best {
                    best = gain;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            converged = true;
            break;
        }

        let b = up_max - v[j];
        let curvature = k_ii + diag[j] - 2.0 * col_i[j];
        let mut delta = b / curvature.max(TAU);
        let limit_i = if y[i] > 0.0 { upper[i] - gamma[i] } else { gamma[i] };
        let limit_j = if y[j] > 0.0 { gamma[j] } else { upper[j] - gamma[j] };
        let mut hit_i = false;
        let mut hit_j = false;
        if delta >= limit_i {
            delta = limit_i;
            hit_i = true;
        }
        if delta >= limit_j {
            delta = limit_j;
            hit_j = true;
            hit_i = hit_i && limit_i == limit_j;
        }
        if delta <= 0.0 {
            stalled += 1;
            iterations += 1;
            // a stalled pair leaves v and the index sets unchanged
            continue;
        }
        stalled = 0;

        if hit_i {
            gamma[i] = if y[i] > 0.0 { upper[i] } else { 0.0 };
        } else {
            gamma[i] += y[i] * delta;
        }
        if hit_j {
            gamma[j] = if y[j] > 0.0 { 0.0 } else { upper[j] };
        } else {
            gamma[j] -= y[j] * delta;
        }
        (up[i], low[i]) = membership(i, gamma[i]);
        (up[j], low[j]) = membership(j, gamma[j]);
        columns.load_j(j);
        let (col_i, col_j) = (columns.col_i(i), columns.col_j(j));
        for ((vt, ki), kj) in v.iter_mut().zip(col_i).zip(col_j) {
            *vt -= delta * (ki - kj);
        }
        f_value += -delta * b + 0.5 * delta * delta * curvature;
        iterations += 1;
        if iterations % m == 0 {
            let mut res = None;
            for _ in 0..newton_limit(m) {
                match newton_step(&mut gamma, &mut v, &y, &upper, &mut columns) {
                    Some((change, clipped)) => {
                        res = Some(res.unwrap_or(0.0) + change);
                        if !clipped {
                            break;
                        }
                    }
                    None => break,
                }
            }
            if let Some(change) = res {
                f_value += change;
                for t in 0..m {
                    (up[t], low[t]) = membership(t, gamma[t]);
                }
            }
        }
        (i, up_max, low_min) = extremes(&v, &up, &low);
        if config.record_trace && iterations % m.max(1) == 0 {
            trace.push(-f_value);
        }
    }
    drop(columns);

    let scores = problem.scores(&gamma);
    let offset = best_offset(&scores, &y, &upper);
    let dual_objective = problem.objective(&gamma);
    let primal_objective = problem.primal(&gamma, offset);
    if config.record_trace {
        trace.push(dual_objective);
    }
    let mut alpha = vec![0.0; m];
    let mut eta = vec![0.0; m];
    for (r, row) in rows.iter().enumerate() {
        if row.nonnegative_reward() {
            alpha[r] = gamma[r];
        } else {
            eta[r] = gamma[r];
        }
    }
    Ok(DualSolution {
        alpha,
        eta,
        dual_objective,
        primal_objective,
        duality_gap: (primal_objective - dual_objective) / (1.0 + dual_objective.abs()),
        offset,
        kkt_violation: violation,
        iterations,
        converged,
        trace,
    })
}

/// Minimiser of `b ↦ Σ_r upper_r [1 - y_r (u_r + b)]_+`, the midpoint when
/// the minimum is attained on an interval.
fn best_offset(scores: &[f64], labels: &[f64], upper: &[f64]) -> f64 {
    // each term has its kink at b = y_r - u_r and raises the slope by upper_r
    let mut kinks: Vec<(f64, f64)> = scores
        .iter()
        .zip(labels)
        .zip(upper)
        .filter(|(_, &w)| w > 0.0)
        .map(|((u, y), &w)| (y - u, w))
        .collect();
    if kinks.is_empty() {
        return 0.0;
    }
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slope: f64 = -labels
        .iter()
        .zip(upper)
        .filter(|(y, _)| **y > 0.0)
        .map(|(_, w)| w)
        .sum::<f64>();
    if slope >= 0.0 {
        return kinks[0].0;
    }
    let total: f64 = kinks.iter().map(|k| k.1).sum();
    let eps = 1e-12 * total;
    for (idx, &(b, w)) in kinks.iter().enumerate() {
        slope += w;
        if slope.abs() <= eps {
            return match kinks.get(idx + 1) {
                Some(&(next, _)) => 0.5 * (b + next),
                None => b,
            };
        }
        if slope > 0.0 {
            return b;
        }
    }
    kinks[kinks.len() - 1].0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::duplication::duplicate;
    use crate::kernel::KernelSpec;
    use ndarray::array;

    fn two_point() -> (Vec<DuplicatedSample>, Gram) {
        let d = Dataset::new(array![[1.0], [-1.0]], vec![2, 1], vec![1.0, 1.0], vec![0.5, 0.5], 2).unwrap();
        let rows = duplicate(&d).unwrap();
        let gram = Gram::new(&KernelSpec::Linear, (0..2).map(|i| d.row(i)));
        (rows, gram)
    }

    /// L_D restricted to the one-dimensional feasible segment gamma_1 = gamma_2 = t.
    /// y = (+1, -1) and K̃ = [[2, 0], [0, 2]] (x·x' = ±1 plus [k=h] = 1),
    /// so L_D = 2t - ½ (2t² + 2t²).
    fn segment_objective(t: f64) -> f64 {
        2.0 * t - 2.0 * t * t
    }

    #[test]
    fn matches_grid_oracle_on_two_points() {
        let (rows, gram) = two_point();
        // box: C * r / π = 2
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut t = 0.0;
        while t <= 2.0 + 1e-12 {
            let v = segment_objective(t);
            if v > best.0 {
                best = (v, t);
            }
            t += 1e-4;
        }
        let sol = solve_dual(&rows, &gram, &SolverConfig::with_c(1.0)).unwrap();
        assert!(sol.converged);
        assert!((sol.dual_objective - best.0).abs() < 1e-4);
        assert!((sol.alpha[0] - best.1).abs() < 1e-3);
        assert!(sol.equality_residual(&rows) < 1e-12);
        // the split form agrees with the folded form
        let problem = DualProblem::new(&rows, &gram, 1.0).unwrap();
        let split = problem.objective_split(&rows, &sol.alpha, &sol.eta);
        assert!((split - sol.dual_objective).abs() < 1e-12);
    }

    #[test]
    fn zero_rewards_give_zero_solution() {
        let d = Dataset::with_uniform_propensity(array![[1.0], [2.0], [3.0]], vec![1, 2, 3], vec![0.0; 3], 3).unwrap();
        let rows = duplicate(&d).unwrap();
        let gram = Gram::new(&KernelSpec::Linear, (0..3).map(|i| d.row(i)));
        let sol = solve_dual(&rows, &gram, &SolverConfig::default()).unwrap();
        assert!(sol.alpha.iter().chain(&sol.eta).all(|&v| v == 0.0));
        assert_eq!(sol.dual_objective, 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn negative_weight_rejected() {
        let (mut rows, gram) = two_point();
        rows[0].weight = -1.0;
        assert!(solve_dual(&rows, &gram, &SolverConfig::default()).is_err());
        assert!(solve_dual(&two_point().0, &gram, &SolverConfig::with_c(0.0)).is_err());
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let x = ndarray::Array2::from_shape_fn((20, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let a: Vec<usize> = (0..20).map(|i| i % 3 + 1).collect();
        let r: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let d = Dataset::with_uniform_propensity(x, a, r, 3).unwrap();
        let rows = duplicate(&d).unwrap();
        let gram = Gram::new(&KernelSpec::Linear, (0..20).map(|i| d.row(i)));
        let cfg = SolverConfig {
            c: 10.0,
            max_iter: Some(3),
            ..SolverConfig::default()
        };
        let sol = solve_dual(&rows, &gram, &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
        assert!(sol.kkt_violation >= cfg.kkt_tol);
        assert!(sol.dual_objective > 0.0);
    }

    #[test]
    fn large_box_linear_converges_within_default_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 90;
        let x = ndarray::Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..3.0)).collect();
        let d = Dataset::with_uniform_propensity(x, a, r, 2).unwrap();
        let rows = duplicate(&d).unwrap();
        let gram = Gram::new(&KernelSpec::Linear, (0..n).map(|i| d.row(i)));
        let sol = solve_dual(&rows, &gram, &SolverConfig::with_c(5.0 * n as f64)).unwrap();
        assert!(
            sol.converged,
            "kkt {} after {} iterations",
            sol.kkt_violation, sol.iterations
        );
        assert!(sol.kkt_violation <= 1e-5);
        assert!(sol.duality_gap <= 1e-4);
        assert!(sol.iterations < 100 * n);
    }
}

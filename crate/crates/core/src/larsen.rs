//! Generalized elastic-net paths via LARS-EN.
//!
//! The objective is
//!
//! ```text
//! ‖y − Xβ‖² + λ₁‖D₁β‖₁ + λ₂‖D₂β‖²
//! ```
//!
//! with diagonal positive `D₁`, `D₂`. Stacking `√λ₂·D₂` under `X` turns it into
//! a LASSO with weighted ℓ1 penalty, and substituting `α = D₁β` removes the
//! weights. The LASSO in `α` is traced with least-angle regression plus the
//! drop step, working entirely on the Gram matrix so the augmentation rows
//! are never materialized.
//!
//! Path vertices are exact LASSO solutions: at every step
//! `2·x̃ⱼᵀ(ỹ − X̃β) = λ₁·d₁ⱼ·sign(βⱼ)` on the active set and
//! `|2·x̃ⱼᵀ(ỹ − X̃β)| ≤ λ₁·d₁ⱼ` elsewhere, where `λ₁` is the implied penalty
//! stored with the step.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use thiserror::Error;

use crate::divergence::AnisotropyMatrix;

const REFACTOR_EVERY: usize = 50;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),
    #[error(
        "degenerate step {step}: adding feature {feature} makes the active Gram ill-conditioned \
         (condition ≈ {condition:.3e})"
    )]
    DegenerateStep {
        feature: usize,
        step: usize,
        condition: f64,
        /// Path up to the last well-conditioned vertex.
        partial: Box<SolverPath>,
    },
    #[error(
        "coordinate descent did not converge after {sweeps} sweeps (last max change {delta:.3e})"
    )]
    NotConverged { sweeps: usize, delta: f64 },
}

/// ℓ1 / ℓ2 weights of the generalized elastic net plus the ridge strength.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyPair {
    pub d1: AnisotropyMatrix,
    pub d2: AnisotropyMatrix,
    pub lambda2: f64,
}

impl PenaltyPair {
    pub fn new(
        d1: AnisotropyMatrix,
        d2: AnisotropyMatrix,
        lambda2: f64,
    ) -> Result<Self, SolverError> {
        if d1.len() != d2.len() {
            return Err(SolverError::Dimension(format!(
                "D₁ has {} entries, D₂ has {}",
                d1.len(),
                d2.len()
            )));
        }
        if !(lambda2 >= 0.0 && lambda2.is_finite()) {
            return Err(SolverError::InvalidPenalty(format!(
                "λ₂ must be finite and ≥ 0, got {lambda2}"
            )));
        }
        Ok(Self { d1, d2, lambda2 })
    }

    pub fn unweighted(p: usize, lambda2: f64) -> Result<Self, SolverError> {
        Self::new(
            AnisotropyMatrix::identity(p),
            AnisotropyMatrix::identity(p),
            lambda2,
        )
    }

    pub fn p(&self) -> usize {
        self.d1.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverLimits {
    /// Budget on ‖D₁β‖₁ (equivalently ‖α‖₁).
    pub t_max: f64,
    pub max_steps: usize,
    pub max_nonzeros: usize,
    pub tie_tol: f64,
}

impl SolverLimits {
    pub fn with_budget(t_max: f64) -> Self {
        Self {
            t_max,
            ..Self::default()
        }
    }
}

impl Default for SolverLimits {
    fn default() -> Self {
        Self {
            t_max: f64::INFINITY,
            max_steps: 5000,
            max_nonzeros: usize::MAX,
            tie_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The ℓ1 budget was reached; the last step is truncated onto `t_max`.
    Budget,
    MaxSteps,
    MaxNonzeros,
    /// All correlations reached zero: the last step is the unpenalized fit.
    CorrelationsVanished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub beta: Array1<f64>,
    /// ‖D₁β‖₁.
    pub l1_mass: f64,
    /// Active set after this vertex's event, in order of entry.
    pub active_set: Vec<usize>,
    /// Squared residual on the unaugmented problem.
    pub residual_sq: f64,
    pub implied_lambda1: f64,
}

impl PathStep {
    pub fn n_nonzero(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverPath {
    pub steps: Vec<PathStep>,
    pub termination: Termination,
}

impl SolverPath {
    /// Number of steps taken after the zero vertex.
    pub fn kappa(&self) -> usize {
        self.steps.len() - 1
    }

    /// CSV dump `step,implied_lambda1,l1_mass,n_nonzero,residual_sq`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,implied_lambda1,l1_mass,n_nonzero,residual_sq\n");
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{}",
                s.implied_lambda1,
                s.l1_mass,
                s.n_nonzero(),
                s.residual_sq
            );
        }
        out
    }
}

/// Stacks `√λ₂·D₂` under `X` and `p` zeros under `y`.
pub fn augment(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    pp: &PenaltyPair,
) -> Result<(Array2<f64>, Array1<f64>), SolverError> {
    let (n, p) = x.dim();
    if y.len() != n || pp.p() != p {
        return Err(SolverError::Dimension(format!(
            "X is {n}×{p}, y has {}, penalties have {}",
            y.len(),
            pp.p()
        )));
    }
    let mut xt = Array2::zeros((n + p, p));
    xt.slice_mut(ndarray::s![..n, ..]).assign(&x);
    let root = pp.lambda2.sqrt();
    for (j, &d) in pp.d2.diag().iter().enumerate() {
        xt[[n + j, j]] = root * d;
    }
    let mut yt = Array1::zeros(n + p);
    yt.slice_mut(ndarray::s![..n]).assign(&y);
    Ok((xt, yt))
}

/// Lower-triangular Cholesky factor of the active Gram block, grown and
/// shrunk one variable at a time.
#[derive(Debug, Default)]
struct ActiveCholesky {
    /// Row-major square storage; entries above the diagonal are zero.
    rows: Vec<Vec<f64>>,
}

impl ActiveCholesky {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn condition_estimate(&self, extra_diag: f64) -> f64 {
        let (mut lo, mut hi) = (extra_diag, extra_diag);
        for (i, r) in self.rows.iter().enumerate() {
            lo = lo.min(r[i]);
            hi = hi.max(r[i]);
        }
        (hi / lo).powi(2)
    }

    /// Appends a variable given its Gram column against the current active
    /// set and its own squared norm. Returns the condition estimate on failure.
    fn push(&mut self, cross: &[f64], self_gram: f64) -> Result<(), f64> {
        let m = self.len();
        let mut l = vec![0.0; m];
        for i in 0..m {
            let row = &self.rows[i];
            let s: f64 = (0..i).map(|k| row[k] * l[k]).sum();
            l[i] = (cross[i] - s) / row[i];
        }
        let d2 = self_gram - l.iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 0.0) {
            return Err(f64::INFINITY);
        }
        let d = d2.sqrt();
        let cond = self.condition_estimate(d);
        if cond > MAX_CONDITION {
            return Err(cond);
        }
        for r in &mut self.rows {
            r.push(0.0);
        }
        l.push(d);
        self.rows.push(l);
        Ok(())
    }

    /// Deletes the variable at position `k`, restoring triangularity with
    /// Givens rotations on the columns.
    fn remove(&mut self, k: usize) {
        self.rows.remove(k);
        let m = self.rows.len();
        for i in k..m {
            let a = self.rows[i][i];
            let b = self.rows[i][i + 1];
            let r = a.hypot(b);
            if r == 0.0 {
                continue;
            }
            let (c, s) = (a / r, b / r);
            for row in self.rows.iter_mut().skip(i) {
                let (u, v) = (row[i], row[i + 1]);
                row[i] = c * u + s * v;
                row[i + 1] = -s * u + c * v;
            }
        }
        for row in &mut self.rows {
            row.truncate(m);
        }
        // keep a positive diagonal
        for i in 0..m {
            if self.rows[i][i] < 0.0 {
                for row in self.rows.iter_mut().skip(i) {
                    row[i] = -row[i];
                }
            }
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.len();
        let mut z = vec![0.0; m];
        for i in 0..m {
            let s: f64 = (0..i).map(|k| self.rows[i][k] * z[k]).sum();
            z[i] = (rhs[i] - s) / self.rows[i][i];
        }
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|k| self.rows[k][i] * z[k]).sum();
            z[i] = (z[i] - s) / self.rows[i][i];
        }
        z
    }

    fn refactor(gram: &Array2<f64>, active: &[usize]) -> Result<Self, (usize, f64)> {
        let mut chol = Self::default();
        for (pos, &j) in active.iter().enumerate() {
            let cross: Vec<f64> = active[..pos].iter().map(|&i| gram[[i, j]]).collect();
            chol.push(&cross, gram[[j, j]]).map_err(|c| (j, c))?;
        }
        Ok(chol)
    }
}

struct Vertex {
    alpha: Vec<f64>,
    active: Vec<usize>,
    l1: f64,
    lambda1: f64,
}

struct Degenerate {
    feature: usize,
    condition: f64,
    vertices: Vec<Vertex>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Picks the candidate with the largest `|c_j|`; ties within `tol` go to the
/// lowest index.
fn most_correlated(c: &[f64], eligible: impl Fn(usize) -> bool, tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &cj) in c.iter().enumerate() {
        if !eligible(j) {
            continue;
        }
        match best {
            Some((_, b)) if cj.abs() <= b + tol => {}
            _ => best = Some((j, cj.abs())),
        }
    }
    best.map(|(j, _)| j)
}

/// LARS with the LASSO modification on the objective `‖y − Aα‖² + λ₁‖α‖₁`,
/// given `G = AᵀA` and `Aᵀy`.
fn lars_on_gram(
    gram: &Array2<f64>,
    xty: &[f64],
    limits: &SolverLimits,
) -> Result<(Vec<Vertex>, Termination), Degenerate> {
    let p = xty.len();
    let max_diag = (0..p).map(|j| gram[[j, j]]).fold(0.0, f64::max);
    let usable: Vec<bool> = (0..p)
        .map(|j| gram[[j, j]] > 1e-14 * max_diag.max(1e-300))
        .collect();

    let mut alpha = vec![0.0; p];
    let mut c = xty.to_vec();
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; p];
    let mut chol = ActiveCholesky::default();
    let mut vertices = Vec::new();

    let c0 = (0..p)
        .filter(|&j| usable[j])
        .map(|j| c[j].abs())
        .fold(0.0, f64::max);
    let vanish = 1e-13 * c0.max(1e-300);
    let tol = limits.tie_tol * c0.max(1.0);

    let first = if c0 > 0.0 {
        most_correlated(&c, |j| usable[j], tol)
    } else {
        None
    };
    let Some(first) = first else {
        vertices.push(Vertex {
            alpha,
            active,
            l1: 0.0,
            lambda1: 0.0,
        });
        return Ok((vertices, Termination::CorrelationsVanished));
    };
    if let Err(condition) = chol.push(&[], gram[[first, first]]) {
        vertices.push(Vertex {
            alpha,
            active,
            l1: 0.0,
            lambda1: 2.0 * c0,
        });
        return Err(Degenerate {
            feature: first,
            condition,
            vertices,
        });
    }
    active.push(first);
    in_active[first] = true;
    vertices.push(Vertex {
        alpha: alpha.clone(),
        active: active.clone(),
        l1: 0.0,
        lambda1: 2.0 * c0,
    });

    let mut barred: Option<usize> = None;
    let termination = loop {
        let step = vertices.len();
        if step > limits.max_steps {
            break Termination::MaxSteps;
        }
        if step % REFACTOR_EVERY == 0 {
            chol = match ActiveCholesky::refactor(gram, &active) {
                Ok(ch) => ch,
                Err((feature, condition)) => {
                    return Err(Degenerate {
                        feature,
                        condition,
                        vertices,
                    })
                }
            };
            for j in 0..p {
                let s: f64 = active.iter().map(|&k| gram[[j, k]] * alpha[k]).sum();
                c[j] = xty[j] - s;
            }
        }

        let big_c = active.iter().map(|&j| c[j].abs()).fold(0.0, f64::max);
        if big_c <= vanish {
            break Termination::CorrelationsVanished;
        }
        let signs: Vec<f64> = active
            .iter()
            .map(|&j| {
                if alpha[j] != 0.0 {
                    sign(alpha[j])
                } else {
                    sign(c[j])
                }
            })
            .collect();
        let w = chol.solve(&signs);
        let a: Vec<f64> = (0..p)
            .map(|j| {
                let row = gram.row(j);
                active.iter().zip(&w).map(|(&k, &wk)| row[k] * wk).sum()
            })
            .collect();

        let mut gamma_entry = f64::INFINITY;
        let mut entrant = None;
        for j in 0..p {
            if in_active[j] || !usable[j] {
                continue;
            }
            for (num, den) in [(big_c - c[j], 1.0 - a[j]), (big_c + c[j], 1.0 + a[j])] {
                if den <= 0.0 {
                    continue;
                }
                let g = num.max(0.0) / den;
                // a just-dropped variable may not bounce straight back in
                if barred == Some(j) && g <= tol {
                    continue;
                }
                if g < gamma_entry - tol {
                    gamma_entry = g;
                    entrant = Some(j);
                }
            }
        }

        let mut gamma_drop = f64::INFINITY;
        let mut dropper = None;
        for (pos, &j) in active.iter().enumerate() {
            if alpha[j] == 0.0 || w[pos] == 0.0 {
                continue;
            }
            let g = -alpha[j] / w[pos];
            if g > 0.0 && g < gamma_drop {
                gamma_drop = g;
                dropper = Some(pos);
            }
        }

        let l1_now: f64 = alpha.iter().map(|v| v.abs()).sum();
        let rate: f64 = active
            .iter()
            .zip(&w)
            .map(|(&j, &wj)| {
                if alpha[j] != 0.0 {
                    sign(alpha[j]) * wj
                } else {
                    wj.abs()
                }
            })
            .sum();
        let gamma_budget = if limits.t_max.is_finite() && rate > 0.0 {
            ((limits.t_max - l1_now) / rate).max(0.0)
        } else {
            f64::INFINITY
        };

        enum Event {
            Budget,
            Drop(usize),
            Enter(usize),
            Exhausted,
        }
        let mut gamma = big_c;
        let mut event = Event::Exhausted;
        if let Some(j) = entrant {
            if gamma_entry < gamma {
                gamma = gamma_entry;
                event = Event::Enter(j);
            }
        }
        if let Some(pos) = dropper {
            if gamma_drop <= gamma {
                gamma = gamma_drop;
                event = Event::Drop(pos);
            }
        }
        if gamma_budget <= gamma {
            gamma = gamma_budget;
            event = Event::Budget;
        }

        for (&j, &wj) in active.iter().zip(&w) {
            alpha[j] += gamma * wj;
        }
        for j in 0..p {
            c[j] -= gamma * a[j];
        }
        if matches!(event, Event::Exhausted) {
            for &j in &active {
                c[j] = 0.0;
            }
        }

        barred = None;
        let mut degenerate = None;
        match event {
            Event::Drop(pos) => {
                let j = active.remove(pos);
                alpha[j] = 0.0;
                in_active[j] = false;
                chol.remove(pos);
                barred = Some(j);
            }
            Event::Enter(j) => {
                let cross: Vec<f64> = active.iter().map(|&k| gram[[k, j]]).collect();
                match chol.push(&cross, gram[[j, j]]) {
                    Ok(()) => {
                        active.push(j);
                        in_active[j] = true;
                    }
                    Err(condition) => degenerate = Some((j, condition)),
                }
            }
            Event::Budget | Event::Exhausted => {}
        }

        let lambda1 = 2.0
            * (0..p)
                .filter(|&j| usable[j])
                .map(|j| c[j].abs())
                .fold(0.0, f64::max);
        let l1 = alpha.iter().map(|v| v.abs()).sum();
        vertices.push(Vertex {
            alpha: alpha.clone(),
            active: active.clone(),
            l1,
            lambda1,
        });

        if let Some((feature, condition)) = degenerate {
            return Err(Degenerate {
                feature,
                condition,
                vertices,
            });
        }
        match event {
            Event::Budget => break Termination::Budget,
            Event::Exhausted => break Termination::CorrelationsVanished,
            _ => {}
        }
        if alpha.iter().filter(|&&v| v != 0.0).count() >= limits.max_nonzeros {
            break Termination::MaxNonzeros;
        }
        if active.is_empty() {
            break Termination::CorrelationsVanished;
        }
    };
    Ok((vertices, termination))
}

fn check_finite(a: impl IntoIterator<Item = f64>, what: &'static str) -> Result<(), SolverError> {
    if a.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(SolverError::NonFinite(what))
    }
}

fn residual_sq(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    beta: &Array1<f64>,
    support: &[usize],
) -> f64 {
    let mut fitted = Array1::<f64>::zeros(x.nrows());
    for &j in support {
        if beta[j] != 0.0 {
            fitted.scaled_add(beta[j], &x.column(j));
        }
    }
    y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Converts solver vertices (in `α`) to path steps in `β = α / d₁`, with the
/// residual measured against `(x, y)`.
fn assemble(
    vertices: Vec<Vertex>,
    termination: Termination,
    d1: &[f64],
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> SolverPath {
    let steps = vertices
        .into_iter()
        .map(|v| {
            let beta: Array1<f64> = v.alpha.iter().zip(d1).map(|(a, d)| a / d).collect();
            let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
            PathStep {
                residual_sq: residual_sq(x, y, &beta, &support),
                beta,
                l1_mass: v.l1,
                active_set: v.active,
                implied_lambda1: v.lambda1,
            }
        })
        .collect();
    SolverPath { steps, termination }
}

fn finish(
    result: Result<(Vec<Vertex>, Termination), Degenerate>,
    d1: &[f64],
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<SolverPath, SolverError> {
    match result {
        Ok((vertices, termination)) => Ok(assemble(vertices, termination, d1, x, y)),
        Err(Degenerate {
            feature,
            condition,
            vertices,
        }) => {
            let step = vertices.len();
            Err(SolverError::DegenerateStep {
                feature,
                step,
                condition,
                partial: Box::new(assemble(vertices, Termination::MaxSteps, d1, x, y)),
            })
        }
    }
}

/// Plain LASSO path `min ‖y − Xα‖² + λ₁‖α‖₁` on an explicit design.
pub fn lars_lasso_path(
    x_work: ArrayView2<'_, f64>,
    y_work: ArrayView1<'_, f64>,
    limits: &SolverLimits,
) -> Result<SolverPath, SolverError> {
    if x_work.nrows() != y_work.len() {
        return Err(SolverError::Dimension(format!(
            "X has {} rows, y has {}",
            x_work.nrows(),
            y_work.len()
        )));
    }
    check_finite(x_work.iter().copied(), "design matrix")?;
    check_finite(y_work.iter().copied(), "response")?;
    let gram = x_work.t().dot(&x_work);
    let xty = x_work.t().dot(&y_work).to_vec();
    let ones = vec![1.0; x_work.ncols()];
    finish(lars_on_gram(&gram, &xty, limits), &ones, x_work, y_work)
}

/// A design matrix with its cross-product cached, for repeated solves
/// against different responses and penalties.
#[derive(Debug, Clone)]
pub struct Design<'a> {
    x: ArrayView2<'a, f64>,
    xtx: Array2<f64>,
}

impl<'a> Design<'a> {
    pub fn new(x: ArrayView2<'a, f64>) -> Result<Self, SolverError> {
        check_finite(x.iter().copied(), "design matrix")?;
        Ok(Self {
            x,
            xtx: x.t().dot(&x),
        })
    }

    pub fn x(&self) -> ArrayView2<'a, f64> {
        self.x
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Generalized elastic-net path for response `y`.
    pub fn enet_path(
        &self,
        y: ArrayView1<'_, f64>,
        pp: &PenaltyPair,
        limits: &SolverLimits,
    ) -> Result<SolverPath, SolverError> {
        let (n, p) = self.x.dim();
        if y.len() != n || pp.p() != p {
            return Err(SolverError::Dimension(format!(
                "X is {n}×{p}, y has {}, penalties have {}",
                y.len(),
                pp.p()
            )));
        }
        check_finite(y.iter().copied(), "response")?;
        let xty = self.x.t().dot(&y);
        self.enet_path_with_xty(y, xty.view(), pp, limits)
    }

    /// As [`Design::enet_path`], reusing a precomputed `Xᵀy`.
    pub fn enet_path_with_xty(
        &self,
        y: ArrayView1<'_, f64>,
        xty: ArrayView1<'_, f64>,
        pp: &PenaltyPair,
        limits: &SolverLimits,
    ) -> Result<SolverPath, SolverError> {
        let p = self.p();
        let d1 = pp.d1.diag();
        let d2 = pp.d2.diag();
        // Gram of the augmented, column-scaled design: D₁⁻¹(XᵀX + λ₂D₂²)D₁⁻¹
        let mut gram = self.xtx.clone();
        for j in 0..p {
            gram[[j, j]] += pp.lambda2 * d2[j] * d2[j];
        }
        for ((i, j), g) in gram.indexed_iter_mut() {
            *g /= d1[i] * d1[j];
        }
        let xty_alpha: Vec<f64> = xty.iter().zip(d1).map(|(v, d)| v / d).collect();
        finish(lars_on_gram(&gram, &xty_alpha, limits), d1, self.x, y)
    }
}

/// Solution path of `‖y − Xβ‖² + λ₁‖D₁β‖₁ + λ₂‖D₂β‖²` over increasing `‖D₁β‖₁`.
pub fn generalized_enet(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    pp: &PenaltyPair,
    limits: &SolverLimits,
) -> Result<SolverPath, SolverError> {
    Design::new(x)?.enet_path(y, pp, limits)
}

/// Cyclic coordinate descent on the generalized elastic-net objective at a
/// fixed `λ₁`. Meant as an independent check on small problems.
pub fn cd_reference_solver(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    pp: &PenaltyPair,
    lambda1: f64,
) -> Result<Array1<f64>, SolverError> {
    const MAX_SWEEPS: usize = 100_000;
    const TOL: f64 = 1e-10;
    let (n, p) = x.dim();
    if y.len() != n || pp.p() != p {
        return Err(SolverError::Dimension(format!(
            "X is {n}×{p}, y has {}, penalties have {}",
            y.len(),
            pp.p()
        )));
    }
    let col_sq: Vec<f64> = x.axis_iter(Axis(1)).map(|c| c.dot(&c)).collect();
    let mut beta = Array1::<f64>::zeros(p);
    let mut resid = y.to_owned();
    let mut delta = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        delta = 0.0;
        for j in 0..p {
            let curvature = col_sq[j] + pp.lambda2 * pp.d2.diag()[j].powi(2);
            if curvature == 0.0 {
                continue;
            }
            let xj = x.column(j);
            let rho = xj.dot(&resid) + col_sq[j] * beta[j];
            let thresh = 0.5 * lambda1 * pp.d1.diag()[j];
            let new = if rho > thresh {
                (rho - thresh) / curvature
            } else if rho < -thresh {
                (rho + thresh) / curvature
            } else {
                0.0
            };
            let change = new - beta[j];
            if change != 0.0 {
                resid.scaled_add(-change, &xj);
                beta[j] = new;
                delta = delta.max(change.abs());
            }
        }
        if delta < TOL {
            return Ok(beta);
        }
    }
    Err(SolverError::NotConverged {
        sweeps: MAX_SWEEPS,
        delta,
    })
}

/// Largest violation of the generalized elastic-net optimality conditions at
/// `beta` for penalty `lambda1`, on the objective scale.
pub fn kkt_violation(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    pp: &PenaltyPair,
    beta: &Array1<f64>,
    lambda1: f64,
) -> f64 {
    let resid = &y - &x.dot(beta);
    let d1 = pp.d1.diag();
    let d2 = pp.d2.diag();
    (0..beta.len())
        .map(|j| {
            // gradient of the smooth part, sign-flipped: 2x̃ⱼᵀ(ỹ − X̃β)
            let g = 2.0 * x.column(j).dot(&resid) - 2.0 * pp.lambda2 * d2[j] * d2[j] * beta[j];
            let bound = lambda1 * d1[j];
            if beta[j] != 0.0 {
                (g - bound * sign(beta[j])).abs()
            } else {
                (g.abs() - bound).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    fn random_problem(seed: u64, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
        let y = Array1::from_shape_fn(n, |_| StandardNormal.sample(&mut rng));
        (x, y)
    }

    fn random_weights(rng: &mut ChaCha8Rng, p: usize) -> AnisotropyMatrix {
        let u = Uniform::new(0.3, 3.0).unwrap();
        AnisotropyMatrix::from_weights((0..p).map(|_| u.sample(rng)).collect()).unwrap()
    }

    #[test]
    fn augment_blocks() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let y = array![1.0, -1.0];
        let (xt, yt) = augment(
            x.view(),
            y.view(),
            &PenaltyPair::unweighted(2, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(xt.slice(ndarray::s![2.., ..]), Array2::<f64>::eye(2));
        assert_eq!(yt, array![1.0, -1.0, 0.0, 0.0]);
        let (xt0, _) = augment(
            x.view(),
            y.view(),
            &PenaltyPair::unweighted(2, 0.0).unwrap(),
        )
        .unwrap();
        assert!(xt0.slice(ndarray::s![2.., ..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn augment_norm_identity() {
        let (x, y) = random_problem(5, 6, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pp = PenaltyPair::new(
            random_weights(&mut rng, 4),
            random_weights(&mut rng, 4),
            0.7,
        )
        .unwrap();
        let (xt, _) = augment(x.view(), y.view(), &pp).unwrap();
        let beta = Array1::from_shape_fn(4, |_| StandardNormal.sample(&mut rng));
        let lhs = xt.dot(&beta).mapv(|v| v * v).sum();
        let xb = x.dot(&beta).mapv(|v| v * v).sum();
        let ridge: f64 = beta
            .iter()
            .zip(pp.d2.diag())
            .map(|(b, d)| (b * d).powi(2))
            .sum();
        assert!((lhs - (xb + 0.7 * ridge)).abs() < 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn orthonormal_design_tracks_soft_threshold() {
        let x = Array2::<f64>::eye(2);
        let y = array![3.0, 1.0];
        let path = lars_lasso_path(x.view(), y.view(), &SolverLimits::with_budget(2.0)).unwrap();
        let last = path.steps.last().unwrap();
        assert!((last.beta[0] - 2.0).abs() < 1e-10);
        assert_eq!(last.beta[1], 0.0);
        assert_eq!(path.termination, Termination::Budget);
        assert!((last.l1_mass - 2.0).abs() < 1e-12);
        // at t = 2 the implied penalty is λ₁ = 2·(3 − 2)
        assert!((last.implied_lambda1 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_response_gives_single_zero_step() {
        let (x, _) = random_problem(1, 5, 3);
        let path =
            lars_lasso_path(x.view(), Array1::zeros(5).view(), &SolverLimits::default()).unwrap();
        assert_eq!(path.steps.len(), 1);
        assert!(path.steps[0].beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn unconstrained_path_ends_at_least_squares() {
        let x = array![
            [1.0, 0.5, 0.0],
            [0.2, 1.0, 0.3],
            [0.0, 0.1, 1.0],
            [0.4, 0.4, 0.4],
            [1.0, -1.0, 0.5]
        ];
        let y = array![1.0, 2.0, -1.0, 0.5, 0.3];
        let path = lars_lasso_path(x.view(), y.view(), &SolverLimits::default()).unwrap();
        assert_eq!(path.termination, Termination::CorrelationsVanished);
        let beta = &path.steps.last().unwrap().beta;
        // normal equations hold at the endpoint
        let grad = x.t().dot(&(&y - &x.dot(beta)));
        assert!(grad.iter().all(|g| g.abs() < 1e-10), "{grad}");
    }

    #[test]
    fn cheaper_l1_weight_enters_first() {
        let x = Array2::<f64>::eye(2);
        let y = array![3.0, 3.0];
        let pp = PenaltyPair::new(
            AnisotropyMatrix::from_weights(vec![2.0, 1.0]).unwrap(),
            AnisotropyMatrix::identity(2),
            0.0,
        )
        .unwrap();
        let path = generalized_enet(x.view(), y.view(), &pp, &SolverLimits::default()).unwrap();
        assert_eq!(path.steps[0].active_set, vec![1]);
        assert!(path.steps[1].beta[1] > 0.0);
        assert_eq!(path.steps[1].beta[0], 0.0);
    }

    #[test]
    fn path_vertices_match_coordinate_descent_and_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for (trial, &lambda2) in [0.0, 0.1, 1.0].iter().cycle().take(12).enumerate() {
            let (x, y) = random_problem(trial as u64, 20, 8);
            let pp = PenaltyPair::new(
                random_weights(&mut rng, 8),
                random_weights(&mut rng, 8),
                lambda2,
            )
            .unwrap();
            let path = generalized_enet(x.view(), y.view(), &pp, &SolverLimits::default()).unwrap();
            for step in &path.steps {
                let kkt = kkt_violation(x.view(), y.view(), &pp, &step.beta, step.implied_lambda1);
                assert!(kkt < 1e-6, "trial {trial}: kkt {kkt}");
                let cd =
                    cd_reference_solver(x.view(), y.view(), &pp, step.implied_lambda1).unwrap();
                let diff = (&cd - &step.beta)
                    .mapv(f64::abs)
                    .fold(0.0, |a: f64, &b| a.max(b));
                assert!(diff < 1e-4, "trial {trial}: diff {diff}");
            }
        }
    }

    #[test]
    fn l1_mass_is_monotone_and_budget_exact() {
        let (x, y) = random_problem(3, 15, 10);
        let limits = SolverLimits::with_budget(1.5);
        let path = lars_lasso_path(x.view(), y.view(), &limits).unwrap();
        for w in path.steps.windows(2) {
            assert!(w[1].l1_mass >= w[0].l1_mass - 1e-12);
        }
        if path.termination == Termination::Budget {
            assert!((path.steps.last().unwrap().l1_mass - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn active_set_changes_by_one() {
        let (x, y) = random_problem(8, 30, 12);
        let path = lars_lasso_path(x.view(), y.view(), &SolverLimits::default()).unwrap();
        let last = path.steps.len() - 1;
        for (i, w) in path.steps.windows(2).enumerate() {
            if i + 1 == last {
                break;
            }
            let d = w[1].active_set.len() as isize - w[0].active_set.len() as isize;
            assert_eq!(d.abs(), 1, "step {}", i + 1);
        }
    }

    #[test]
    fn column_permutation_invariance_with_ridge() {
        let (x, y) = random_problem(21, 12, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let d1 = random_weights(&mut rng, 6);
        let d2 = random_weights(&mut rng, 6);
        let pp = PenaltyPair::new(d1.clone(), d2.clone(), 0.5).unwrap();
        let perm = [3usize, 0, 5, 1, 4, 2];
        let xp = x.select(Axis(1), &perm);
        let permute = |d: &AnisotropyMatrix| {
            AnisotropyMatrix::from_weights(perm.iter().map(|&j| d.diag()[j]).collect()).unwrap()
        };
        let ppp = PenaltyPair::new(permute(&d1), permute(&d2), 0.5).unwrap();
        let a = generalized_enet(x.view(), y.view(), &pp, &SolverLimits::default()).unwrap();
        let b = generalized_enet(xp.view(), y.view(), &ppp, &SolverLimits::default()).unwrap();
        assert_eq!(a.steps.len(), b.steps.len());
        for (sa, sb) in a.steps.iter().zip(&b.steps) {
            for (k, &j) in perm.iter().enumerate() {
                assert!((sa.beta[j] - sb.beta[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cd_closed_forms() {
        let pp = PenaltyPair::unweighted(1, 1.0).unwrap();
        let b = cd_reference_solver(array![[1.0]].view(), array![1.0].view(), &pp, 0.0).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-12);

        let pp = PenaltyPair::unweighted(2, 0.0).unwrap();
        let x = Array2::<f64>::eye(2);
        let b = cd_reference_solver(x.view(), array![3.0, 1.0].view(), &pp, 2.0).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && b[1] == 0.0);
        let b = cd_reference_solver(x.view(), array![3.0, 1.0].view(), &pp, 1e6).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn max_nonzeros_and_steps_stop_early() {
        let (x, y) = random_problem(4, 25, 10);
        let limits = SolverLimits {
            max_nonzeros: 3,
            ..SolverLimits::default()
        };
        let path = lars_lasso_path(x.view(), y.view(), &limits).unwrap();
        assert_eq!(path.termination, Termination::MaxNonzeros);
        assert_eq!(path.steps.last().unwrap().n_nonzero(), 3);
        let limits = SolverLimits {
            max_steps: 2,
            ..SolverLimits::default()
        };
        let path = lars_lasso_path(x.view(), y.view(), &limits).unwrap();
        assert_eq!(path.kappa(), 2);
    }

    #[test]
    fn collinear_column_is_degenerate() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0 + 1e-7]];
        let y = array![1.0, 0.0, 1.0];
        let err = lars_lasso_path(x.view(), y.view(), &SolverLimits::default()).unwrap_err();
        match err {
            SolverError::DegenerateStep {
                feature, partial, ..
            } => {
                assert_eq!(feature, 0);
                assert!(!partial.steps.is_empty());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_non_finite() {
        let x = array![[1.0, f64::NAN]];
        assert!(matches!(
            lars_lasso_path(x.view(), array![1.0].view(), &SolverLimits::default()),
            Err(SolverError::NonFinite(_))
        ));
    }

    #[test]
    fn cholesky_remove_matches_refactor() {
        let (x, _) = random_problem(9, 10, 5);
        let gram = x.t().dot(&x);
        let active = vec![4, 1, 3, 0];
        let mut chol = ActiveCholesky::refactor(&gram, &active).unwrap();
        chol.remove(1);
        let fresh = ActiveCholesky::refactor(&gram, &[4, 3, 0]).unwrap();
        for (a, b) in chol.rows.iter().zip(&fresh.rows) {
            for (u, v) in a.iter().zip(b) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn csv_dump_shape() {
        let x = Array2::<f64>::eye(2);
        let path =
            lars_lasso_path(x.view(), array![3.0, 1.0].view(), &SolverLimits::default()).unwrap();
        let csv = path.to_csv();
        assert!(csv.starts_with("step,implied_lambda1,l1_mass,n_nonzero,residual_sq\n"));
        assert_eq!(csv.lines().count(), path.steps.len() + 1);
    }
}

//! Alternating optimal scoring with anisotropic elastic-net penalties.
//!
//! For each discriminant direction `j` the fit alternates between
//!
//! 1. solving the generalized elastic net for the scored response `Yθⱼ`
//!    over every `λ₂` in the grid, keeping the whole LARS-EN path, and picking
//!    the `(λ₂, κ)` vertex with the smallest residual; and
//! 2. refreshing the score vector `θⱼ ∝ (I − ΘΘᵀπ)π⁻¹YᵀXβⱼ`, normalized so
//!    `θⱼᵀπθⱼ = 1`,
//!
//! until `β` stops moving. The four configurations differ only in where the
//! anisotropy matrix enters the penalty.

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, DatasetError, EpochDataset, IndicatorMatrix};
use crate::divergence::{self, AnisotropyMatrix, DiagSummary, DivergenceError};
use crate::larsen::{Design, PenaltyPair, SolverError, SolverLimits, SolverPath};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("direction {direction}: {reason}")]
    DegenerateDirection { direction: usize, reason: String },
    #[error("direction {direction}: no path vertex with a nonzero coefficient within the budget")]
    NoVertex { direction: usize },
    #[error("residual table has no finite entries")]
    EmptyTable,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Where the anisotropy matrix `D` enters the penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfigId {
    /// `D₁ = I, D₂ = I` (plain sparse discriminant analysis).
    #[serde(rename = "KLSDA0")]
    Klsda0,
    /// `D₁ = D, D₂ = I`.
    #[serde(rename = "KLSDA1")]
    Klsda1,
    /// `D₁ = I, D₂ = D`.
    #[serde(rename = "KLSDA2")]
    Klsda2,
    /// `D₁ = D, D₂ = D`.
    #[serde(rename = "KLSDA3")]
    Klsda3,
}

impl ConfigId {
    pub const ALL: [ConfigId; 4] = [Self::Klsda0, Self::Klsda1, Self::Klsda2, Self::Klsda3];

    pub fn uses_anisotropy(self) -> bool {
        self != Self::Klsda0
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Klsda0 => "KLSDA0",
            Self::Klsda1 => "KLSDA1",
            Self::Klsda2 => "KLSDA2",
            Self::Klsda3 => "KLSDA3",
        };
        f.write_str(s)
    }
}

impl FromStr for ConfigId {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "klsda0" | "sda" => Ok(Self::Klsda0),
            "klsda1" => Ok(Self::Klsda1),
            "klsda2" => Ok(Self::Klsda2),
            "klsda3" => Ok(Self::Klsda3),
            other => Err(FitError::Config(format!("unknown configuration {other:?}"))),
        }
    }
}

/// `D₁` / `D₂` for one configuration; `λ₂` is bound per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyFactory {
    pub d1: AnisotropyMatrix,
    pub d2: AnisotropyMatrix,
}

impl PenaltyFactory {
    pub fn at(&self, lambda2: f64) -> Result<PenaltyPair, SolverError> {
        PenaltyPair::new(self.d1.clone(), self.d2.clone(), lambda2)
    }
}

pub fn build_penalties(config_id: ConfigId, d: &AnisotropyMatrix) -> PenaltyFactory {
    let eye = || AnisotropyMatrix::identity(d.len());
    let (d1, d2) = match config_id {
        ConfigId::Klsda0 => (eye(), eye()),
        ConfigId::Klsda1 => (d.clone(), eye()),
        ConfigId::Klsda2 => (eye(), d.clone()),
        ConfigId::Klsda3 => (d.clone(), d.clone()),
    };
    PenaltyFactory { d1, d2 }
}

/// `count` log-spaced values from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        hi
                    } else if i == 0 {
                        lo
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// Column scaling applied after centering, before the fit. Coefficients are
/// always reported on the centered, unscaled features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnScaling {
    None,
    /// Every column is divided by its Euclidean norm, so `t_max` bounds the
    /// ℓ1 mass of coefficients on unit-length features.
    #[default]
    UnitNorm,
}

impl fmt::Display for ColumnScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::UnitNorm => "unit-norm",
        })
    }
}

impl FromStr for ColumnScaling {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "unit-norm" | "unit_norm" => Ok(Self::UnitNorm),
            other => Err(FitError::Config(format!(
                "unknown column scaling {other:?}"
            ))),
        }
    }
}

impl ColumnScaling {
    /// Per-column divisors for centered `x`; all-zero columns keep 1.
    pub fn factors(self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        match self {
            Self::None => Array1::ones(x.ncols()),
            Self::UnitNorm => x
                .columns()
                .into_iter()
                .map(|c| {
                    let norm = c.dot(&c).sqrt();
                    if norm > 0.0 {
                        norm
                    } else {
                        1.0
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlsdaConfig {
    pub config_id: ConfigId,
    #[serde(default)]
    pub column_scaling: ColumnScaling,
    pub lambda2_grid: Vec<f64>,
    pub t_max: f64,
    pub max_steps: usize,
    pub max_nonzeros: usize,
    pub tie_tol: f64,
    /// Number of discriminant directions, at most `K − 1`.
    pub q: usize,
    pub max_outer_iters: usize,
    pub convergence_tol: f64,
    pub n_bins: usize,
    pub epsilon: f64,
}

impl KlsdaConfig {
    /// Defaults everywhere except the configuration and the ℓ1 budget.
    pub fn new(config_id: ConfigId, t_max: f64) -> Self {
        let limits = SolverLimits::default();
        Self {
            config_id,
            column_scaling: ColumnScaling::UnitNorm,
            lambda2_grid: log_grid(1e-8, 1e-1, 8),
            t_max,
            max_steps: limits.max_steps,
            max_nonzeros: limits.max_nonzeros,
            tie_tol: limits.tie_tol,
            q: 1,
            max_outer_iters: 30,
            convergence_tol: 1e-6,
            n_bins: divergence::DEFAULT_BINS,
            epsilon: divergence::DEFAULT_EPSILON,
        }
    }

    pub fn with_config(&self, config_id: ConfigId) -> Self {
        Self {
            config_id,
            ..self.clone()
        }
    }

    pub fn limits(&self) -> SolverLimits {
        SolverLimits {
            t_max: self.t_max,
            max_steps: self.max_steps,
            max_nonzeros: self.max_nonzeros,
            tie_tol: self.tie_tol,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: String| Err(FitError::Config(m));
        if self.lambda2_grid.is_empty() {
            return bad("λ₂ grid is empty".into());
        }
        if self
            .lambda2_grid
            .iter()
            .any(|&l| !(l > 0.0 && l.is_finite()))
        {
            return bad("λ₂ grid values must be positive and finite".into());
        }
        if self.lambda2_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("λ₂ grid must be strictly increasing".into());
        }
        if !(self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.q == 0 || self.max_outer_iters == 0 || self.max_steps == 0 || self.max_nonzeros == 0
        {
            return bad("q, max_outer_iters, max_steps and max_nonzeros must be ≥ 1".into());
        }
        if !(self.convergence_tol > 0.0 && self.epsilon > 0.0 && self.tie_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.n_bins < 2 {
            return bad("need at least 2 histogram bins".into());
        }
        Ok(())
    }
}

/// `K × q` matrix with ones on the main diagonal.
pub fn init_theta(k: usize, q: usize) -> Result<Array2<f64>, FitError> {
    if q > k {
        return Err(FitError::Config(format!("q = {q} exceeds K = {k}")));
    }
    Ok(Array2::eye(k.max(q))
        .slice(ndarray::s![..k, ..q])
        .to_owned())
}

fn pi_norm(theta: &Array1<f64>, pi: &Array1<f64>) -> f64 {
    theta.iter().zip(pi).map(|(t, p)| t * t * p).sum::<f64>()
}

/// Removes the π-projection onto previous score vectors and rescales to
/// `θᵀπθ = 1`.
fn deflate_and_normalize(
    raw: Array1<f64>,
    theta_prev: ArrayView2<'_, f64>,
    pi: &Array1<f64>,
) -> Option<Array1<f64>> {
    let mut theta = raw;
    if theta_prev.ncols() > 0 {
        // (I − ΘΘᵀπ)θ
        let pi_theta = &theta * pi;
        let coeffs = theta_prev.t().dot(&pi_theta);
        theta = &theta - &theta_prev.dot(&coeffs);
    }
    let norm = pi_norm(&theta, pi);
    let scale = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(norm > 0.0) || !norm.is_finite() || scale == 0.0 || norm.sqrt() <= 1e-12 * scale {
        return None;
    }
    Some(theta / norm.sqrt())
}

/// Score-vector update for direction `j` given `Xβⱼ` and the `j − 1` previous
/// score vectors.
pub fn update_theta(
    y: &Array2<f64>,
    x_proj: ArrayView1<'_, f64>,
    theta_prev: ArrayView2<'_, f64>,
    pi: &Array1<f64>,
) -> Result<Array1<f64>, FitError> {
    let n = y.nrows() as f64;
    let direction = theta_prev.ncols() + 1;
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(FitError::DegenerateDirection {
            direction,
            reason: "a class is empty, π is singular".into(),
        });
    }
    // π⁻¹Yᵀ(Xβ), with π = YᵀY / n
    let raw = y.t().dot(&x_proj) / pi / n;
    deflate_and_normalize(raw, theta_prev, pi).ok_or_else(|| FitError::DegenerateDirection {
        direction,
        reason: "score update vanished (Xβ has no between-class component)".into(),
    })
}

/// Squared residuals indexed by `(λ₂ grid position, path step κ ≥ 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTable {
    pub lambda2: Vec<f64>,
    /// `rows[g][κ − 1]`; rows are as long as the corresponding path.
    pub rows: Vec<Vec<f64>>,
}

impl ResidualTable {
    pub fn from_paths(lambda2: &[f64], paths: &[SolverPath]) -> Self {
        let rows = paths
            .iter()
            .map(|p| p.steps.iter().skip(1).map(|s| s.residual_sq).collect())
            .collect();
        Self {
            lambda2: lambda2.to_vec(),
            rows,
        }
    }

    pub fn get(&self, grid_index: usize, kappa: usize) -> Option<f64> {
        kappa
            .checked_sub(1)
            .and_then(|k| self.rows.get(grid_index)?.get(k))
            .copied()
            .filter(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub grid_index: usize,
    pub lambda2: f64,
    pub kappa: usize,
    pub residual_sq: f64,
}

/// Smallest finite residual; ties prefer the larger `λ₂`, then the smaller `κ`.
pub fn select_optimal(table: &ResidualTable) -> Result<Selection, FitError> {
    let mut best: Option<Selection> = None;
    for (g, row) in table.rows.iter().enumerate() {
        for (k, &r) in row.iter().enumerate() {
            if !r.is_finite() {
                continue;
            }
            let cand = Selection {
                grid_index: g,
                lambda2: table.lambda2[g],
                kappa: k + 1,
                residual_sq: r,
            };
            best = match best {
                None => Some(cand),
                Some(b) => {
                    let better = r < b.residual_sq
                        || (r == b.residual_sq
                            && (cand.lambda2 > b.lambda2
                                || (cand.lambda2 == b.lambda2 && cand.kappa < b.kappa)));
                    Some(if better { cand } else { b })
                }
            };
        }
    }
    best.ok_or(FitError::EmptyTable)
}

/// Per-direction record of the alternation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionFit {
    pub selection: Selection,
    pub outer_iterations: usize,
    pub converged: bool,
    pub last_delta: f64,
    /// Selected residual of every outer iteration, in order.
    pub residual_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlsdaModel {
    /// `p × q` sparse directions.
    pub b: Array2<f64>,
    /// `K × q` score vectors; column `j` is the response that produced `βⱼ`.
    pub theta: Array2<f64>,
    pub selected: Vec<DirectionFit>,
    pub pi: Array1<f64>,
    pub config: KlsdaConfig,
    pub d_matrix: AnisotropyMatrix,
    pub column_means: Array1<f64>,
    /// Divisors used by [`ColumnScaling`] during the fit (ones for `None`).
    pub column_scales: Array1<f64>,
}

impl KlsdaModel {
    pub fn q(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.b.nrows()
    }

    pub fn converged(&self) -> bool {
        self.selected.iter().all(|d| d.converged)
    }

    /// `n × q` projections `XB` of already-centered rows.
    pub fn project(&self, x_centered: ArrayView2<'_, f64>) -> Array2<f64> {
        x_centered.dot(&self.b)
    }
}

struct Iterate {
    beta: Array1<f64>,
    theta: Array1<f64>,
    selection: Selection,
}

/// Solves every grid point for one response. Degenerate steps truncate the
/// path at the last well-conditioned vertex.
fn solve_grid(
    design: &Design<'_>,
    response: ArrayView1<'_, f64>,
    penalties: &PenaltyFactory,
    cfg: &KlsdaConfig,
) -> Result<Vec<SolverPath>, FitError> {
    let xty = design.x().t().dot(&response);
    let limits = cfg.limits();
    cfg.lambda2_grid
        .par_iter()
        .map(|&lambda2| {
            let pp = penalties.at(lambda2)?;
            match design.enet_path_with_xty(response, xty.view(), &pp, &limits) {
                Ok(path) => Ok(path),
                Err(SolverError::DegenerateStep {
                    feature,
                    step,
                    partial,
                    ..
                }) => {
                    warn!("λ₂ = {lambda2:e}: path stopped at step {step} (feature {feature} ill-conditioned)");
                    Ok(*partial)
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

/// Fits `cfg.q` directions on centered `x` with indicator `y` and anisotropy
/// `d` (ignored by KLSDA0).
pub fn fit(
    x_centered: ArrayView2<'_, f64>,
    y: &IndicatorMatrix,
    d: &AnisotropyMatrix,
    cfg: &KlsdaConfig,
) -> Result<KlsdaModel, FitError> {
    cfg.validate()?;
    let (n, p) = x_centered.dim();
    let k = y.n_classes();
    if y.y.nrows() != n {
        return Err(FitError::Config(format!(
            "X has {n} rows, Y has {}",
            y.y.nrows()
        )));
    }
    if d.len() != p {
        return Err(FitError::Config(format!(
            "D has {} entries for p = {p}",
            d.len()
        )));
    }
    if cfg.q > k.saturating_sub(1).max(1) {
        return Err(FitError::Config(format!(
            "q = {} exceeds K − 1 = {}",
            cfg.q,
            k.saturating_sub(1)
        )));
    }
    let pi = y.pi.clone();
    let penalties = build_penalties(cfg.config_id, d);
    let scales = cfg.column_scaling.factors(x_centered);
    let x_work = match cfg.column_scaling {
        ColumnScaling::None => x_centered.to_owned(),
        ColumnScaling::UnitNorm => &x_centered / &scales,
    };
    let design = Design::new(x_work.view())?;
    let initial = init_theta(k, cfg.q)?;

    let mut b = Array2::zeros((p, cfg.q));
    let mut theta_all = Array2::zeros((k, cfg.q));
    let mut selected = Vec::with_capacity(cfg.q);

    for j in 0..cfg.q {
        let direction = j + 1;
        let theta_prev = theta_all.slice(ndarray::s![.., ..j]).to_owned();
        let mut theta = deflate_and_normalize(initial.column(j).to_owned(), theta_prev.view(), &pi)
            .ok_or_else(|| FitError::DegenerateDirection {
                direction,
                reason: "initial score vector is spanned by previous ones".into(),
            })?;

        let mut best: Option<Iterate> = None;
        let mut beta_old: Option<Array1<f64>> = None;
        let mut converged = false;
        let mut last_delta = f64::INFINITY;
        let mut trace = Vec::new();

        for _ in 0..cfg.max_outer_iters {
            let response = y.y.dot(&theta);
            let paths = solve_grid(&design, response.view(), &penalties, cfg)?;
            let table = ResidualTable::from_paths(&cfg.lambda2_grid, &paths);
            let selection = match select_optimal(&table) {
                Ok(s) => s,
                Err(FitError::EmptyTable) => return Err(FitError::NoVertex { direction }),
                Err(e) => return Err(e),
            };
            let beta = paths[selection.grid_index].steps[selection.kappa]
                .beta
                .clone();
            if beta.iter().all(|&v| v == 0.0) {
                return Err(FitError::NoVertex { direction });
            }
            trace.push(selection.residual_sq);

            if let Some(prev) = &best {
                if selection.residual_sq > prev.selection.residual_sq + 1e-9 {
                    warn!(
                        "direction {direction}: selected residual rose from {} to {}; keeping the best iterate",
                        prev.selection.residual_sq, selection.residual_sq
                    );
                    break;
                }
            }
            if let Some(old) = &beta_old {
                last_delta = (&beta - old).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            }
            let x_proj = design.x().dot(&beta);
            beta_old = Some(beta.clone());
            best = Some(Iterate {
                beta,
                theta: theta.clone(),
                selection,
            });
            if last_delta < cfg.convergence_tol {
                converged = true;
                break;
            }
            theta = update_theta(&y.y, x_proj.view(), theta_prev.view(), &pi)?;
        }

        let best = best.expect("at least one outer iteration");
        if !converged {
            warn!(
                "direction {direction}: not converged after {} outer iterations (last Δβ = {last_delta:e})",
                trace.len()
            );
        }
        b.column_mut(j).assign(&(&best.beta / &scales));
        theta_all.column_mut(j).assign(&best.theta);
        selected.push(DirectionFit {
            selection: best.selection,
            outer_iterations: trace.len(),
            converged,
            last_delta,
            residual_trace: trace,
        });
    }

    Ok(KlsdaModel {
        b,
        theta: theta_all,
        selected,
        pi,
        config: cfg.clone(),
        d_matrix: d.clone(),
        column_means: Array1::zeros(p),
        column_scales: scales,
    })
}

/// Anisotropy matrix from a training set's J map.
pub fn anisotropy_for(
    train: &EpochDataset,
    cfg: &KlsdaConfig,
) -> Result<AnisotropyMatrix, FitError> {
    let jm = divergence::j_map(train, cfg.n_bins)?;
    Ok(divergence::anisotropy_from_jmap(&jm, cfg.epsilon))
}

/// Centers the training rows, builds `D` from their J map and fits. The
/// returned model carries the training column means.
pub fn fit_dataset(train: &EpochDataset, cfg: &KlsdaConfig) -> Result<KlsdaModel, FitError> {
    cfg.validate()?;
    let d = if cfg.config_id.uses_anisotropy() {
        anisotropy_for(train, cfg)?
    } else {
        AnisotropyMatrix::identity(train.p())
    };
    let (xc, means) = dataset::center_columns(train.x());
    let y = dataset::indicator(train);
    let mut model = fit(xc.view(), &y, &d, cfg)?;
    model.column_means = means;
    Ok(model)
}

/// Sparse direction as stored in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(v: ArrayView1<'_, f64>) -> Self {
        let (indices, values) = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x))
            .unzip();
        Self { indices, values }
    }

    pub fn to_dense(&self, p: usize) -> Array1<f64> {
        let mut out = Array1::zeros(p);
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

/// On-disk model (`model.json`), shared by KLSDA fits and the FLDA baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub config_id: String,
    pub q: usize,
    pub p: usize,
    pub n_channels: usize,
    pub n_times: usize,
    pub lambda2_selected: Vec<f64>,
    pub kappa_selected: Vec<usize>,
    pub residual_selected: Vec<f64>,
    pub converged: Vec<bool>,
    pub beta: Vec<SparseVector>,
    pub theta: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub d_diag_summary: DiagSummary,
    pub column_means: Vec<f64>,
    pub column_scaling: ColumnScaling,
    pub lambda2_grid: Vec<f64>,
    /// `None` when the budget is unbounded.
    pub t_max: Option<f64>,
    pub n_bins: usize,
    pub epsilon: f64,
    pub seed: Option<u64>,
}

impl ModelFile {
    pub fn from_model(
        model: &KlsdaModel,
        n_channels: usize,
        n_times: usize,
        seed: Option<u64>,
    ) -> Self {
        let cfg = &model.config;
        Self {
            config_id: cfg.config_id.to_string(),
            q: model.q(),
            p: model.p(),
            n_channels,
            n_times,
            lambda2_selected: model.selected.iter().map(|s| s.selection.lambda2).collect(),
            kappa_selected: model.selected.iter().map(|s| s.selection.kappa).collect(),
            residual_selected: model
                .selected
                .iter()
                .map(|s| s.selection.residual_sq)
                .collect(),
            converged: model.selected.iter().map(|s| s.converged).collect(),
            beta: model
                .b
                .columns()
                .into_iter()
                .map(SparseVector::from_dense)
                .collect(),
            theta: model
                .theta
                .columns()
                .into_iter()
                .map(|c| c.to_vec())
                .collect(),
            pi: model.pi.to_vec(),
            d_diag_summary: model.d_matrix.summary(),
            column_means: model.column_means.to_vec(),
            column_scaling: cfg.column_scaling,
            lambda2_grid: cfg.lambda2_grid.clone(),
            t_max: cfg.t_max.is_finite().then_some(cfg.t_max),
            n_bins: cfg.n_bins,
            epsilon: cfg.epsilon,
            seed,
        }
    }

    pub fn direction(&self, j: usize) -> Array1<f64> {
        self.beta[j].to_dense(self.p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }
}

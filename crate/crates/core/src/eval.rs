//! Baselines, scoring and cross-validation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{self, DatasetError, EpochDataset, Fold};
use crate::divergence::{self, AnisotropyMatrix};
use crate::klsda::{self, ConfigId, FitError, KlsdaConfig, KlsdaModel};

/// Class id treated as "target" in binary problems.
pub const TARGET_CLASS: usize = 1;

/// Relative eigenvalue cutoff of the pseudo-inverse used by FLDA.
pub const PINV_RCOND: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need exactly two classes, got {0}")]
    NotBinary(usize),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("scores contain a non-finite value at position {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
}

/// Within-, between- and total covariance (all normalized by `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSummary {
    pub sigma_w: Array2<f64>,
    pub sigma_b: Array2<f64>,
    pub sigma_t: Array2<f64>,
    /// `K × p`, row `k` is the mean of class `k + 1`.
    pub mu_k: Array2<f64>,
    pub mu: Array1<f64>,
}

fn class_means(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
) -> Result<(Array2<f64>, Vec<usize>), EvalError> {
    let (n, p) = x.dim();
    if labels.len() != n {
        return Err(EvalError::Dimension(format!(
            "{n} rows, {} labels",
            labels.len()
        )));
    }
    let mut sums = Array2::zeros((n_classes, p));
    let mut counts = vec![0usize; n_classes];
    for (row, &c) in x.rows().into_iter().zip(labels) {
        if c == 0 || c > n_classes {
            return Err(EvalError::Dimension(format!(
                "label {c} outside 1..={n_classes}"
            )));
        }
        let mut s = sums.row_mut(c - 1);
        s += &row;
        counts[c - 1] += 1;
    }
    for (k, &cnt) in counts.iter().enumerate() {
        if cnt == 0 {
            return Err(EvalError::EmptyClass(k + 1));
        }
        sums.row_mut(k).mapv_inplace(|v| v / cnt as f64);
    }
    Ok((sums, counts))
}

impl CovarianceSummary {
    pub fn estimate(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        n_classes: usize,
    ) -> Result<Self, EvalError> {
        let (mu_k, counts) = class_means(x, labels, n_classes)?;
        let n = x.nrows() as f64;
        let mu = x.mean_axis(Axis(0)).expect("non-empty");
        let total = &x - &mu;
        let sigma_t = total.t().dot(&total) / n;
        let mut within = x.to_owned();
        for (mut row, &c) in within.rows_mut().into_iter().zip(labels) {
            row -= &mu_k.row(c - 1);
        }
        let sigma_w = within.t().dot(&within) / n;
        let mut between = &mu_k - &mu;
        for (mut row, &cnt) in between.rows_mut().into_iter().zip(&counts) {
            row *= (cnt as f64 / n).sqrt();
        }
        let sigma_b = between.t().dot(&between);
        Ok(Self {
            sigma_w,
            sigma_b,
            sigma_t,
            mu_k,
            mu,
        })
    }
}

/// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
/// `rcond · max|λ|` are treated as zero.
pub fn symmetric_pinv(a: &Array2<f64>, rcond: f64) -> Array2<f64> {
    let p = a.nrows();
    let m = DMatrix::from_fn(p, p, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]));
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = rcond * max;
    let mut out = Array2::zeros((p, p));
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= cutoff || lam == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        for i in 0..p {
            let vi = v[i] / lam;
            if vi == 0.0 {
                continue;
            }
            for j in 0..p {
                out[[i, j]] += vi * v[j];
            }
        }
    }
    out
}

/// Fisher direction `Σ̂ₜ⁺(μ₁ − μ₂)` for a two-class problem.
pub fn flda_direction(x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<Array1<f64>, EvalError> {
    let (mu_k, _) = class_means(x, labels, 2)?;
    let n = x.nrows() as f64;
    let mu = x.mean_axis(Axis(0)).expect("non-empty");
    let xc = &x - &mu;
    let sigma_t = xc.t().dot(&xc) / n;
    let diff = &mu_k.row(0) - &mu_k.row(1);
    Ok(symmetric_pinv(&sigma_t, PINV_RCOND).dot(&diff))
}

/// Scores `Xβ`.
pub fn project(
    x: ArrayView2<'_, f64>,
    beta: ArrayView1<'_, f64>,
) -> Result<Array1<f64>, EvalError> {
    if x.ncols() != beta.len() {
        return Err(EvalError::Dimension(format!(
            "X has {} columns, β has {}",
            x.ncols(),
            beta.len()
        )));
    }
    Ok(x.dot(&beta))
}

fn binary_split(labels: &[usize], target: usize) -> (usize, usize) {
    let n1 = labels.iter().filter(|&&l| l == target).count();
    (n1, labels.len() - n1)
}

/// Twice the Mann-Whitney U of the target class (an integer, so ties are
/// exact): number of (target, other) pairs with the target scored higher,
/// doubled, plus one per tied pair.
pub fn mann_whitney_2u(scores: &[f64], labels: &[usize], target: usize) -> Result<u64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Dimension(format!(
            "{} scores, {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let (n1, n2) = binary_split(labels, target);
    if n1 == 0 || n2 == 0 {
        return Err(EvalError::NotBinary(1));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Doubled mid-rank of a tie group at 1-based positions a..=b is a + b.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let doubled = (start + 1 + end + 1) as u64;
        let targets = order[start..=end]
            .iter()
            .filter(|&&i| labels[i] == target)
            .count() as u64;
        doubled_rank_sum += doubled * targets;
        start = end + 1;
    }
    let n1 = n1 as u64;
    Ok(doubled_rank_sum - n1 * (n1 + 1))
}

/// Area under the ROC curve of `scores` for `target` vs the rest.
pub fn roc_auc(scores: &[f64], labels: &[usize], target: usize) -> Result<f64, EvalError> {
    let two_u = mann_whitney_2u(scores, labels, target)?;
    let (n1, n2) = binary_split(labels, target);
    Ok(two_u as f64 / (2 * n1 * n2) as f64)
}

/// One-dimensional LDA rule on projected scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classifier1D {
    /// `±1`; oriented scores rank targets above non-targets on training data.
    pub direction_sign: f64,
    /// Oriented scores at or above the threshold are called targets.
    pub threshold: f64,
    pub prior_target: f64,
    pub prior_other: f64,
}

impl Classifier1D {
    /// The sign follows the training AUC (mean difference when it is exactly
    /// 0.5); the threshold is the pooled-variance LDA cut with priors.
    pub fn fit(scores: &[f64], labels: &[usize], target: usize) -> Result<Self, EvalError> {
        let auc = roc_auc(scores, labels, target)?;
        let (n1, n2) = binary_split(labels, target);
        let mean = |want: bool| {
            scores
                .iter()
                .zip(labels)
                .filter(|(_, &l)| (l == target) == want)
                .map(|(s, _)| s)
                .sum::<f64>()
                / if want { n1 } else { n2 } as f64
        };
        let (m1, m2) = (mean(true), mean(false));
        let sign = if auc > 0.5 || (auc == 0.5 && m1 >= m2) {
            1.0
        } else {
            -1.0
        };
        let (m1, m2) = (sign * m1, sign * m2);
        let ss: f64 = scores
            .iter()
            .zip(labels)
            .map(|(s, &l)| {
                let m = if l == target { m1 } else { m2 };
                (sign * s - m).powi(2)
            })
            .sum();
        let n = (n1 + n2) as f64;
        let var = if n > 2.0 { ss / (n - 2.0) } else { 0.0 };
        let prior_target = n1 as f64 / n;
        let prior_other = n2 as f64 / n;
        let mid = 0.5 * (m1 + m2);
        let gap = m1 - m2;
        let threshold = if gap > 0.0 && var > 0.0 {
            mid + var * (prior_other / prior_target).ln() / gap
        } else {
            mid
        };
        Ok(Self {
            direction_sign: sign,
            threshold,
            prior_target,
            prior_other,
        })
    }

    pub fn orient(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|s| self.direction_sign * s).collect()
    }

    pub fn predict(&self, scores: &[f64]) -> Vec<bool> {
        self.orient(scores)
            .into_iter()
            .map(|s| s >= self.threshold)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityStats {
    pub nonzeros: usize,
    pub p: usize,
    pub fraction: f64,
}

/// Exact-zero count of one direction.
pub fn sparsity_of(beta: ArrayView1<'_, f64>) -> SparsityStats {
    let nonzeros = beta.iter().filter(|&&v| v != 0.0).count();
    let p = beta.len();
    SparsityStats {
        nonzeros,
        p,
        fraction: if p == 0 {
            0.0
        } else {
            nonzeros as f64 / p as f64
        },
    }
}

/// Per-direction sparsity of a fitted model.
pub fn sparsity_stats(model: &KlsdaModel) -> Vec<SparsityStats> {
    model.b.columns().into_iter().map(sparsity_of).collect()
}

/// A discriminant method evaluated by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Klsda(ConfigId),
    Flda,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Klsda(ConfigId::Klsda0),
        Method::Klsda(ConfigId::Klsda1),
        Method::Klsda(ConfigId::Klsda2),
        Method::Klsda(ConfigId::Klsda3),
        Method::Flda,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Klsda(id) => id.fmt(f),
            Method::Flda => f.write_str("FLDA"),
        }
    }
}

impl FromStr for Method {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("flda") {
            return Ok(Method::Flda);
        }
        s.parse::<ConfigId>()
            .map(Method::Klsda)
            .map_err(|_| EvalError::UnknownMethod(s.to_string()))
    }
}

/// Hex SHA-256 of a fold's sorted test indices.
pub fn fold_hash(fold: &Fold) -> String {
    let mut h = Sha256::new();
    for i in &fold.test {
        h.update((*i as u64).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Anisotropy matrix of a fold, computed from its training rows only.
pub fn fold_anisotropy(
    ds: &EpochDataset,
    fold: &Fold,
    cfg: &KlsdaConfig,
) -> Result<AnisotropyMatrix, EvalError> {
    let train = ds.subset(&fold.train)?;
    let jm = divergence::j_map(&train, cfg.n_bins).map_err(FitError::from)?;
    Ok(divergence::anisotropy_from_jmap(&jm, cfg.epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub auc: Option<f64>,
    pub nonzeros: Option<usize>,
    pub lambda2: Option<f64>,
    pub kappa: Option<usize>,
    pub error: Option<String>,
    pub wall_time_s: f64,
}

struct FoldFit {
    beta: Array1<f64>,
    lambda2: Option<f64>,
    kappa: Option<usize>,
}

fn fit_fold(
    ds: &EpochDataset,
    fold: &Fold,
    method: Method,
    cfg: &KlsdaConfig,
) -> Result<(f64, FoldFit), EvalError> {
    let train = ds.subset(&fold.train)?;
    let test = ds.subset(&fold.test)?;
    let (xc, means) = dataset::center_columns(train.x());
    let fitted = match method {
        Method::Flda => FoldFit {
            beta: flda_direction(xc.view(), train.labels())?,
            lambda2: None,
            kappa: None,
        },
        Method::Klsda(id) => {
            let cfg = cfg.with_config(id);
            let d = if id.uses_anisotropy() {
                fold_anisotropy(ds, fold, &cfg)?
            } else {
                AnisotropyMatrix::identity(ds.p())
            };
            let y = dataset::indicator(&train);
            let model = klsda::fit(xc.view(), &y, &d, &cfg)?;
            let sel = model.selected[0].selection;
            FoldFit {
                beta: model.b.column(0).to_owned(),
                lambda2: Some(sel.lambda2),
                kappa: Some(sel.kappa),
            }
        }
    };
    let train_scores = project(xc.view(), fitted.beta.view())?.to_vec();
    let clf = Classifier1D::fit(&train_scores, train.labels(), TARGET_CLASS)?;
    let test_x = dataset::apply_centering(test.x(), &means);
    let test_scores = clf.orient(
        project(test_x.view(), fitted.beta.view())?
            .as_slice()
            .expect("contiguous"),
    );
    let auc = roc_auc(&test_scores, test.labels(), TARGET_CLASS)?;
    Ok((auc, fitted))
}

/// Cross-validated AUC and sparsity of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_id: String,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub n: usize,
    pub p: usize,
    pub fold_hashes: Vec<String>,
    /// `None` marks a failed fold.
    pub fold_auc: Vec<Option<f64>>,
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
    pub sparsity_fraction: Vec<Option<f64>>,
    pub nonzeros: Vec<Option<usize>>,
    pub lambda2_selected: Vec<Option<f64>>,
    pub kappa_selected: Vec<Option<usize>>,
    pub failed_folds: usize,
    pub fold_errors: Vec<Option<String>>,
    pub fold_wall_time_s: Vec<f64>,
    pub wall_time_s: f64,
}

impl EvalReport {
    pub fn mean_sparsity(&self) -> Option<f64> {
        mean(
            &self
                .sparsity_fraction
                .iter()
                .flatten()
                .copied()
                .collect::<Vec<_>>(),
        )
    }

    pub fn has_failures(&self) -> bool {
        self.failed_folds > 0
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation; zero for a single value.
fn sample_std(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// Runs `method` on the given folds. Folds run concurrently; results are
/// kept in fold order. A failing fold is recorded and left out of the mean.
pub fn cross_validate_folds(
    ds: &EpochDataset,
    folds: &[Fold],
    method: Method,
    cfg: &KlsdaConfig,
    seed: u64,
    stratified: bool,
) -> Result<EvalReport, EvalError> {
    if ds.n_classes() != 2 {
        return Err(EvalError::NotBinary(ds.n_classes()));
    }
    let started = Instant::now();
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let t0 = Instant::now();
            let outcome = fit_fold(ds, fold, method, cfg);
            let wall_time_s = t0.elapsed().as_secs_f64();
            let base = FoldResult {
                fold: i,
                n_train: fold.train.len(),
                n_test: fold.test.len(),
                auc: None,
                nonzeros: None,
                lambda2: None,
                kappa: None,
                error: None,
                wall_time_s,
            };
            match outcome {
                Ok((auc, fitted)) => FoldResult {
                    auc: Some(auc),
                    nonzeros: Some(sparsity_of(fitted.beta.view()).nonzeros),
                    lambda2: fitted.lambda2,
                    kappa: fitted.kappa,
                    ..base
                },
                Err(e) => {
                    warn!("{method} fold {i}: {e}");
                    FoldResult {
                        error: Some(e.to_string()),
                        ..base
                    }
                }
            }
        })
        .collect();

    let aucs: Vec<f64> = results.iter().filter_map(|r| r.auc).collect();
    let failed = results.len() - aucs.len();
    if failed > 0 {
        warn!(
            "{method}: {failed} of {} folds failed and are excluded from the mean",
            results.len()
        );
    }
    let p = ds.p();
    Ok(EvalReport {
        config_id: method.to_string(),
        k: folds.len(),
        seed,
        stratified,
        n: ds.n(),
        p,
        fold_hashes: folds.iter().map(fold_hash).collect(),
        fold_auc: results.iter().map(|r| r.auc).collect(),
        mean_auc: mean(&aucs),
        std_auc: sample_std(&aucs),
        sparsity_fraction: results
            .iter()
            .map(|r| r.nonzeros.map(|nz| nz as f64 / p as f64))
            .collect(),
        nonzeros: results.iter().map(|r| r.nonzeros).collect(),
        lambda2_selected: results.iter().map(|r| r.lambda2).collect(),
        kappa_selected: results.iter().map(|r| r.kappa).collect(),
        failed_folds: failed,
        fold_errors: results.iter().map(|r| r.error.clone()).collect(),
        fold_wall_time_s: results.iter().map(|r| r.wall_time_s).collect(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// `k`-fold cross-validation with folds drawn from `seed`, stratified by
/// class unless `stratified` is false.
pub fn cross_validate(
    ds: &EpochDataset,
    method: Method,
    cfg: &KlsdaConfig,
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<EvalReport, EvalError> {
    let folds = dataset::split_kfold(ds.n(), k, seed, stratified.then(|| ds.labels()))?;
    cross_validate_folds(ds, &folds, method, cfg, seed, stratified)
}

/// Benchmark table, one row per report.
pub fn summary_csv(reports: &[EvalReport]) -> String {
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NaN".into());
    let mut out = String::from("config,mean_auc,std_auc,mean_sparsity\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.config_id,
            fmt(r.mean_auc),
            fmt(r.std_auc),
            fmt(r.mean_sparsity())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn brute_2u(scores: &[f64], labels: &[usize]) -> u64 {
        let mut total = 0;
        for (i, &a) in scores.iter().enumerate() {
            for (j, &b) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] != 1 {
                    total += if a > b {
                        2
                    } else if a == b {
                        1
                    } else {
                        0
                    };
                }
            }
        }
        total
    }

    #[test]
    fn auc_examples() {
        assert_eq!(
            roc_auc(&[0.9, 0.8, 0.4, 0.3], &[1, 1, 2, 2], 1).unwrap(),
            1.0
        );
        assert_eq!(roc_auc(&[0.1, 0.9], &[1, 2], 1).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5, 0.5], &[1, 2], 1).unwrap(), 0.5);
        assert!(roc_auc(&[0.1, 0.2], &[1, 1], 1).is_err());
        assert!(roc_auc(&[f64::NAN, 0.2], &[1, 2], 1).is_err());
    }

    #[test]
    fn auc_matches_pair_count_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..60);
            let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
            labels[0] = 1;
            labels[1] = 2;
            let scores: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0..8) as f64 * 0.25)
                .collect();
            assert_eq!(
                mann_whitney_2u(&scores, &labels, 1).unwrap(),
                brute_2u(&scores, &labels)
            );
        }
    }

    #[test]
    fn covariance_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((40, 6), |_| StandardNormal.sample(&mut rng));
        let labels: Vec<usize> = (0..40).map(|i| 1 + i % 3).collect();
        let c = CovarianceSummary::estimate(x.view(), &labels, 3).unwrap();
        let diff = &c.sigma_t - &c.sigma_w - &c.sigma_b;
        let rel = diff.mapv(|v| v * v).sum().sqrt() / c.sigma_t.mapv(|v| v * v).sum().sqrt();
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn flda_hand_example() {
        // Σ̂ₜ = I with class means (1, 0) and (−1, 0).
        let x = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let labels = [1, 1, 2, 2];
        let c = CovarianceSummary::estimate(x.view(), &labels, 2).unwrap();
        assert_eq!(c.sigma_t, Array2::<f64>::eye(2));
        let beta = flda_direction(x.view(), &labels).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-12 && beta[1].abs() < 1e-12);
    }

    #[test]
    fn flda_equal_means_gives_zero() {
        let x = array![[1.0, 2.0], [-1.0, 0.0], [1.0, 2.0], [-1.0, 0.0]];
        let beta = flda_direction(x.view(), &[1, 1, 2, 2]).unwrap();
        assert!(beta.iter().all(|v| v.abs() < 1e-12));
        assert!(flda_direction(x.view(), &[1, 1, 1, 1]).is_err());
    }

    #[test]
    fn pinv_of_singular_matrix() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let pinv = symmetric_pinv(&a, PINV_RCOND);
        let back = a.dot(&pinv).dot(&a);
        assert!((&back - &a).iter().all(|v| v.abs() < 1e-12));
        assert!((pinv[[0, 0]] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(
            project(x.view(), array![0.0, 0.0].view()).unwrap(),
            array![0.0, 0.0]
        );
        assert_eq!(
            project(x.view(), array![1.0, 0.0].view()).unwrap(),
            array![1.0, 3.0]
        );
        assert!(project(x.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn classifier_orients_scores() {
        let scores = [-2.0, -1.5, 1.0, 2.0, 0.5];
        let labels = [1, 1, 2, 2, 2];
        let clf = Classifier1D::fit(&scores, &labels, 1).unwrap();
        assert_eq!(clf.direction_sign, -1.0);
        let oriented = clf.orient(&scores);
        assert_eq!(roc_auc(&oriented, &labels, 1).unwrap(), 1.0);
        assert_eq!(clf.predict(&scores), vec![true, true, false, false, false]);
    }

    #[test]
    fn classifier_sign_gives_max_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let labels: Vec<usize> = (0..30).map(|i| 1 + (i % 3 == 0) as usize).collect();
            let scores: Vec<f64> = (0..30).map(|_| StandardNormal.sample(&mut rng)).collect();
            let clf = Classifier1D::fit(&scores, &labels, 1).unwrap();
            let pairs = 2 * 10 * 20;
            let raw = mann_whitney_2u(&scores, &labels, 1).unwrap();
            let oriented = mann_whitney_2u(&clf.orient(&scores), &labels, 1).unwrap();
            assert_eq!(oriented, raw.max(pairs - raw));
        }
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_of(array![1.0, 2.0].view()).fraction, 1.0);
        assert_eq!(sparsity_of(array![0.0, 0.0].view()).fraction, 0.0);
        assert_eq!(
            sparsity_of(array![0.0, -3.0, 0.0, 1e-300].view()).nonzeros,
            2
        );
    }

    #[test]
    fn methods_parse() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("lda".parse::<Method>().is_err());
    }

    #[test]
    fn summary_layout() {
        let r = EvalReport {
            config_id: "KLSDA0".into(),
            k: 2,
            seed: 1,
            stratified: true,
            n: 10,
            p: 4,
            fold_hashes: vec![],
            fold_auc: vec![Some(0.75), Some(0.25)],
            mean_auc: Some(0.5),
            std_auc: sample_std(&[0.75, 0.25]),
            sparsity_fraction: vec![Some(0.25), None],
            nonzeros: vec![Some(1), None],
            lambda2_selected: vec![],
            kappa_selected: vec![],
            failed_folds: 0,
            fold_errors: vec![],
            fold_wall_time_s: vec![],
            wall_time_s: 0.0,
        };
        let csv = summary_csv(&[r]);
        assert_eq!(
            csv,
            format!(
                "config,mean_auc,std_auc,mean_sparsity\nKLSDA0,0.5,{},0.25\n",
                0.125f64.sqrt()
            )
        );
    }
}

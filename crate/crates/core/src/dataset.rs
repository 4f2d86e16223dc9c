//! Epoch datasets: loading, validation, synthesis, centering and fold splitting.
//!
//! Features are flattened channel-major: the sample at `(channel, time)` lives
//! in column `channel * n_times + time`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: malformed meta file: {source}")]
    Meta {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("label on line {line}: unknown class id {value:?} (expected 1..={k})")]
    UnknownClass {
        line: usize,
        value: String,
        k: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("class {class} has no epochs")]
    EmptyClass { class: usize },
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("cannot split into {k} folds: {reason}")]
    Split { k: usize, reason: String },
}

/// Sidecar metadata describing the geometry of an epoch file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub n: usize,
    pub p: usize,
    pub n_channels: usize,
    pub n_times: usize,
    pub fs_hz: f64,
    pub k: usize,
}

/// Validated epochs × features matrix with 1-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochDataset {
    x: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    n_channels: usize,
    n_times: usize,
    fs_hz: f64,
    class_counts: Vec<usize>,
    class_index_sets: Vec<Vec<usize>>,
}

impl EpochDataset {
    pub fn new(
        x: Array2<f64>,
        labels: Vec<usize>,
        n_classes: usize,
        n_channels: usize,
        n_times: usize,
        fs_hz: f64,
    ) -> Result<Self, DatasetError> {
        let (n, p) = x.dim();
        if labels.len() != n {
            return Err(DatasetError::Dimension(format!(
                "{} labels for {} epochs",
                labels.len(),
                n
            )));
        }
        if n_channels * n_times != p {
            return Err(DatasetError::Dimension(format!(
                "p = {p} but n_channels × n_times = {} × {}",
                n_channels, n_times
            )));
        }
        if n_classes == 0 {
            return Err(DatasetError::Dimension("k must be at least 1".into()));
        }
        for (line, &z) in labels.iter().enumerate() {
            if z == 0 || z > n_classes {
                return Err(DatasetError::UnknownClass {
                    line: line + 1,
                    value: z.to_string(),
                    k: n_classes,
                });
            }
        }
        for ((row, col), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(DatasetError::NonFinite { row, col });
            }
        }
        let mut class_index_sets = vec![Vec::new(); n_classes];
        for (i, &z) in labels.iter().enumerate() {
            class_index_sets[z - 1].push(i);
        }
        if let Some(class) = class_index_sets.iter().position(Vec::is_empty) {
            return Err(DatasetError::EmptyClass { class: class + 1 });
        }
        let class_counts = class_index_sets.iter().map(Vec::len).collect();
        Ok(Self {
            x,
            labels,
            n_classes,
            n_channels,
            n_times,
            fs_hz,
            class_counts,
            class_index_sets,
        })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Row indices of each class, class `k` at position `k - 1`.
    pub fn class_index_sets(&self) -> &[Vec<usize>] {
        &self.class_index_sets
    }

    pub fn meta(&self) -> Meta {
        Meta {
            n: self.n(),
            p: self.p(),
            n_channels: self.n_channels,
            n_times: self.n_times,
            fs_hz: self.fs_hz,
            k: self.n_classes,
        }
    }

    /// Column index of a `(channel, time)` coordinate.
    pub fn column_of(&self, channel: usize, time: usize) -> usize {
        channel * self.n_times + time
    }

    /// Restricts the dataset to the given rows, keeping geometry and class count.
    pub fn subset(&self, rows: &[usize]) -> Result<Self, DatasetError> {
        let x = self.x.select(Axis(0), rows);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::new(
            x,
            labels,
            self.n_classes,
            self.n_channels,
            self.n_times,
            self.fs_hz,
        )
    }

    /// Same labels and geometry, new feature matrix.
    pub fn with_x(&self, x: Array2<f64>) -> Result<Self, DatasetError> {
        Self::new(
            x,
            self.labels.clone(),
            self.n_classes,
            self.n_channels,
            self.n_times,
            self.fs_hz,
        )
    }

    /// Writes `epochs.f64`, `labels.txt` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), DatasetError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| DatasetError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let data_path = dir.join(DATA_FILE);
        let mut bytes = Vec::with_capacity(self.x.len() * 8);
        for row in self.x.rows() {
            for v in row {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(&data_path, bytes).map_err(io_err(&data_path))?;

        let labels_path = dir.join(LABELS_FILE);
        let file = fs::File::create(&labels_path).map_err(io_err(&labels_path))?;
        let mut w = BufWriter::new(file);
        for z in &self.labels {
            writeln!(w, "{z}").map_err(io_err(&labels_path))?;
        }
        w.flush().map_err(io_err(&labels_path))?;

        let meta_path = dir.join(META_FILE);
        let meta = serde_json::to_string_pretty(&self.meta()).expect("meta serializes");
        fs::write(&meta_path, meta + "\n").map_err(io_err(&meta_path))?;
        Ok(())
    }
}

pub const DATA_FILE: &str = "epochs.f64";
pub const LABELS_FILE: &str = "labels.txt";
pub const META_FILE: &str = "meta.json";

/// Loads `epochs.f64` / `labels.txt` / `meta.json` from a directory.
pub fn load_dir(dir: &Path) -> Result<EpochDataset, DatasetError> {
    load_epochs(
        &dir.join(DATA_FILE),
        &dir.join(LABELS_FILE),
        &dir.join(META_FILE),
    )
}

pub fn load_epochs(
    data_path: &Path,
    labels_path: &Path,
    meta_path: &Path,
) -> Result<EpochDataset, DatasetError> {
    let read = |path: &Path| {
        fs::read(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let meta: Meta =
        serde_json::from_slice(&read(meta_path)?).map_err(|source| DatasetError::Meta {
            path: meta_path.to_path_buf(),
            source,
        })?;
    if meta.n_channels * meta.n_times != meta.p {
        return Err(DatasetError::Dimension(format!(
            "meta declares p = {} but n_channels × n_times = {}",
            meta.p,
            meta.n_channels * meta.n_times
        )));
    }

    let raw = read(data_path)?;
    let expected = meta.n * meta.p * 8;
    if raw.len() != expected {
        return Err(DatasetError::Dimension(format!(
            "{} holds {} bytes, meta implies {} × {} × 8 = {}",
            data_path.display(),
            raw.len(),
            meta.n,
            meta.p,
            expected
        )));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let x = Array2::from_shape_vec((meta.n, meta.p), values).expect("shape checked");

    let text = String::from_utf8(read(labels_path)?).map_err(|e| DatasetError::Io {
        path: labels_path.to_path_buf(),
        source: io::Error::new(io::ErrorKind::InvalidData, e),
    })?;
    let mut labels = Vec::with_capacity(meta.n);
    for (line, s) in text.lines().enumerate() {
        let s = s.trim();
        if s.is_empty() {
            continue;
        }
        match s.parse::<usize>() {
            Ok(z) if (1..=meta.k).contains(&z) => labels.push(z),
            _ => {
                return Err(DatasetError::UnknownClass {
                    line: line + 1,
                    value: s.to_string(),
                    k: meta.k,
                })
            }
        }
    }
    if labels.len() != meta.n {
        return Err(DatasetError::Dimension(format!(
            "{} holds {} labels, meta declares n = {}",
            labels_path.display(),
            labels.len(),
            meta.n
        )));
    }
    EpochDataset::new(x, labels, meta.k, meta.n_channels, meta.n_times, meta.fs_hz)
}

/// Binary class-membership matrix `Y` and the diagonal of `π = YᵀY / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix {
    pub y: Array2<f64>,
    pub pi: Array1<f64>,
}

impl IndicatorMatrix {
    pub fn n_classes(&self) -> usize {
        self.pi.len()
    }

    /// Class id (1-based) of every row.
    pub fn labels(&self) -> Vec<usize> {
        self.y
            .rows()
            .into_iter()
            .map(|r| r.iter().position(|&v| v == 1.0).expect("one-hot row") + 1)
            .collect()
    }
}

pub fn indicator(dataset: &EpochDataset) -> IndicatorMatrix {
    indicator_from_labels(dataset.labels(), dataset.n_classes())
}

pub fn indicator_from_labels(labels: &[usize], n_classes: usize) -> IndicatorMatrix {
    let n = labels.len();
    let mut y = Array2::zeros((n, n_classes));
    let mut counts = vec![0usize; n_classes];
    for (i, &z) in labels.iter().enumerate() {
        y[[i, z - 1]] = 1.0;
        counts[z - 1] += 1;
    }
    let pi = counts.iter().map(|&c| c as f64 / n as f64).collect();
    IndicatorMatrix { y, pi }
}

/// Subtracts column means. Returns the centered matrix and the means so the
/// same shift can be applied to held-out rows.
pub fn center_columns(x: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>) {
    let means = x
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(x.ncols()));
    let centered = apply_centering(x, &means);
    (centered, means)
}

pub fn apply_centering(x: ArrayView2<'_, f64>, means: &Array1<f64>) -> Array2<f64> {
    &x - &means.view().insert_axis(Axis(0))
}

/// Parameters of the oddball-epoch generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_target: usize,
    pub n_nontarget: usize,
    pub n_channels: usize,
    pub n_times: usize,
    pub fs_hz: f64,
    pub bump_amplitude: f64,
    pub bump_center_s: f64,
    /// Standard deviation of the Gaussian time profile, in seconds.
    pub bump_width_s: f64,
    pub active_channels: Vec<usize>,
    /// Marginal standard deviation of the per-channel AR(1) noise.
    pub noise_sigma: f64,
    pub ar_coefficient: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_target: 100,
            n_nontarget: 500,
            n_channels: 8,
            n_times: 64,
            fs_hz: 128.0,
            bump_amplitude: 1.0,
            bump_center_s: 0.3,
            bump_width_s: 0.05,
            active_channels: vec![2, 3],
            noise_sigma: 1.0,
            ar_coefficient: 0.5,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn duration_s(&self) -> f64 {
        self.n_times as f64 / self.fs_hz
    }

    /// Places the bump at 300 ms (σ = 50 ms) when the epoch is long enough,
    /// otherwise at half the epoch with σ = a tenth of the epoch.
    pub fn default_bump_timing(n_times: usize, fs_hz: f64) -> (f64, f64) {
        let duration = n_times as f64 / fs_hz;
        if 0.3 + 2.0 * 0.05 < duration {
            (0.3, 0.05)
        } else {
            (0.5 * duration, 0.1 * duration)
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |msg: String| Err(DatasetError::InvalidConfig(msg));
        if self.n_target == 0 || self.n_nontarget == 0 {
            return bad("both classes need at least one epoch".into());
        }
        if self.n_channels == 0 || self.n_times == 0 {
            return bad("n_channels and n_times must be positive".into());
        }
        if !(self.fs_hz > 0.0 && self.fs_hz.is_finite()) {
            return bad(format!("fs_hz must be positive, got {}", self.fs_hz));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            ));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return bad(format!(
                "ar_coefficient must lie in [0, 1), got {}",
                self.ar_coefficient
            ));
        }
        if !self.bump_amplitude.is_finite() || self.bump_center_s < 0.0 || self.bump_width_s <= 0.0
        {
            return bad("bump amplitude must be finite, center ≥ 0 and width > 0".into());
        }
        if self.bump_center_s + 2.0 * self.bump_width_s >= self.duration_s() {
            return bad(format!(
                "bump_center_s + 2·bump_width_s = {} must be below the epoch length {} s",
                self.bump_center_s + 2.0 * self.bump_width_s,
                self.duration_s()
            ));
        }
        if let Some(&c) = self.active_channels.iter().find(|&&c| c >= self.n_channels) {
            return bad(format!(
                "active channel {c} out of range 0..{}",
                self.n_channels
            ));
        }
        Ok(())
    }

    /// Time profile of the target bump, one value per sample.
    pub fn bump_profile(&self) -> Vec<f64> {
        (0..self.n_times)
            .map(|t| {
                let dt = t as f64 / self.fs_hz - self.bump_center_s;
                self.bump_amplitude * (-0.5 * (dt / self.bump_width_s).powi(2)).exp()
            })
            .collect()
    }

    /// Inclusive sample range covering center ± 2 widths, clipped to the epoch.
    pub fn bump_window_samples(&self) -> (usize, usize) {
        let lo = ((self.bump_center_s - 2.0 * self.bump_width_s) * self.fs_hz).ceil();
        let hi = ((self.bump_center_s + 2.0 * self.bump_width_s) * self.fs_hz).floor();
        let lo = lo.max(0.0) as usize;
        let hi = (hi.max(0.0) as usize).min(self.n_times - 1);
        (lo, hi)
    }
}

/// Targets (class 1) come first, then non-targets (class 2). Every channel of
/// every epoch is stationary AR(1) noise; targets add the bump on the active
/// channels.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<EpochDataset, DatasetError> {
    cfg.validate()?;
    let n = cfg.n_target + cfg.n_nontarget;
    let p = cfg.n_channels * cfg.n_times;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = cfg.ar_coefficient;
    let innovation_sd = cfg.noise_sigma * (1.0 - a * a).sqrt();
    let profile = cfg.bump_profile();

    let mut x = Array2::zeros((n, p));
    for (i, mut row) in x.rows_mut().into_iter().enumerate() {
        let is_target = i < cfg.n_target;
        for ch in 0..cfg.n_channels {
            let active = is_target && cfg.active_channels.contains(&ch);
            let mut prev: f64 = 0.0;
            for t in 0..cfg.n_times {
                let e: f64 = StandardNormal.sample(&mut rng);
                let v = if t == 0 {
                    cfg.noise_sigma * e
                } else {
                    a * prev + innovation_sd * e
                };
                prev = v;
                row[ch * cfg.n_times + t] = if active { v + profile[t] } else { v };
            }
        }
    }
    let labels = (0..n)
        .map(|i| if i < cfg.n_target { 1 } else { 2 })
        .collect();
    EpochDataset::new(x, labels, 2, cfg.n_channels, cfg.n_times, cfg.fs_hz)
}

/// One cross-validation fold: sorted training and test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `0..n` into `k` folds. With `stratify_by`, each class is shuffled
/// and dealt round-robin so per-class fold counts differ by at most one.
pub fn split_kfold(
    n: usize,
    k: usize,
    seed: u64,
    stratify_by: Option<&[usize]>,
) -> Result<Vec<Fold>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::Split {
            k,
            reason: "need at least 2 folds".into(),
        });
    }
    if n < k {
        return Err(DatasetError::Split {
            k,
            reason: format!("only {n} rows"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    match stratify_by {
        Some(labels) => {
            if labels.len() != n {
                return Err(DatasetError::Split {
                    k,
                    reason: format!("{} labels for {n} rows", labels.len()),
                });
            }
            let n_classes = labels.iter().copied().max().unwrap_or(0);
            let mut groups = vec![Vec::new(); n_classes + 1];
            for (i, &z) in labels.iter().enumerate() {
                groups[z].push(i);
            }
            let mut next = 0usize;
            for (class, members) in groups.iter_mut().enumerate() {
                if members.is_empty() {
                    continue;
                }
                if members.len() < k {
                    return Err(DatasetError::Split {
                        k,
                        reason: format!("class {class} has only {} members", members.len()),
                    });
                }
                members.shuffle(&mut rng);
                for &i in members.iter() {
                    assignment[i] = next % k;
                    next += 1;
                }
            }
        }
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for (pos, &i) in order.iter().enumerate() {
                assignment[i] = pos % k;
            }
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

//! Class-conditional histograms, Kullback-Leibler / J divergences, the
//! per-feature J map and the determinant-normalized anisotropy matrix built
//! from it.
//!
//! All logarithms are natural, so divergences are in nats.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::EpochDataset;

pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_BIN_SMOOTHING: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("distributions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("negative probability {value} in bin {bin}")]
    Negative { bin: usize, value: f64 },
    #[error("need at least {min} {what}, got {got}")]
    TooFew {
        what: &'static str,
        min: usize,
        got: usize,
    },
    #[error("class {class} has no values")]
    EmptyClass { class: usize },
}

/// Shared bin edges and per-class bin probabilities for one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    pub bin_edges: Array1<f64>,
    /// `K × B`, one probability vector per class.
    pub probs: Array2<f64>,
}

/// Equal-width histograms over the pooled `[min, max]` range of `values`.
///
/// Each class histogram gets `smoothing` added to every bin before
/// normalization so no bin is empty. A constant feature collapses to one bin
/// with probability 1 for every class.
pub fn estimate_class_histograms(
    values: ArrayView1<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    n_bins: usize,
    smoothing: f64,
) -> Result<HistogramPair, DivergenceError> {
    let n = values.len();
    if n < 2 {
        return Err(DivergenceError::TooFew {
            what: "values",
            min: 2,
            got: n,
        });
    }
    if n_bins < 2 {
        return Err(DivergenceError::TooFew {
            what: "bins",
            min: 2,
            got: n_bins,
        });
    }
    if labels.len() != n {
        return Err(DivergenceError::LengthMismatch(n, labels.len()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    let mut counts = Array2::<f64>::zeros((n_classes, n_bins));
    let mut totals = vec![0usize; n_classes];
    for &z in labels {
        totals[z - 1] += 1;
    }
    if let Some(class) = totals.iter().position(|&t| t == 0) {
        return Err(DivergenceError::EmptyClass { class: class + 1 });
    }

    if hi <= lo {
        return Ok(HistogramPair {
            bin_edges: Array1::from(vec![lo - 0.5, lo + 0.5]),
            probs: Array2::ones((n_classes, 1)),
        });
    }

    let width = (hi - lo) / n_bins as f64;
    let bin_edges = Array1::from_shape_fn(n_bins + 1, |b| {
        if b == n_bins {
            hi
        } else {
            lo + b as f64 * width
        }
    });
    for (&v, &z) in values.iter().zip(labels) {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[[z - 1, b]] += 1.0;
    }
    for (mut row, &total) in counts.rows_mut().into_iter().zip(&totals) {
        let denom = total as f64 + n_bins as f64 * smoothing;
        row.mapv_inplace(|c| (c + smoothing) / denom);
    }
    Ok(HistogramPair {
        bin_edges,
        probs: counts,
    })
}

fn check_pair<'a>(f1: ArrayView1<'a, f64>, f2: ArrayView1<'a, f64>) -> Result<(), DivergenceError> {
    if f1.len() != f2.len() {
        return Err(DivergenceError::LengthMismatch(f1.len(), f2.len()));
    }
    for f in [f1, f2] {
        if let Some((bin, &value)) = f.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(DivergenceError::Negative { bin, value });
        }
    }
    Ok(())
}

/// `Σ f1 ln(f1 / f2)` with `0 · ln 0 = 0`.
pub fn kl_divergence<'a>(
    f1: ArrayView1<'a, f64>,
    f2: ArrayView1<'a, f64>,
) -> Result<f64, DivergenceError> {
    check_pair(f1, f2)?;
    Ok(f1
        .iter()
        .zip(f2.iter())
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| {
            if b > 0.0 {
                a * (a / b).ln()
            } else {
                f64::INFINITY
            }
        })
        .sum())
}

/// Symmetrized KL divergence, the mean of both directions.
pub fn j_divergence<'a>(
    f1: ArrayView1<'a, f64>,
    f2: ArrayView1<'a, f64>,
) -> Result<f64, DivergenceError> {
    let forward = kl_divergence(f1, f2)?;
    let backward = kl_divergence(f2, f1)?;
    // fixed summation order keeps the result bitwise symmetric
    let (a, b) = if forward <= backward {
        (forward, backward)
    } else {
        (backward, forward)
    };
    Ok((a + b) / 2.0)
}

/// Sum of pairwise J divergences over all class pairs (rows of `dists`).
pub fn j_divergence_multi(dists: &Array2<f64>) -> Result<f64, DivergenceError> {
    let k = dists.nrows();
    if k < 2 {
        return Err(DivergenceError::TooFew {
            what: "distributions",
            min: 2,
            got: k,
        });
    }
    let mut total = 0.0;
    for i in 0..k - 1 {
        for j in i + 1..k {
            total += j_divergence(dists.row(i), dists.row(j))?;
        }
    }
    Ok(total)
}

/// Per-feature J divergence, reshapeable to a channel × time plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JMap {
    pub values: Vec<f64>,
    pub n_channels: usize,
    pub n_times: usize,
}

impl JMap {
    pub fn get(&self, channel: usize, time: usize) -> f64 {
        self.values[channel * self.n_times + time]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Column indices of the `count` largest values, largest first. Ties go
    /// to the lower index.
    pub fn top_indices(&self, count: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        idx.truncate(count);
        idx
    }

    /// CSV with header `channel,time_index,time_s,j_value`.
    pub fn to_csv(&self, fs_hz: f64) -> String {
        let mut out = String::from("channel,time_index,time_s,j_value\n");
        for c in 0..self.n_channels {
            for t in 0..self.n_times {
                let _ = writeln!(out, "{c},{t},{},{}", t as f64 / fs_hz, self.get(c, t));
            }
        }
        out
    }

    /// Channel × time heatmap, linear gray-to-red scale from 0 to the maximum.
    pub fn to_svg(&self, fs_hz: f64) -> String {
        const CELL_W: usize = 8;
        const CELL_H: usize = 20;
        const MARGIN: usize = 40;
        let width = MARGIN + self.n_times * CELL_W + 10;
        let height = MARGIN + self.n_channels * CELL_H + 30;
        let max = self.max();
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\">\n\
             <text x=\"{MARGIN}\" y=\"16\" font-size=\"12\">J divergence (max {max:.4})</text>\n"
        );
        for c in 0..self.n_channels {
            let y = MARGIN - 14 + c * CELL_H;
            let _ = writeln!(
                svg,
                "<text x=\"2\" y=\"{}\" font-size=\"10\">ch{c}</text>",
                y + CELL_H / 2 + 4
            );
            for t in 0..self.n_times {
                let frac = if max > 0.0 { self.get(c, t) / max } else { 0.0 };
                let shade = (255.0 * (1.0 - frac)).round() as u8;
                let _ = writeln!(
                    svg,
                    "<rect x=\"{}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" fill=\"rgb(255,{shade},{shade})\"/>",
                    MARGIN + t * CELL_W
                );
            }
        }
        let axis_y = MARGIN - 14 + self.n_channels * CELL_H + 16;
        let last = self.n_times.saturating_sub(1);
        let _ = writeln!(
            svg,
            "<text x=\"{MARGIN}\" y=\"{axis_y}\" font-size=\"10\">0 s</text>\n\
             <text x=\"{}\" y=\"{axis_y}\" font-size=\"10\">{:.3} s</text>",
            MARGIN + last * CELL_W,
            last as f64 / fs_hz
        );
        svg.push_str("</svg>\n");
        svg
    }
}

/// J divergence of every column, using the dataset's class labels.
pub fn j_map(dataset: &EpochDataset, n_bins: usize) -> Result<JMap, DivergenceError> {
    j_map_with_smoothing(dataset, n_bins, DEFAULT_BIN_SMOOTHING)
}

pub fn j_map_with_smoothing(
    dataset: &EpochDataset,
    n_bins: usize,
    smoothing: f64,
) -> Result<JMap, DivergenceError> {
    let k = dataset.n_classes();
    if k < 2 {
        return Err(DivergenceError::TooFew {
            what: "classes",
            min: 2,
            got: k,
        });
    }
    let x = dataset.x();
    let labels = dataset.labels();
    let values = (0..dataset.p())
        .into_par_iter()
        .map(|col| {
            let hist = estimate_class_histograms(x.column(col), labels, k, n_bins, smoothing)?;
            j_divergence_multi(&hist.probs)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(JMap {
        values,
        n_channels: dataset.n_channels(),
        n_times: dataset.n_times(),
    })
}

/// Diagonal penalty weights with unit determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyMatrix {
    diag: Vec<f64>,
    pub epsilon_used: f64,
}

impl AnisotropyMatrix {
    pub fn identity(p: usize) -> Self {
        Self {
            diag: vec![1.0; p],
            epsilon_used: 0.0,
        }
    }

    /// Wraps arbitrary positive weights without renormalizing them.
    pub fn from_weights(diag: Vec<f64>) -> Option<Self> {
        diag.iter()
            .all(|&d| d > 0.0 && d.is_finite())
            .then_some(Self {
                diag,
                epsilon_used: 0.0,
            })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn log_det(&self) -> f64 {
        self.diag.iter().map(|d| d.ln()).sum()
    }

    pub fn summary(&self) -> DiagSummary {
        let min = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let geometric_mean = (self.log_det() / self.diag.len() as f64).exp();
        DiagSummary {
            min,
            max,
            geometric_mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagSummary {
    pub min: f64,
    pub max: f64,
    pub geometric_mean: f64,
}

/// `d_i = C / (J_i + ε)` with `C` the geometric mean of the guarded map, so
/// the product of the weights is one. Computed in log space.
pub fn anisotropy_from_jmap(jmap: &JMap, epsilon: f64) -> AnisotropyMatrix {
    let logs: Vec<f64> = jmap.values.iter().map(|&j| (j + epsilon).ln()).collect();
    let log_c = logs.iter().sum::<f64>() / logs.len() as f64;
    AnisotropyMatrix {
        diag: logs.iter().map(|&l| (log_c - l).exp()).collect(),
        epsilon_used: epsilon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dist(rng: &mut ChaCha8Rng, bins: usize) -> Array1<f64> {
        let raw: Array1<f64> = (0..bins).map(|_| rng.random::<f64>() + 1e-6).collect();
        let s = raw.sum();
        raw / s
    }

    // direct summation, written independently of kl_divergence
    fn kl_oracle(f1: &[f64], f2: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..f1.len() {
            if f1[i] != 0.0 {
                s += f1[i] * f1[i].ln() - f1[i] * f2[i].ln();
            }
        }
        s
    }

    #[test]
    fn histogram_symmetric_data() {
        let v = array![0.0, 1.0, 0.0, 1.0];
        let h = estimate_class_histograms(v.view(), &[1, 1, 2, 2], 2, 2, 1e-6).unwrap();
        for k in 0..2 {
            assert!((h.probs[[k, 0]] - 0.5).abs() < 1e-12);
            assert!((h.probs[[k, 1]] - 0.5).abs() < 1e-12);
        }
        assert_eq!(h.bin_edges, array![0.0, 0.5, 1.0]);
    }

    #[test]
    fn histogram_separated_classes() {
        let v = array![0.0, 0.0, 1.0, 1.0];
        let eps = 1e-6;
        let h = estimate_class_histograms(v.view(), &[1, 1, 2, 2], 2, 2, eps).unwrap();
        // counting oracle: class 1 → (2, 0), class 2 → (0, 2), each bin + ε
        let hi = (2.0 + eps) / (2.0 + 2.0 * eps);
        let lo = eps / (2.0 + 2.0 * eps);
        assert!((h.probs[[0, 0]] - hi).abs() < 1e-15);
        assert!((h.probs[[0, 1]] - lo).abs() < 1e-15);
        assert!((h.probs[[1, 0]] - lo).abs() < 1e-15);
        assert!((h.probs[[1, 1]] - hi).abs() < 1e-15);
        for row in h.probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_constant_feature_is_uniform() {
        let v = array![2.0, 2.0, 2.0, 2.0];
        let h = estimate_class_histograms(v.view(), &[1, 2, 1, 2], 2, 20, 1e-6).unwrap();
        assert_eq!(h.probs, Array2::<f64>::ones((2, 1)));
        assert_eq!(j_divergence_multi(&h.probs).unwrap(), 0.0);
    }

    #[test]
    fn histogram_rejects_bad_input() {
        let v = array![1.0, 2.0];
        assert!(estimate_class_histograms(v.view(), &[1, 2], 2, 1, 1e-6).is_err());
        assert!(estimate_class_histograms(v.view(), &[1, 1], 2, 4, 1e-6).is_err());
        assert!(estimate_class_histograms(array![1.0].view(), &[1], 1, 4, 1e-6).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn kl_hand_values() {
        assert_eq!(
            kl_divergence(array![0.5, 0.5].view(), array![0.5, 0.5].view()).unwrap(),
            0.0
        );
        let a = kl_divergence(array![1.0, 0.0].view(), array![0.5, 0.5].view()).unwrap();
        assert!((a - 0.693147).abs() < 1e-6);
        assert!((a - kl_oracle(&[1.0, 0.0], &[0.5, 0.5])).abs() < 1e-15);
        let b = kl_divergence(array![0.5, 0.5].view(), array![0.25, 0.75].view()).unwrap();
        assert!((b - 0.143841).abs() < 1e-6);
    }

    #[test]
    fn kl_errors_and_infinity() {
        assert_eq!(
            kl_divergence(array![1.0].view(), array![0.5, 0.5].view()),
            Err(DivergenceError::LengthMismatch(1, 2))
        );
        assert!(matches!(
            kl_divergence(array![-0.1, 1.1].view(), array![0.5, 0.5].view()),
            Err(DivergenceError::Negative { bin: 0, .. })
        ));
        let inf = kl_divergence(array![0.5, 0.5].view(), array![1.0, 0.0].view()).unwrap();
        assert!(inf.is_infinite());
    }

    #[test]
    fn j_hand_values() {
        let f = array![0.3, 0.7];
        assert_eq!(j_divergence(f.view(), f.view()).unwrap(), 0.0);
        let j = j_divergence(array![0.5, 0.5].view(), array![0.25, 0.75].view()).unwrap();
        let oracle =
            (kl_oracle(&[0.5, 0.5], &[0.25, 0.75]) + kl_oracle(&[0.25, 0.75], &[0.5, 0.5])) / 2.0;
        assert!((j - 0.137326).abs() < 1e-6);
        assert!((j - oracle).abs() < 1e-15);
    }

    #[test]
    fn j_symmetry_and_nonnegativity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let f1 = random_dist(&mut rng, 10);
            let f2 = random_dist(&mut rng, 10);
            assert!(kl_divergence(f1.view(), f2.view()).unwrap() >= 0.0);
            let a = j_divergence(f1.view(), f2.view()).unwrap();
            let b = j_divergence(f2.view(), f1.view()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn j_multi_matches_pairwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Array1<f64>> = (0..3).map(|_| random_dist(&mut rng, 6)).collect();
        let mut m = Array2::zeros((3, 6));
        for (i, r) in rows.iter().enumerate() {
            m.row_mut(i).assign(r);
        }
        let pair = |a: &Array1<f64>, b: &Array1<f64>| {
            (kl_oracle(a.as_slice().unwrap(), b.as_slice().unwrap())
                + kl_oracle(b.as_slice().unwrap(), a.as_slice().unwrap()))
                / 2.0
        };
        let expected =
            pair(&rows[0], &rows[1]) + pair(&rows[0], &rows[2]) + pair(&rows[1], &rows[2]);
        assert!((j_divergence_multi(&m).unwrap() - expected).abs() < 1e-12);

        let two = m.slice(ndarray::s![0..2, ..]).to_owned();
        assert_eq!(
            j_divergence_multi(&two).unwrap(),
            j_divergence(rows[0].view(), rows[1].view()).unwrap()
        );
        let same = Array2::from_shape_fn((3, 6), |(_, j)| rows[0][j]);
        assert_eq!(j_divergence_multi(&same).unwrap(), 0.0);
    }

    #[test]
    fn j_grows_away_from_uniform() {
        let u = array![0.5, 0.5];
        let mut prev = 0.0;
        for step in 1..50 {
            let q = 0.5 + step as f64 * 0.0099;
            let j = j_divergence(array![q, 1.0 - q].view(), u.view()).unwrap();
            assert!(j > prev, "q = {q}");
            prev = j;
            let mirrored = j_divergence(array![1.0 - q, q].view(), u.view()).unwrap();
            assert!((mirrored - j).abs() < 1e-15);
        }
    }

    #[test]
    fn j_map_separable_feature_wins() {
        // feature 0 separates the classes, feature 1 is identical across them
        let x = array![[0.0, 0.0], [0.1, 1.0], [1.0, 0.0], [0.9, 1.0]];
        let ds = EpochDataset::new(x, vec![1, 1, 2, 2], 2, 1, 2, 1.0).unwrap();
        let jm = j_map(&ds, 2).unwrap();
        assert!(jm.values[0] > jm.values[1]);
        assert!(jm.values[1].abs() < 1e-12);
        let csv = jm.to_csv(1.0);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("channel,time_index,time_s,j_value\n"));
    }

    #[test]
    fn anisotropy_hand_value() {
        let jm = JMap {
            values: vec![1.0, 4.0],
            n_channels: 1,
            n_times: 2,
        };
        let d = anisotropy_from_jmap(&jm, 0.0);
        assert!((d.diag()[0] - 2.0).abs() < 1e-12);
        assert!((d.diag()[1] - 0.5).abs() < 1e-12);
        assert!((d.diag()[0] * d.diag()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropy_constant_map_is_identity() {
        let jm = JMap {
            values: vec![0.37; 12],
            n_channels: 3,
            n_times: 4,
        };
        let d = anisotropy_from_jmap(&jm, DEFAULT_EPSILON);
        assert!(d.diag().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn anisotropy_zero_guard() {
        let jm = JMap {
            values: vec![0.0, 0.5, 2.0],
            n_channels: 1,
            n_times: 3,
        };
        let d = anisotropy_from_jmap(&jm, 1e-12);
        assert!(d.diag().iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(d.log_det().abs() < 1e-9 * 3.0);
    }

    #[test]
    fn anisotropy_reverses_order_and_has_unit_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..2560).map(|_| rng.random::<f64>() * 3.0).collect();
        let jm = JMap {
            values: values.clone(),
            n_channels: 40,
            n_times: 64,
        };
        let d = anisotropy_from_jmap(&jm, DEFAULT_EPSILON);
        assert!(d.log_det().abs() <= 1e-9 * 2560.0);
        let mut by_j: Vec<usize> = (0..values.len()).collect();
        by_j.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        for w in by_j.windows(2) {
            if values[w[0]] < values[w[1]] {
                assert!(d.diag()[w[0]] >= d.diag()[w[1]]);
            }
        }
    }

    #[test]
    fn svg_has_one_cell_per_feature() {
        let jm = JMap {
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            n_channels: 2,
            n_times: 3,
        };
        let svg = jm.to_svg(100.0);
        assert_eq!(svg.matches("<rect").count(), 6);
        assert!(svg.contains("fill=\"rgb(255,0,0)\""));
    }
}

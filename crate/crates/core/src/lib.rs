//! Kullback-Leibler penalized sparse discriminant analysis.
//!
//! * [`dataset`]: epoch matrices, labels, synthetic oddball data, folds.
//! * [`divergence`]: class histograms, KL / J divergences, anisotropy weights.
//! * [`larsen`]: generalized elastic-net paths (LARS-EN) and a coordinate-descent check.
//! * [`klsda`]: the alternating optimal-scoring fit with residual-based parameter selection.
//! * [`eval`]: FLDA baseline, ROC AUC, cross-validation and reports.

// `!(x > 0.0)` is used on purpose so NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod divergence;
pub mod eval;
pub mod klsda;
pub mod larsen;

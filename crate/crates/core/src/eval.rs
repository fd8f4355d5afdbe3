//! Precision, recall and F1 over matched page pairs.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::bundle::GroundTruth;
use crate::consensus::MatchResult;
use crate::features::PageFeatures;
use crate::pipeline::Variant;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{what} references {side} page {index}, but the document has {len} pages")]
    IndexOutOfRange {
        what: &'static str,
        side: &'static str,
        index: usize,
        len: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalMetrics<T> {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> EvalMetrics<T> {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let rate = |den: usize| if den == 0 { T::one() } else { T::ratio(tp, den) };
        let precision = rate(tp + fp);
        let recall = rate(tp + fn_);
        let sum = precision + recall;
        let f1 = if sum == T::zero() {
            T::zero()
        } else {
            T::lit(2.0) * precision * recall / sum
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

fn check_range(
    what: &'static str,
    pairs: impl Iterator<Item = (usize, usize)>,
    m: usize,
    n: usize,
) -> Result<(), EvalError> {
    for (o, nw) in pairs {
        if o >= m {
            return Err(EvalError::IndexOutOfRange { what, side: "old", index: o, len: m });
        }
        if nw >= n {
            return Err(EvalError::IndexOutOfRange { what, side: "new", index: nw, len: n });
        }
    }
    Ok(())
}

/// Scores predicted pairs against ground-truth pairs for documents of `m`
/// old and `n` new pages.
pub fn compute_prf<T: Scalar>(
    predicted: &MatchResult,
    gt: &GroundTruth,
    m: usize,
    n: usize,
) -> Result<EvalMetrics<T>, EvalError> {
    check_range("prediction", predicted.pairs(), m, n)?;
    check_range("ground truth", gt.matches.iter().copied(), m, n)?;
    let truth: HashSet<(usize, usize)> = gt.matches.iter().copied().collect();
    let predicted: HashSet<(usize, usize)> = predicted.pairs().collect();
    let tp = predicted.intersection(&truth).count();
    Ok(EvalMetrics::from_counts(tp, predicted.len() - tp, truth.len() - tp))
}

/// Ground truth without pairs whose pages are both blank (no content hash).
pub fn exclude_blank_pairs(gt: &GroundTruth, old: &[PageFeatures], new: &[PageFeatures]) -> GroundTruth {
    let blank = |p: &PageFeatures| p.fingerprint.content_hash.is_empty();
    GroundTruth {
        matches: gt
            .matches
            .iter()
            .copied()
            .filter(|&(o, n)| !(blank(&old[o]) && blank(&new[n])))
            .collect(),
        inserted: gt.inserted.clone(),
        deleted: gt.deleted.clone(),
    }
}

/// The metrics JSON record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub variant: Variant,
    #[serde(flatten)]
    pub metrics: EvalMetrics<f64>,
}

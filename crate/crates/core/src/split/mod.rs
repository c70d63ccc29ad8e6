//! One-dimensional split criteria.
//!
//! All three criteria consume a one-dimensional slice of projected values,
//! sort it internally, and search splits between adjacent distinct sorted
//! values. A returned candidate carries the threshold (midpoint of the
//! boundary pair), the criterion score (lower is better), and the size of
//! the left cluster in sorted order.

mod em_gmm;
mod fast_bic;
mod two_means;

pub use em_gmm::{em_gmm_bic_1d, fit_gmm_1d, EmConfig, GmmFit};
pub use fast_bic::{fast_bic_1d, fast_bic_1d_models};
pub use two_means::two_means_1d;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;

/// Split criterion selectable in forest configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCriterion {
    TwoMeans,
    FastBic,
    EmBic,
}

impl SplitCriterion {
    pub fn name(self) -> &'static str {
        match self {
            SplitCriterion::TwoMeans => "twomeans",
            SplitCriterion::FastBic => "fastbic",
            SplitCriterion::EmBic => "embic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "twomeans" => Some(SplitCriterion::TwoMeans),
            "fastbic" => Some(SplitCriterion::FastBic),
            "embic" => Some(SplitCriterion::EmBic),
            _ => None,
        }
    }
}

impl core::fmt::Display for SplitCriterion {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for SplitCriterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::parse(s).ok_or_else(|| alloc::format!("unknown split criterion `{s}`"))
    }
}

/// Which model produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitModel {
    TwoMeans,
    FastBicSameVar,
    FastBicDiffVar,
    EmBic,
}

/// A scored split of one projected dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    /// Threshold: strictly greater than every left value, at most the
    /// smallest right value. Routing sends `value < split_point` left.
    pub split_point: f64,
    /// Criterion score; lower is better. Finite by construction.
    pub score: f64,
    pub model: SplitModel,
    /// Number of points on the left side, in sorted order.
    pub left_count: usize,
    /// False only when an EM fit stopped at its iteration cap.
    pub converged: bool,
}

/// Dispatch helper used by the tree builder.
pub(crate) fn evaluate_criterion(
    criterion: SplitCriterion,
    z: &[f64],
    min_leaf: usize,
    em: &EmConfig,
) -> Result<Option<SplitCandidate>, CoreError> {
    match criterion {
        SplitCriterion::TwoMeans => two_means_1d(z, min_leaf),
        SplitCriterion::FastBic => fast_bic_1d(z, min_leaf),
        SplitCriterion::EmBic => em_gmm_bic_1d(z, min_leaf, em),
    }
}

pub(crate) fn sorted_values(z: &[f64]) -> Vec<f64> {
    let mut v = z.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Lower clamp for maximum-likelihood variances. Single-point clusters have
/// MLE variance zero, which would send `ln sigma^2` to -inf; the clamp is
/// relative to the squared spread of the node with an absolute backstop.
pub(crate) fn variance_floor(range: f64) -> f64 {
    1e-12 * range * range + 1e-300
}

/// Midpoint of a boundary pair `lo < hi`. If rounding pulls the midpoint
/// down onto `lo` (adjacent floats), use `hi` so the threshold still
/// separates the pair under the strict `< threshold` routing rule.
pub(crate) fn boundary_midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

pub(crate) fn check_min_leaf(n: usize, min_leaf: usize) -> Result<(), CoreError> {
    if min_leaf == 0 {
        return Err(CoreError::InvalidArgument("min_leaf must be at least 1".into()));
    }
    if n < 2 * min_leaf {
        return Err(CoreError::InvalidArgument(alloc::format!(
            "need at least {} values for min_leaf {min_leaf}, got {n}",
            2 * min_leaf
        )));
    }
    Ok(())
}

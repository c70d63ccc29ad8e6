//! Sort-and-scan BIC splitting for a hard-assignment pair of Gaussians.
//!
//! Every boundary between adjacent distinct sorted values is scored as a
//! two-component Gaussian model in which the left cluster belongs to one
//! component and the right cluster to the other, with maximum-likelihood
//! plug-ins for the weights, means and variances. Two variance models are
//! scored: separate per-cluster variances (5 parameters) and a shared
//! pooled variance (4 parameters). The score is the negative twice
//! log-likelihood plus `ln(n) * parameter count`; additive constants that
//! are equal across splits are dropped.
//!
//! Arithmetic is pinned so independent recomputation reproduces scores bit
//! for bit. With `n1`, `n2` the cluster sizes, `w_j = n_j / n`, ascending
//! partial sums for the left moments, right moments formed as total minus
//! left, `sse_j = q_j - (s_j * s_j) / n_j`, and floored variances
//! `v_j = max(sse_j / n_j, floor)` and `v_pool = max((sse_1 + sse_2) / n, floor)`:
//!
//! ```text
//! -2L = -2 * (n1 ln w1 - 0.5 n1 ln(2 pi v_a) + n2 ln w2 - 0.5 n2 ln(2 pi v_b))
//! score = -2L + ln(n) * d_M      (d_M = 5 separate, 4 pooled)
//! ```

use core::f64::consts::TAU;

use crate::error::CoreError;

use super::{boundary_midpoint, check_min_leaf, sorted_values, SplitCandidate, SplitModel};

/// The separate-variance model refuses single-point clusters: their MLE
/// variance collapses to the floor and the likelihood rewards the collapse,
/// so every degenerate boundary would win.
const DIFF_VAR_MIN_CLUSTER: usize = 2;

/// Best split under the better of the two variance models.
pub fn fast_bic_1d(z: &[f64], min_leaf: usize) -> Result<Option<SplitCandidate>, CoreError> {
    scan(z, min_leaf).map(|(overall, _, _)| overall)
}

/// Best split of each variance model separately: `(pooled, separate)`.
pub fn fast_bic_1d_models(
    z: &[f64],
    min_leaf: usize,
) -> Result<(Option<SplitCandidate>, Option<SplitCandidate>), CoreError> {
    scan(z, min_leaf).map(|(_, same, diff)| (same, diff))
}

type ScanResult = (
    Option<SplitCandidate>,
    Option<SplitCandidate>,
    Option<SplitCandidate>,
);

fn scan(z: &[f64], min_leaf: usize) -> Result<ScanResult, CoreError> {
    let n = z.len();
    check_min_leaf(n, min_leaf)?;
    let zs = sorted_values(z);
    if zs[0] == zs[n - 1] {
        return Ok((None, None, None));
    }

    let floor = super::variance_floor(zs[n - 1] - zs[0]);
    let nf = n as f64;
    let ln_n = libm::log(nf);
    let diff_min = min_leaf.max(DIFF_VAR_MIN_CLUSTER);

    let mut total_sum = 0.0f64;
    let mut total_sq = 0.0f64;
    for &v in &zs {
        total_sum += v;
        total_sq += v * v;
    }

    let mut overall: Option<SplitCandidate> = None;
    let mut best_same: Option<SplitCandidate> = None;
    let mut best_diff: Option<SplitCandidate> = None;
    let mut left_sum = 0.0f64;
    let mut left_sq = 0.0f64;
    for s in 1..n {
        let v = zs[s - 1];
        left_sum += v;
        left_sq += v * v;
        if s < min_leaf || s > n - min_leaf || zs[s - 1] == zs[s] {
            continue;
        }
        let n1 = s as f64;
        let n2 = (n - s) as f64;
        let w1 = n1 / nf;
        let w2 = n2 / nf;
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let sse1 = left_sq - (left_sum * left_sum) / n1;
        let sse2 = right_sq - (right_sum * right_sum) / n2;
        let split_point = boundary_midpoint(zs[s - 1], zs[s]);

        let var_pool = ((sse1 + sse2) / nf).max(floor);
        let neg2l_same = -2.0
            * (n1 * libm::log(w1) - 0.5 * n1 * libm::log(TAU * var_pool) + n2 * libm::log(w2)
                - 0.5 * n2 * libm::log(TAU * var_pool));
        let score_same = neg2l_same + ln_n * 4.0;
        let cand_same = SplitCandidate {
            split_point,
            score: score_same,
            model: SplitModel::FastBicSameVar,
            left_count: s,
            converged: true,
        };
        if best_same.as_ref().is_none_or(|b| score_same < b.score) {
            best_same = Some(cand_same.clone());
        }

        let cand_diff = if s >= diff_min && n - s >= diff_min {
            let var1 = (sse1 / n1).max(floor);
            let var2 = (sse2 / n2).max(floor);
            let neg2l_diff = -2.0
                * (n1 * libm::log(w1) - 0.5 * n1 * libm::log(TAU * var1) + n2 * libm::log(w2)
                    - 0.5 * n2 * libm::log(TAU * var2));
            let score_diff = neg2l_diff + ln_n * 5.0;
            let cand = SplitCandidate {
                split_point,
                score: score_diff,
                model: SplitModel::FastBicDiffVar,
                left_count: s,
                converged: true,
            };
            if best_diff.as_ref().is_none_or(|b| score_diff < b.score) {
                best_diff = Some(cand.clone());
            }
            Some(cand)
        } else {
            None
        };

        // Per-boundary model selection; the pooled model wins ties.
        let winner = match cand_diff {
            Some(d) if d.score < cand_same.score => d,
            _ => cand_same,
        };
        if overall.as_ref().is_none_or(|b| winner.score < b.score) {
            overall = Some(winner);
        }
    }
    Ok((overall, best_same, best_diff))
}

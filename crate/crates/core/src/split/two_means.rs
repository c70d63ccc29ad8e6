//! Exact one-dimensional two-means splitting.

use crate::error::CoreError;

use super::{boundary_midpoint, check_min_leaf, sorted_values, SplitCandidate, SplitModel};

/// Find the split minimizing the summed within-cluster squared error
/// `sum_left (x - mu1)^2 + sum_right (x - mu2)^2` over all boundaries
/// between adjacent distinct sorted values with both sides of size at
/// least `min_leaf`.
///
/// Cost is O(n log n): one sort, then a single scan with running sums.
/// Arithmetic is fixed so independent recomputation reproduces scores bit
/// for bit: left moments are ascending partial sums, right moments are
/// total minus left, and each side contributes `q - (s*s)/n` where `s` and
/// `q` are the value and squared-value sums.
///
/// Returns `None` when every value is equal (no boundary exists). Score
/// ties prefer the smallest left count.
pub fn two_means_1d(z: &[f64], min_leaf: usize) -> Result<Option<SplitCandidate>, CoreError> {
    let n = z.len();
    check_min_leaf(n, min_leaf)?;
    let zs = sorted_values(z);
    if zs[0] == zs[n - 1] {
        return Ok(None);
    }

    let mut total_sum = 0.0f64;
    let mut total_sq = 0.0f64;
    for &v in &zs {
        total_sum += v;
        total_sq += v * v;
    }

    let mut best: Option<SplitCandidate> = None;
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
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let sse_left = left_sq - (left_sum * left_sum) / n1;
        let sse_right = right_sq - (right_sum * right_sum) / n2;
        let score = sse_left + sse_right;
        if best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(SplitCandidate {
                split_point: boundary_midpoint(zs[s - 1], zs[s]),
                score,
                model: SplitModel::TwoMeans,
                left_count: s,
                converged: true,
            });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn worked_example() {
        // Candidate partitions of [1, 3, 4, 6] are [[1],[3,4,6]],
        // [[1,3],[4,6]], [[1,3,4],[6]]; the middle one wins with
        // within-cluster SSE 2 + 2 = 4.
        let c = two_means_1d(&[1.0, 3.0, 4.0, 6.0], 1).unwrap().unwrap();
        assert_eq!(c.split_point, 3.5);
        assert_eq!(c.score, 4.0);
        assert_eq!(c.left_count, 2);
    }

    #[test]
    fn constant_input_has_no_split() {
        assert_eq!(two_means_1d(&[2.0; 8], 1).unwrap(), None);
    }

    #[test]
    fn separated_pairs_score_zero() {
        let c = two_means_1d(&[0.0, 0.0, 10.0, 10.0], 1).unwrap().unwrap();
        assert_eq!(c.split_point, 5.0);
        assert_eq!(c.score, 0.0);
        assert_eq!(c.left_count, 2);
    }

    #[test]
    fn min_leaf_violation_is_an_error() {
        assert!(two_means_1d(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(two_means_1d(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn min_leaf_restricts_boundaries() {
        // With min_leaf = 2 the 1|345 and 134|5 boundaries are excluded.
        let c = two_means_1d(&[1.0, 3.0, 4.0, 6.0], 2).unwrap().unwrap();
        assert_eq!(c.left_count, 2);
    }

    #[test]
    fn input_order_is_irrelevant() {
        let sorted = [1.0, 2.0, 2.0, 5.0, 9.0, 9.5];
        let shuffled = [9.5, 2.0, 1.0, 9.0, 2.0, 5.0];
        assert_eq!(two_means_1d(&sorted, 1).unwrap(), two_means_1d(&shuffled, 1).unwrap());
    }

    #[test]
    fn translation_shifts_split_point() {
        let z = [0.3, 1.9, 2.2, 4.0, 7.5];
        let base = two_means_1d(&z, 1).unwrap().unwrap();
        let shifted: Vec<f64> = z.iter().map(|v| v + 100.0).collect();
        let moved = two_means_1d(&shifted, 1).unwrap().unwrap();
        assert_eq!(moved.left_count, base.left_count);
        assert!((moved.split_point - (base.split_point + 100.0)).abs() < 1e-9);
        assert!((moved.score - base.score).abs() < 1e-6);
    }

    #[test]
    fn scaling_preserves_argmin_index() {
        let z = [0.3, 1.9, 2.2, 4.0, 7.5, 8.1];
        let base = two_means_1d(&z, 1).unwrap().unwrap();
        for alpha in [0.25, 4.0, 1024.0] {
            let scaled: Vec<f64> = z.iter().map(|v| v * alpha).collect();
            let got = two_means_1d(&scaled, 1).unwrap().unwrap();
            assert_eq!(got.left_count, base.left_count);
        }
    }
}

//! Soft two-component Gaussian mixture splitting via EM, scored with BIC.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::CoreError;

use super::{check_min_leaf, sorted_values, variance_floor, SplitCandidate, SplitModel};

/// EM settings. Restart `r` initializes the component means at the
/// (q, 1 - q) sample quantiles with q drawn from a fixed ladder, both
/// variances at the global variance and equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Convergence threshold on the change in log-likelihood.
    pub tol: f64,
    pub restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-6, restarts: 3 }
    }
}

const INIT_QUANTILES: [f64; 3] = [0.25, 0.10, 0.35];

/// A fitted two-component one-dimensional Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub log_likelihood: f64,
    pub converged: bool,
}

fn log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let diff = x - mean;
    -0.5 * libm::log(TAU * var) - (diff * diff) / (2.0 * var)
}

/// Fit a two-component mixture by EM with the configured restarts; keeps
/// the restart with the best final log-likelihood. `None` when every
/// restart collapses (a component weight vanishing or a non-finite
/// likelihood) or the input is constant.
pub fn fit_gmm_1d(z: &[f64], cfg: &EmConfig) -> Option<GmmFit> {
    let n = z.len();
    let zs = sorted_values(z);
    if n < 2 || zs[0] == zs[n - 1] {
        return None;
    }
    let floor = variance_floor(zs[n - 1] - zs[0]);
    let nf = n as f64;
    let mean_all = zs.iter().sum::<f64>() / nf;
    let var_all = (zs.iter().map(|v| (v - mean_all) * (v - mean_all)).sum::<f64>() / nf).max(floor);

    let restarts = cfg.restarts.max(1);
    let mut best: Option<GmmFit> = None;
    for r in 0..restarts {
        let q = INIT_QUANTILES[r % INIT_QUANTILES.len()];
        let mut m1 = quantile(&zs, q);
        let mut m2 = quantile(&zs, 1.0 - q);
        if m1 == m2 {
            // Heavy duplication: spread the initial means apart.
            let sd = libm::sqrt(var_all);
            m1 -= 0.5 * sd;
            m2 += 0.5 * sd;
        }
        let (mut w1, mut w2) = (0.5f64, 0.5f64);
        let (mut v1, mut v2) = (var_all, var_all);
        let mut resp = Vec::with_capacity(n);
        let mut prev_ll = f64::NEG_INFINITY;
        let mut converged = false;
        let mut degenerate = false;
        let mut ll = f64::NEG_INFINITY;
        for _ in 0..cfg.max_iter {
            // E step in log space.
            resp.clear();
            ll = 0.0;
            for &x in &zs {
                let l1 = libm::log(w1) + log_pdf(x, m1, v1);
                let l2 = libm::log(w2) + log_pdf(x, m2, v2);
                let m = l1.max(l2);
                let lse = m + libm::log(libm::exp(l1 - m) + libm::exp(l2 - m));
                ll += lse;
                resp.push(libm::exp(l1 - lse));
            }
            if !ll.is_finite() {
                degenerate = true;
                break;
            }
            if (ll - prev_ll).abs() <= cfg.tol {
                converged = true;
                break;
            }
            prev_ll = ll;
            // M step.
            let r1: f64 = resp.iter().sum();
            let r2 = nf - r1;
            if r1 < 1e-9 || r2 < 1e-9 {
                degenerate = true;
                break;
            }
            let mu1 = zs.iter().zip(&resp).map(|(x, g)| x * g).sum::<f64>() / r1;
            let mu2 = zs.iter().zip(&resp).map(|(x, g)| x * (1.0 - g)).sum::<f64>() / r2;
            v1 = (zs.iter().zip(&resp).map(|(x, g)| g * (x - mu1) * (x - mu1)).sum::<f64>() / r1)
                .max(floor);
            v2 = (zs
                .iter()
                .zip(&resp)
                .map(|(x, g)| (1.0 - g) * (x - mu2) * (x - mu2))
                .sum::<f64>()
                / r2)
                .max(floor);
            m1 = mu1;
            m2 = mu2;
            w1 = r1 / nf;
            w2 = r2 / nf;
        }
        if degenerate || !ll.is_finite() {
            continue;
        }
        let fit = GmmFit {
            weights: [w1, w2],
            means: [m1, m2],
            variances: [v1, v2],
            log_likelihood: ll,
            converged,
        };
        if best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
            best = Some(fit);
        }
    }
    best
}

/// Nearest-rank quantile of pre-sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = libm::round(q * (sorted.len() - 1) as f64) as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// EM-based mixture split. The score is `-2 ln L + ln(n) * 5` with the
/// observed-data likelihood of the fitted mixture; the threshold is the
/// point between the two means where the weighted component densities are
/// equal (the quadratic crossing), falling back to the midpoint of the
/// means when no root lies between them. Degenerate fits and thresholds
/// that fail to separate the data return `None`; a fit that stops at the
/// iteration cap is returned with `converged = false`.
pub fn em_gmm_bic_1d(
    z: &[f64],
    min_leaf: usize,
    cfg: &EmConfig,
) -> Result<Option<SplitCandidate>, CoreError> {
    let n = z.len();
    check_min_leaf(n, min_leaf)?;
    let Some(fit) = fit_gmm_1d(z, cfg) else {
        return Ok(None);
    };
    let split_point = equal_likelihood_point(&fit);
    if !split_point.is_finite() {
        return Ok(None);
    }
    let left_count = z.iter().filter(|&&v| v < split_point).count();
    if left_count == 0 || left_count == n {
        return Ok(None);
    }
    let score = -2.0 * fit.log_likelihood + libm::log(n as f64) * 5.0;
    Ok(Some(SplitCandidate {
        split_point,
        score,
        model: SplitModel::EmBic,
        left_count,
        converged: fit.converged,
    }))
}

/// Solve `w1 N(x; m1, v1) = w2 N(x; m2, v2)` for x, preferring a root that
/// lies strictly between the two means.
fn equal_likelihood_point(fit: &GmmFit) -> f64 {
    let (lo, hi, w_lo, w_hi, v_lo, v_hi) = if fit.means[0] <= fit.means[1] {
        (fit.means[0], fit.means[1], fit.weights[0], fit.weights[1], fit.variances[0], fit.variances[1])
    } else {
        (fit.means[1], fit.means[0], fit.weights[1], fit.weights[0], fit.variances[1], fit.variances[0])
    };
    let midpoint = (lo + hi) / 2.0;
    // Equality of log densities:
    //   ln w_lo - ln(2 pi v_lo)/2 - (x-lo)^2/(2 v_lo)
    // = ln w_hi - ln(2 pi v_hi)/2 - (x-hi)^2/(2 v_hi)
    // rearranged to a x^2 + b x + c = 0.
    let a = 0.5 / v_hi - 0.5 / v_lo;
    let b = lo / v_lo - hi / v_hi;
    let c = (hi * hi) / (2.0 * v_hi) - (lo * lo) / (2.0 * v_lo)
        + libm::log(w_lo / w_hi)
        + 0.5 * libm::log(v_hi / v_lo);
    if libm::fabs(a) < 1e-300 {
        // Equal variances: the crossing is linear.
        if b == 0.0 {
            return midpoint;
        }
        let x = -c / b;
        return if x > lo && x < hi { x } else { midpoint };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return midpoint;
    }
    let sq = libm::sqrt(disc);
    // Numerically stable pair of roots.
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    let roots = [q / a, if q != 0.0 { c / q } else { f64::INFINITY }];
    for &x in &roots {
        if x.is_finite() && x > lo && x < hi {
            return x;
        }
    }
    midpoint
}

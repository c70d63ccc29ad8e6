//! Synthetic manifold benchmarks with exact geodesic oracles, plus noise
//! augmentation and per-feature rescaling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;
use crate::error::CoreError;
use crate::oracle::GeodesicOracle;

/// Gaussian noise columns appended to a dataset: `extra_dims` i.i.d.
/// N(0, `variance`) features drawn from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub extra_dims: usize,
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Conventional noise variance for the benchmark experiments.
    pub const DEFAULT_VARIANCE: f64 = 70.0;

    pub fn new(extra_dims: usize, variance: f64, seed: u64) -> Result<Self, CoreError> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "noise variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Self { extra_dims, variance, seed })
    }
}

/// `n` points centered on an equally spaced grid over the open interval
/// (a, b): `t_k = a + (b - a) (k + 1/2) / n`.
fn centered_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * (k as f64 + 0.5) / n as f64)
        .collect()
}

/// Segment (4t, 6t, 9t) with t gridded over (0, 1).
pub fn gen_linear(n: usize) -> Result<(DataMatrix, GeodesicOracle), CoreError> {
    if n < 2 {
        return Err(CoreError::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let t = centered_grid(0.0, 1.0, n);
    let mut values = Vec::with_capacity(n * 3);
    for &tk in &t {
        values.extend_from_slice(&[4.0 * tk, 6.0 * tk, 9.0 * tk]);
    }
    Ok((DataMatrix::new(n, 3, values)?, GeodesicOracle::Line { t }))
}

/// Helix (t cos t, t sin t, t) with t gridded over (2π, 9π).
pub fn gen_helix(n: usize) -> Result<(DataMatrix, GeodesicOracle), CoreError> {
    if n < 2 {
        return Err(CoreError::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    let t = centered_grid(2.0 * PI, 9.0 * PI, n);
    let mut values = Vec::with_capacity(n * 3);
    for &tk in &t {
        values.extend_from_slice(&[tk * libm::cos(tk), tk * libm::sin(tk), tk]);
    }
    Ok((DataMatrix::new(n, 3, values)?, GeodesicOracle::Helix { t }))
}

/// Factor `n` into a `n_u x n_v` grid. The u axis spans 2π and the v axis
/// π, so equal angular spacing wants `n_u ≈ sqrt(2n)`; we pick the divisor
/// of `n` nearest that target (ties toward the smaller divisor).
fn sphere_grid_factors(n: usize) -> (usize, usize) {
    let target = libm::ceil(libm::sqrt(2.0 * n as f64)) as usize;
    let mut best = (1usize, n);
    let mut best_gap = usize::MAX;
    for nu in 1..=n {
        if !n.is_multiple_of(nu) {
            continue;
        }
        let gap = nu.abs_diff(target);
        if gap < best_gap {
            best_gap = gap;
            best = (nu, n / nu);
        }
    }
    best
}

/// Sphere of radius 9: (r cos u sin v, r sin u sin v, r cos v) on a grid
/// over u in (0, 2π) and v in (0, π), endpoints excluded so the poles are
/// never sampled.
pub fn gen_sphere(n: usize) -> Result<(DataMatrix, GeodesicOracle), CoreError> {
    if n < 4 {
        return Err(CoreError::InvalidArgument(format!("need n >= 4, got {n}")));
    }
    let radius = 9.0;
    let (nu, nv) = sphere_grid_factors(n);
    let us = centered_grid(0.0, 2.0 * PI, nu);
    let vs = centered_grid(0.0, PI, nv);
    let mut values = Vec::with_capacity(n * 3);
    let mut uv = Vec::with_capacity(n);
    for &u in &us {
        for &v in &vs {
            values.extend_from_slice(&[
                radius * libm::cos(u) * libm::sin(v),
                radius * libm::sin(u) * libm::sin(v),
                radius * libm::cos(v),
            ]);
            uv.push([u, v]);
        }
    }
    Ok((DataMatrix::new(n, 3, values)?, GeodesicOracle::Sphere { radius, uv }))
}

const GMM_WEIGHTS: [f64; 3] = [0.3, 0.3, 0.4];
const GMM_MEANS: [f64; 3] = [-3.0, 0.0, 3.0];

/// Three spherical unit-variance Gaussians in R^3 with weights
/// (0.3, 0.3, 0.4) and means (-3,-3,-3), (0,0,0), (3,3,3). The oracle
/// labels each point with the component that generated it.
pub fn gen_gmm(n: usize, seed: u64) -> Result<(DataMatrix, GeodesicOracle), CoreError> {
    if n < 3 {
        return Err(CoreError::InvalidArgument(format!("need n >= 3, got {n}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * 3);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let comp = if u < GMM_WEIGHTS[0] {
            0
        } else if u < GMM_WEIGHTS[0] + GMM_WEIGHTS[1] {
            1
        } else {
            2
        };
        for _ in 0..3 {
            let z: f64 = rng.sample(StandardNormal);
            values.push(GMM_MEANS[comp] + z);
        }
        labels.push(comp as u32);
    }
    Ok((DataMatrix::new(n, 3, values)?, GeodesicOracle::Components { labels }))
}

/// Append `spec.extra_dims` i.i.d. N(0, `spec.variance`) columns. The
/// original columns are copied bit-for-bit; draws are made point by point,
/// noise dimension inner.
pub fn add_noise(x: &DataMatrix, spec: &NoiseSpec) -> DataMatrix {
    let (n, p) = (x.n_points(), x.n_features());
    let d_extra = spec.extra_dims;
    if d_extra == 0 {
        return x.clone();
    }
    let sd = libm::sqrt(spec.variance);
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(n * (p + d_extra));
    for i in 0..n {
        values.extend_from_slice(x.row(i));
        for _ in 0..d_extra {
            let z: f64 = rng.sample(StandardNormal);
            values.push(sd * z);
        }
    }
    DataMatrix::new(n, p + d_extra, values).expect("noise augmentation preserves validity")
}

/// Linearly rescale every column to [0, 1]. Constant columns map to all
/// zeros (any constant is equivalent for neighbor ranking).
pub fn rescale01(x: &DataMatrix) -> DataMatrix {
    let (n, p) = (x.n_points(), x.n_features());
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for i in 0..n {
        for (j, &v) in x.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let mut values = Vec::with_capacity(n * p);
    for i in 0..n {
        for (j, &v) in x.row(i).iter().enumerate() {
            if hi[j] > lo[j] {
                values.push((v - lo[j]) / (hi[j] - lo[j]));
            } else {
                values.push(0.0);
            }
        }
    }
    DataMatrix::new(n, p, values).expect("rescaling preserves validity")
}

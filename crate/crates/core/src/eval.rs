//! Geodesic precision and recall of neighbor rankings against an oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::DataMatrix;
use crate::error::CoreError;
use crate::oracle::GeodesicOracle;
use crate::proximity::ProximityMatrix;

/// Dense N x N matrix of learner-reported distances (smaller = nearer).
/// Rows are per-query; symmetry is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, CoreError> {
        if values.len() != n * n {
            return Err(CoreError::InvalidArgument(format!(
                "distance matrix needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CoreError::InvalidArgument("distances must be finite".into()));
        }
        Ok(Self { n, values })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Where a neighbor ranking comes from. Proximity ranks by descending
/// similarity; the other two rank by ascending distance. All ties break
/// toward the smaller point index, so every ranking is a total order.
#[derive(Debug, Clone, Copy)]
pub enum NeighborSource<'a> {
    Proximity(&'a ProximityMatrix),
    /// Exact pairwise Euclidean distances on the observed matrix.
    Euclidean(&'a DataMatrix),
    ExternalDistances(&'a DistanceMatrix),
}

impl NeighborSource<'_> {
    pub fn len(&self) -> usize {
        match self {
            NeighborSource::Proximity(p) => p.n(),
            NeighborSource::Euclidean(x) => x.n_points(),
            NeighborSource::ExternalDistances(d) => d.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points except `i`, nearest first.
    fn order(&self, i: usize) -> Vec<u32> {
        let n = self.len();
        // Keys are negated similarity or plain distance: ascending sort.
        let mut keyed: Vec<(f64, u32)> = Vec::with_capacity(n - 1);
        match self {
            NeighborSource::Proximity(p) => {
                for j in 0..n {
                    if j != i {
                        keyed.push((-p.value(i, j), j as u32));
                    }
                }
            }
            NeighborSource::Euclidean(x) => {
                let qi = x.row(i);
                for j in 0..n {
                    if j != i {
                        let sq: f64 = qi
                            .iter()
                            .zip(x.row(j))
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        keyed.push((sq, j as u32));
                    }
                }
            }
            NeighborSource::ExternalDistances(d) => {
                for j in 0..n {
                    if j != i {
                        keyed.push((d.get(i, j), j as u32));
                    }
                }
            }
        }
        keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, j)| j).collect()
    }
}

/// Precision/recall at one neighborhood size, averaged over queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
}

fn check_k(k: usize, n: usize) -> Result<(), CoreError> {
    if k < 1 || k >= n {
        return Err(CoreError::InvalidArgument(format!(
            "neighborhood size k = {k} must lie in [1, {}]",
            n - 1
        )));
    }
    Ok(())
}

/// The latent-truth relevant set for query `i`: the k nearest by oracle
/// distance (ties toward the smaller index) for continuous oracles, or the
/// whole component minus the query itself for disconnected ones (k is
/// ignored there).
pub fn true_neighbors(
    oracle: &GeodesicOracle,
    i: usize,
    k: usize,
) -> Result<Vec<u32>, CoreError> {
    let n = oracle.len();
    check_k(k, n)?;
    if let Some(labels) = oracle.labels() {
        return Ok((0..n as u32)
            .filter(|&j| j as usize != i && labels[j as usize] == labels[i])
            .collect());
    }
    let mut keyed: Vec<(f64, u32)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| (oracle.distance(i, j).expect("continuous oracle"), j as u32))
        .collect();
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.truncate(k);
    Ok(keyed.into_iter().map(|(_, j)| j).collect())
}

/// Top-k of the ranking's total order for query `i`.
pub fn retrieved_neighbors(
    source: &NeighborSource<'_>,
    i: usize,
    k: usize,
) -> Result<Vec<u32>, CoreError> {
    check_k(k, source.len())?;
    let mut order = source.order(i);
    order.truncate(k);
    Ok(order)
}

/// Exact Euclidean baseline ranking on the observed (noisy) matrix.
pub fn euclidean_ranking(x: &DataMatrix) -> NeighborSource<'_> {
    NeighborSource::Euclidean(x)
}

struct QueryStats {
    precision: f64,
    recall: f64,
    has_recall: bool,
}

fn query_stats(
    source: &NeighborSource<'_>,
    oracle: &GeodesicOracle,
    i: usize,
    k: usize,
    scratch: &mut [bool],
) -> QueryStats {
    let relevant = true_neighbors(oracle, i, k).expect("validated k");
    let retrieved = retrieved_neighbors(source, i, k).expect("validated k");
    for &j in &relevant {
        scratch[j as usize] = true;
    }
    let hits = retrieved.iter().filter(|&&j| scratch[j as usize]).count();
    for &j in &relevant {
        scratch[j as usize] = false;
    }
    let precision = if relevant.is_empty() { 0.0 } else { hits as f64 / k as f64 };
    if relevant.is_empty() {
        // Singleton component: no retrieval can be correct; the query
        // counts toward precision (as 0) and is excluded from recall.
        QueryStats { precision: 0.0, recall: 0.0, has_recall: false }
    } else {
        let recall = hits as f64 / relevant.len() as f64;
        QueryStats { precision, recall, has_recall: true }
    }
}

/// Mean geodesic precision and recall at `k` over all queries.
pub fn geodesic_pr(
    source: &NeighborSource<'_>,
    oracle: &GeodesicOracle,
    k: usize,
) -> Result<PrPoint, CoreError> {
    let n = source.len();
    if oracle.len() != n {
        return Err(CoreError::DimensionMismatch { expected: n, actual: oracle.len() });
    }
    check_k(k, n)?;

    #[cfg(feature = "parallel")]
    let stats: Vec<QueryStats> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map_init(
                || vec![false; n],
                |scratch, i| query_stats(source, oracle, i, k, scratch),
            )
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let stats: Vec<QueryStats> = {
        let mut scratch = vec![false; n];
        (0..n).map(|i| query_stats(source, oracle, i, k, &mut scratch)).collect()
    };

    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut recall_count = 0usize;
    for s in &stats {
        precision_sum += s.precision;
        if s.has_recall {
            recall_sum += s.recall;
            recall_count += 1;
        }
    }
    let precision = precision_sum / n as f64;
    let recall = if recall_count == 0 { 0.0 } else { recall_sum / recall_count as f64 };
    Ok(PrPoint { k, precision, recall })
}

/// `geodesic_pr` at each requested k, ascending.
pub fn pr_curve(
    source: &NeighborSource<'_>,
    oracle: &GeodesicOracle,
    ks: &[usize],
) -> Result<Vec<PrPoint>, CoreError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.iter().map(|&k| geodesic_pr(source, oracle, k)).collect()
}

/// Expected recall of a uniformly random ranking: `k / (N - 1)` for
/// continuous oracles; for disconnected ones the class-weighted share
/// `sum_c (m_c / N) ((m_c - 1) / (N - 1))`.
pub fn chance_level(oracle: &GeodesicOracle, k: usize) -> f64 {
    let n = oracle.len();
    match oracle.labels() {
        None => k as f64 / (n - 1) as f64,
        Some(labels) => {
            let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
            let mut counts = vec![0usize; max_label + 1];
            for &l in labels {
                counts[l as usize] += 1;
            }
            counts
                .iter()
                .map(|&m| (m as f64 / n as f64) * ((m.saturating_sub(1)) as f64 / (n - 1) as f64))
                .sum()
        }
    }
}

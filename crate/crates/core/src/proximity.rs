//! Forest proximity: the fraction of trees in which two points share a
//! leaf.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::DataMatrix;
use crate::error::CoreError;
use crate::forest::{Forest, Tree};

/// Which points contribute to the pair counts.
///
/// `AllPoints` routes every point down every tree, so each pair is
/// supported by all T trees. `InBagOnly` counts a pair only in trees whose
/// training subsample contained both points, normalizing by the number of
/// such trees; pairs never jointly in-bag get proximity 0 and are flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityMode {
    AllPoints,
    InBagOnly,
}

impl ProximityMode {
    pub fn name(self) -> &'static str {
        match self {
            ProximityMode::AllPoints => "allpoints",
            ProximityMode::InBagOnly => "inbag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "allpoints" => Some(ProximityMode::AllPoints),
            "inbag" => Some(ProximityMode::InBagOnly),
            _ => None,
        }
    }
}

impl core::str::FromStr for ProximityMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::parse(s).ok_or_else(|| alloc::format!("unknown proximity mode `{s}`"))
    }
}

/// Index into the strict lower triangle (i < j) packed by the larger index.
#[inline]
fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

#[derive(Debug, Clone, PartialEq)]
enum Support {
    /// Every pair is supported by the same number of trees.
    Uniform(u32),
    /// Per-pair tree counts, plus per-point in-bag counts for the diagonal.
    PerPair { pairs: Vec<u32>, diag: Vec<u32> },
}

/// Symmetric N x N proximity with entries in [0, 1]: co-leaf count over
/// supporting-tree count per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    n: usize,
    mode: ProximityMode,
    co_leaf: Vec<u32>,
    support: Support,
}

impl ProximityMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ProximityMode {
        self.mode
    }

    /// S[i][j]. The diagonal is 1 (a point always shares its own leaf); in
    /// in-bag mode a never-sampled point has an empty diagonal support and
    /// reports 0.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return match &self.support {
                Support::Uniform(_) => 1.0,
                Support::PerPair { diag, .. } => {
                    if diag[i] > 0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        let idx = pair_index(i.min(j), i.max(j));
        match &self.support {
            Support::Uniform(t) => f64::from(self.co_leaf[idx]) / f64::from(*t),
            Support::PerPair { pairs, .. } => {
                if pairs[idx] == 0 {
                    0.0
                } else {
                    f64::from(self.co_leaf[idx]) / f64::from(pairs[idx])
                }
            }
        }
    }

    /// Copy row `i` into `buf` (resized to N).
    pub fn row_values(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend((0..self.n).map(|j| self.value(i, j)));
    }

    /// Pairs with no supporting tree (only possible in in-bag mode).
    pub fn zero_support_pairs(&self) -> usize {
        match &self.support {
            Support::Uniform(_) => 0,
            Support::PerPair { pairs, .. } => pairs.iter().filter(|&&t| t == 0).count(),
        }
    }
}

/// Accumulates per-tree pair counts. Counting is leaf-by-leaf (every pair
/// inside a leaf), never by all-pairs traversal, so a tree costs the sum of
/// squared leaf sizes. Accumulators merge by plain addition, which makes
/// the aggregate independent of how trees are grouped.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityAccumulator {
    n: usize,
    mode: ProximityMode,
    trees: u32,
    co_leaf: Vec<u32>,
    pair_support: Vec<u32>,
    diag_support: Vec<u32>,
}

impl ProximityAccumulator {
    pub fn new(n: usize, mode: ProximityMode) -> Self {
        let tri = n * (n - 1) / 2;
        let (pair_support, diag_support) = match mode {
            ProximityMode::AllPoints => (Vec::new(), Vec::new()),
            ProximityMode::InBagOnly => (vec![0u32; tri], vec![0u32; n]),
        };
        ProximityAccumulator {
            n,
            mode,
            trees: 0,
            co_leaf: vec![0u32; tri],
            pair_support,
            diag_support,
        }
    }

    /// Absorb one tree's pair counts.
    pub fn add_tree(&mut self, tree: &Tree, x: &DataMatrix) -> Result<(), CoreError> {
        if x.n_points() != self.n {
            return Err(CoreError::DimensionMismatch { expected: self.n, actual: x.n_points() });
        }
        match self.mode {
            ProximityMode::AllPoints => {
                for (_, ids) in tree.leaf_partition(x)? {
                    self.count_leaf_pairs(&ids);
                }
            }
            ProximityMode::InBagOnly => {
                for node_idx in 0..tree.nodes.len() {
                    if let Some(members) = tree.leaf_members(node_idx) {
                        self.count_leaf_pairs(members);
                    }
                }
                let bag = tree.in_bag();
                for (a_pos, &a) in bag.iter().enumerate() {
                    self.diag_support[a as usize] += 1;
                    for &b in &bag[a_pos + 1..] {
                        self.pair_support[pair_index(a as usize, b as usize)] += 1;
                    }
                }
            }
        }
        self.trees += 1;
        Ok(())
    }

    fn count_leaf_pairs(&mut self, ids: &[u32]) {
        for (a_pos, &a) in ids.iter().enumerate() {
            for &b in &ids[a_pos + 1..] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                self.co_leaf[pair_index(lo as usize, hi as usize)] += 1;
            }
        }
    }

    /// Combine two partial accumulations (commutative, associative).
    pub fn merge(&mut self, other: &ProximityAccumulator) -> Result<(), CoreError> {
        if self.n != other.n || self.mode != other.mode {
            return Err(CoreError::InvalidArgument(
                "cannot merge accumulators of different shapes".into(),
            ));
        }
        self.trees += other.trees;
        for (a, b) in self.co_leaf.iter_mut().zip(&other.co_leaf) {
            *a += b;
        }
        for (a, b) in self.pair_support.iter_mut().zip(&other.pair_support) {
            *a += b;
        }
        for (a, b) in self.diag_support.iter_mut().zip(&other.diag_support) {
            *a += b;
        }
        Ok(())
    }

    pub fn trees_seen(&self) -> u32 {
        self.trees
    }

    pub fn finalize(self) -> Result<ProximityMatrix, CoreError> {
        if self.trees == 0 {
            return Err(CoreError::InvalidArgument("no trees accumulated".into()));
        }
        let support = match self.mode {
            ProximityMode::AllPoints => Support::Uniform(self.trees),
            ProximityMode::InBagOnly => {
                Support::PerPair { pairs: self.pair_support, diag: self.diag_support }
            }
        };
        Ok(ProximityMatrix { n: self.n, mode: self.mode, co_leaf: self.co_leaf, support })
    }
}

/// Proximity of the forest's own training matrix under the configured mode.
pub fn compute_proximity(forest: &Forest, x: &DataMatrix) -> Result<ProximityMatrix, CoreError> {
    if x.n_points() != forest.n_points || x.n_features() != forest.n_features {
        return Err(CoreError::DimensionMismatch {
            expected: forest.n_features,
            actual: x.n_features(),
        });
    }
    let mode = forest.config.proximity_mode;

    #[cfg(feature = "parallel")]
    let acc = {
        use rayon::prelude::*;
        forest
            .trees
            .par_iter()
            .try_fold(
                || ProximityAccumulator::new(x.n_points(), mode),
                |mut acc, tree| {
                    acc.add_tree(tree, x)?;
                    Ok::<_, CoreError>(acc)
                },
            )
            .try_reduce(
                || ProximityAccumulator::new(x.n_points(), mode),
                |mut a, b| {
                    a.merge(&b)?;
                    Ok(a)
                },
            )?
    };
    #[cfg(not(feature = "parallel"))]
    let acc = {
        let mut acc = ProximityAccumulator::new(x.n_points(), mode);
        for tree in &forest.trees {
            acc.add_tree(tree, x)?;
        }
        acc
    };

    acc.finalize()
}

/// Construct a matrix directly from dense values (used when loading a
/// previously exported proximity). Values must be symmetric and in [0, 1];
/// they are stored at a fixed resolution of 1/2^32 trees.
impl ProximityMatrix {
    pub fn from_dense(n: usize, values: &[f64]) -> Result<Self, CoreError> {
        if values.len() != n * n {
            return Err(CoreError::InvalidArgument("dense proximity must be n x n".into()));
        }
        // Scale into u32 counts against a fixed denominator; exact for any
        // k/T with T dividing 2^32, and within 2^-32 otherwise.
        const DENOM: u32 = u32::MAX;
        let mut co_leaf = vec![0u32; n * (n - 1) / 2];
        for j in 1..n {
            for i in 0..j {
                let v = values[i * n + j];
                let v2 = values[j * n + i];
                if !(0.0..=1.0).contains(&v) || (v - v2).abs() > 1e-12 {
                    return Err(CoreError::InvalidArgument(
                        "proximity must be symmetric with entries in [0, 1]".into(),
                    ));
                }
                co_leaf[pair_index(i, j)] = libm::round(v * f64::from(DENOM)) as u32;
            }
        }
        Ok(ProximityMatrix {
            n,
            mode: ProximityMode::AllPoints,
            co_leaf,
            support: Support::Uniform(DENOM),
        })
    }
}

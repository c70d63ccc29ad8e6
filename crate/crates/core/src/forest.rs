//! Unsupervised trees over sparse random projections, and forests of them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::data::DataMatrix;
use crate::error::CoreError;
use crate::projection::sample_projection;
use crate::proximity::ProximityMode;
use crate::split::{evaluate_criterion, EmConfig, SplitCriterion};

/// Per-tree training sample size: an explicit count or a fraction of N
/// (rounded up), always drawn without replacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsampleSize {
    Count(usize),
    Fraction(f64),
}

impl SubsampleSize {
    pub fn resolve(&self, n: usize) -> Result<usize, CoreError> {
        let m = match *self {
            SubsampleSize::Count(m) => m,
            SubsampleSize::Fraction(f) => {
                if !(f.is_finite() && f > 0.0 && f <= 1.0) {
                    return Err(CoreError::InvalidArgument(format!(
                        "subsample fraction must lie in (0, 1], got {f}"
                    )));
                }
                libm::ceil(f * n as f64) as usize
            }
        };
        if m < 2 || m > n {
            return Err(CoreError::InvalidArgument(format!(
                "subsample size {m} outside [2, {n}]"
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub subsample: SubsampleSize,
    /// Number of candidate projected dimensions per node.
    pub mtry: usize,
    /// Sparsity of the random projections.
    pub lambda: f64,
    /// Smallest node size eligible for splitting.
    pub min_parent: usize,
    pub criterion: SplitCriterion,
    pub seed: u64,
    pub proximity_mode: ProximityMode,
    pub em: EmConfig,
}

impl ForestConfig {
    /// Conventional settings: 100 trees on ceil(0.632 N) subsamples,
    /// mtry = ceil(sqrt(p)), sparsity 1/20, minparent 100, BIC splitting,
    /// proximity over all points.
    pub fn defaults(n_features: usize, seed: u64) -> Self {
        ForestConfig {
            num_trees: 100,
            subsample: SubsampleSize::Fraction(0.632),
            mtry: libm::ceil(libm::sqrt(n_features as f64)) as usize,
            lambda: 1.0 / 20.0,
            min_parent: 100,
            criterion: SplitCriterion::FastBic,
            seed,
            proximity_mode: ProximityMode::AllPoints,
            em: EmConfig::default(),
        }
    }

    /// Check the configuration against a dataset shape; returns the
    /// resolved subsample size.
    pub fn validate(&self, n_points: usize, n_features: usize) -> Result<usize, CoreError> {
        if self.num_trees < 1 {
            return Err(CoreError::InvalidArgument("need at least one tree".into()));
        }
        if self.mtry < 1 {
            return Err(CoreError::InvalidArgument("mtry must be at least 1".into()));
        }
        if self.min_parent < 2 {
            return Err(CoreError::InvalidArgument("minparent must be at least 2".into()));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(CoreError::InvalidArgument(format!(
                "sparsity must lie in (0, 1], got {}",
                self.lambda
            )));
        }
        if n_features < 1 {
            return Err(CoreError::InvalidArgument("data has no features".into()));
        }
        self.subsample.resolve(n_points)
    }
}

/// One tree node. Internal nodes hold the sparse weights of their split
/// axis and route `projected value < threshold` to the left child; leaves
/// hold the training-sample indices that reached them, ascending.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        /// (feature index, ±1), ascending by feature.
        weights: Vec<(u32, i8)>,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        members: Vec<u32>,
    },
}

/// A single routed binary tree. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl Tree {
    fn project_point(weights: &[(u32, i8)], point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(r, s) in weights {
            acc += f64::from(s) * point[r as usize];
        }
        acc
    }

    /// Deterministic descent from the root; values equal to a threshold go
    /// right. Returns the index of the reached leaf node.
    pub fn route_to_leaf(&self, point: &[f64]) -> Result<usize, CoreError> {
        if point.len() != self.n_features {
            return Err(CoreError::DimensionMismatch {
                expected: self.n_features,
                actual: point.len(),
            });
        }
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { .. } => return Ok(at),
                TreeNode::Internal { weights, threshold, left, right } => {
                    at = if Self::project_point(weights, point) < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Route every point of `x` down the tree; returns (leaf node index,
    /// routed point ids) in left-to-right leaf order. Point ids stay
    /// ascending within each leaf.
    pub fn leaf_partition(&self, x: &DataMatrix) -> Result<Vec<(usize, Vec<u32>)>, CoreError> {
        if x.n_features() != self.n_features {
            return Err(CoreError::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_features(),
            });
        }
        let all: Vec<u32> = (0..x.n_points() as u32).collect();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, all)];
        while let Some((at, ids)) = stack.pop() {
            match &self.nodes[at] {
                TreeNode::Leaf { .. } => out.push((at, ids)),
                TreeNode::Internal { weights, threshold, left, right } => {
                    let mut l = Vec::new();
                    let mut r = Vec::new();
                    for id in ids {
                        if Self::project_point(weights, x.row(id as usize)) < *threshold {
                            l.push(id);
                        } else {
                            r.push(id);
                        }
                    }
                    stack.push((*right as usize, r));
                    stack.push((*left as usize, l));
                }
            }
        }
        Ok(out)
    }

    /// Training-sample ids used to build this tree, ascending.
    pub fn in_bag(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { members } => Some(members.iter().copied()),
                _ => None,
            })
            .flatten()
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { members } => Some(members.len()),
                _ => None,
            })
            .collect()
    }

    pub fn leaf_members(&self, node: usize) -> Option<&[u32]> {
        match &self.nodes[node] {
            TreeNode::Leaf { members } => Some(members),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub config: ForestConfig,
    pub n_points: usize,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

/// Independent random stream for tree `index` of a forest seeded with
/// `seed`. Streams are stable under growing the forest: tree t of a
/// T-tree forest equals tree t of any larger forest with the same seed.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draw `m` of `n` indices without replacement (partial Fisher-Yates),
/// returned ascending.
pub fn tree_sample<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool.sort_unstable();
    pool
}

/// Grow one unsupervised tree over the given training sample.
///
/// Nodes smaller than `min_parent` become leaves. Otherwise the node draws
/// a fresh sparse projection, evaluates the configured criterion on each of
/// the `mtry` projected columns (at unit minimum cluster size), and splits
/// on the best-scoring column; score ties prefer the lower column index.
/// If no column admits a split the node becomes a leaf regardless of size.
pub fn build_tree<R: Rng + ?Sized>(
    x: &DataMatrix,
    sample_ids: &[u32],
    cfg: &ForestConfig,
    rng: &mut R,
) -> Result<Tree, CoreError> {
    if sample_ids.is_empty() {
        return Err(CoreError::InvalidArgument("empty training sample".into()));
    }
    let n = x.n_points();
    let p = x.n_features();
    if sample_ids.iter().any(|&id| id as usize >= n) {
        return Err(CoreError::InvalidArgument("sample id out of range".into()));
    }

    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { members: Vec::new() }];
    let mut stack: Vec<(usize, Vec<u32>)> = vec![(0, sample_ids.to_vec())];
    let mut col_buf: Vec<f64> = Vec::new();
    while let Some((slot, ids)) = stack.pop() {
        let n_node = ids.len();
        if n_node < cfg.min_parent {
            nodes[slot] = TreeNode::Leaf { members: ids };
            continue;
        }
        let proj = sample_projection(p, cfg.mtry, cfg.lambda, rng)?;
        let vals = proj.project_rows(x, &ids);
        let d = cfg.mtry;
        let mut best: Option<(crate::split::SplitCandidate, usize)> = None;
        for col in 0..d {
            col_buf.clear();
            col_buf.extend((0..n_node).map(|i| vals[i * d + col]));
            if let Some(cand) = evaluate_criterion(cfg.criterion, &col_buf, 1, &cfg.em)? {
                if best.as_ref().is_none_or(|(b, _)| cand.score < b.score) {
                    best = Some((cand, col));
                }
            }
        }
        let Some((cand, col)) = best else {
            nodes[slot] = TreeNode::Leaf { members: ids };
            continue;
        };
        let mut left_ids = Vec::with_capacity(cand.left_count);
        let mut right_ids = Vec::with_capacity(n_node - cand.left_count);
        for (i, id) in ids.into_iter().enumerate() {
            if vals[i * d + col] < cand.split_point {
                left_ids.push(id);
            } else {
                right_ids.push(id);
            }
        }
        debug_assert!(!left_ids.is_empty() && !right_ids.is_empty());
        let left = nodes.len() as u32;
        let right = left + 1;
        nodes.push(TreeNode::Leaf { members: Vec::new() });
        nodes.push(TreeNode::Leaf { members: Vec::new() });
        nodes[slot] = TreeNode::Internal {
            weights: proj.column(col),
            threshold: cand.split_point,
            left,
            right,
        };
        stack.push((right as usize, right_ids));
        stack.push((left as usize, left_ids));
    }
    Ok(Tree { nodes, n_features: p })
}

/// Grow a forest: tree `t` is built on an independent without-replacement
/// subsample drawn from the stream `tree_rng(seed, t)`.
pub fn build_forest(x: &DataMatrix, cfg: &ForestConfig) -> Result<Forest, CoreError> {
    let n = x.n_points();
    let p = x.n_features();
    let m = cfg.validate(n, p)?;

    let grow = |t: usize| -> Result<Tree, CoreError> {
        let mut rng = tree_rng(cfg.seed, t);
        let ids = tree_sample(n, m, &mut rng);
        build_tree(x, &ids, cfg, &mut rng)
    };

    #[cfg(feature = "parallel")]
    let trees: Result<Vec<Tree>, CoreError> = {
        use rayon::prelude::*;
        (0..cfg.num_trees).into_par_iter().map(grow).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees: Result<Vec<Tree>, CoreError> = (0..cfg.num_trees).map(grow).collect();

    Ok(Forest { config: cfg.clone(), n_points: n, n_features: p, trees: trees? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_gmm, gen_linear};

    fn small_cfg(p: usize, seed: u64) -> ForestConfig {
        let mut cfg = ForestConfig::defaults(p, seed);
        cfg.num_trees = 10;
        cfg.min_parent = 10;
        cfg
    }

    #[test]
    fn undersized_node_becomes_leaf() {
        let (x, _) = gen_linear(100).unwrap();
        let cfg = ForestConfig::defaults(3, 0);
        let ids: Vec<u32> = (0..(cfg.min_parent - 1) as u32).collect();
        let mut rng = tree_rng(0, 0);
        let tree = build_tree(&x, &ids, &cfg, &mut rng).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.leaf_members(0).unwrap().len(), ids.len());
    }

    #[test]
    fn identical_points_become_a_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![1.0, 2.0, 3.0]).collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let cfg = small_cfg(3, 1);
        let ids: Vec<u32> = (0..50).collect();
        let mut rng = tree_rng(1, 0);
        let tree = build_tree(&x, &ids, &cfg, &mut rng).unwrap();
        assert_eq!(tree.nodes.len(), 1, "no projected column admits a split");
    }

    #[test]
    fn separated_blobs_split_cleanly_at_root() {
        use rand::Rng;
        let mut rng = tree_rng(7, 0);
        let mut rows = Vec::new();
        for i in 0..200 {
            let center = if i < 100 { -10.0 } else { 10.0 };
            let row: Vec<f64> = (0..3)
                .map(|_| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    center + z
                })
                .collect();
            rows.push(row);
        }
        let x = DataMatrix::from_rows(&rows).unwrap();
        let mut cfg = ForestConfig::defaults(3, 7);
        cfg.min_parent = 50;
        let ids: Vec<u32> = (0..200).collect();
        let mut build_rng = tree_rng(7, 1);
        let tree = build_tree(&x, &ids, &cfg, &mut build_rng).unwrap();
        let TreeNode::Internal { weights, threshold, .. } = &tree.nodes[0] else {
            panic!("root must split");
        };
        // Compare each point's side at the root with its generating blob.
        let goes_left: Vec<bool> =
            (0..200).map(|i| Tree::project_point(weights, x.row(i)) < *threshold).collect();
        let low_left = goes_left[..100].iter().filter(|&&b| b).count();
        let high_left = goes_left[100..].iter().filter(|&&b| b).count();
        let mis = (low_left + (100 - high_left)).min((100 - low_left) + high_left);
        assert!(mis <= 2, "{mis} points misrouted at the root");
    }

    #[test]
    fn forest_builds_deterministically() {
        let (x, _) = gen_gmm(300, 3).unwrap();
        let mut cfg = small_cfg(3, 5);
        cfg.min_parent = 25;
        let a = build_forest(&x, &cfg).unwrap();
        let b = build_forest(&x, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn growing_the_forest_preserves_earlier_trees() {
        let (x, _) = gen_linear(200).unwrap();
        let mut cfg = small_cfg(3, 9);
        cfg.num_trees = 5;
        let small = build_forest(&x, &cfg).unwrap();
        cfg.num_trees = 12;
        let large = build_forest(&x, &cfg).unwrap();
        assert_eq!(small.trees[..], large.trees[..5]);
    }

    #[test]
    fn partition_covers_every_point_once() {
        let (x, _) = gen_gmm(400, 11).unwrap();
        let cfg = small_cfg(3, 11);
        let forest = build_forest(&x, &cfg).unwrap();
        for tree in &forest.trees {
            let parts = tree.leaf_partition(&x).unwrap();
            let total: usize = parts.iter().map(|(_, ids)| ids.len()).sum();
            assert_eq!(total, x.n_points());
            // Training members also partition the subsample.
            let bag = tree.in_bag();
            assert_eq!(bag.len(), cfg.subsample.resolve(400).unwrap());
            assert!(bag.windows(2).all(|w| w[0] < w[1]), "in-bag ids unique");
        }
    }

    #[test]
    fn internal_nodes_have_nonempty_children() {
        let (x, _) = gen_gmm(500, 13).unwrap();
        let cfg = small_cfg(3, 13);
        let forest = build_forest(&x, &cfg).unwrap();
        for tree in &forest.trees {
            let parts = tree.leaf_partition(&x).unwrap();
            for (node, _) in &parts {
                assert!(matches!(tree.nodes[*node], TreeNode::Leaf { .. }));
            }
            for node in &tree.nodes {
                if let TreeNode::Internal { left, right, .. } = node {
                    let lm = match &tree.nodes[*left as usize] {
                        TreeNode::Leaf { members } => !members.is_empty(),
                        TreeNode::Internal { .. } => true,
                    };
                    let rm = match &tree.nodes[*right as usize] {
                        TreeNode::Leaf { members } => !members.is_empty(),
                        TreeNode::Internal { .. } => true,
                    };
                    assert!(lm && rm);
                }
            }
        }
    }

    #[test]
    fn routing_is_deterministic_and_boundary_goes_right() {
        let tree = Tree {
            nodes: vec![
                TreeNode::Internal { weights: vec![(0, 1)], threshold: 2.0, left: 1, right: 2 },
                TreeNode::Leaf { members: vec![0] },
                TreeNode::Leaf { members: vec![1] },
            ],
            n_features: 1,
        };
        assert_eq!(tree.route_to_leaf(&[1.9]).unwrap(), 1);
        assert_eq!(tree.route_to_leaf(&[2.0]).unwrap(), 2, "exact threshold routes right");
        assert_eq!(tree.route_to_leaf(&[2.1]).unwrap(), 2);
        assert!(tree.route_to_leaf(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn single_leaf_tree_routes_everything_to_it() {
        let tree = Tree {
            nodes: vec![TreeNode::Leaf { members: vec![0, 1, 2] }],
            n_features: 4,
        };
        assert_eq!(tree.route_to_leaf(&[0.0; 4]).unwrap(), 0);
    }

    #[test]
    fn training_points_route_to_their_leaf() {
        let (x, _) = gen_gmm(300, 17).unwrap();
        let cfg = small_cfg(3, 17);
        let forest = build_forest(&x, &cfg).unwrap();
        let tree = &forest.trees[0];
        for node_idx in 0..tree.nodes.len() {
            if let Some(members) = tree.leaf_members(node_idx) {
                for &id in members {
                    assert_eq!(tree.route_to_leaf(x.row(id as usize)).unwrap(), node_idx);
                }
            }
        }
    }

    #[test]
    fn all_three_criteria_grow_valid_forests() {
        let (x, _) = gen_gmm(150, 19).unwrap();
        for criterion in
            [SplitCriterion::TwoMeans, SplitCriterion::FastBic, SplitCriterion::EmBic]
        {
            let mut cfg = small_cfg(3, 19);
            cfg.num_trees = 3;
            cfg.min_parent = 40;
            cfg.criterion = criterion;
            let forest = build_forest(&x, &cfg).unwrap();
            for tree in &forest.trees {
                let total: usize =
                    tree.leaf_partition(&x).unwrap().iter().map(|(_, ids)| ids.len()).sum();
                assert_eq!(total, 150, "{criterion:?}");
                assert!(tree.nodes.len() > 1, "{criterion:?} built a stump on separable data");
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let cfg = ForestConfig::defaults(3, 0);
        assert!(cfg.validate(1000, 3).is_ok());
        let mut bad = cfg.clone();
        bad.subsample = SubsampleSize::Count(2000);
        assert!(bad.validate(1000, 3).is_err());
        bad = cfg.clone();
        bad.num_trees = 0;
        assert!(bad.validate(1000, 3).is_err());
        bad = cfg.clone();
        bad.min_parent = 1;
        assert!(bad.validate(1000, 3).is_err());
        bad = cfg;
        bad.lambda = 0.0;
        assert!(bad.validate(1000, 3).is_err());
    }
}

use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bisect::{bisect, sq_dist};
use super::{StandardizedFeatures, Standardizer};
use crate::error::{Error, Result};

pub const VOCAB_FORMAT_VERSION: u32 = 1;
const MAX_DEPTH: usize = 20;

/// Centroids chosen when one node was split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    /// Members reaching this node during training.
    pub size: usize,
    pub left: Option<Vec<f64>>,
    pub right: Option<Vec<f64>>,
}

/// A trained binary keyword tree.
///
/// Nodes use heap numbering: the root is 1 and node `h` has children `2h`
/// and `2h + 1`. Level `T` (root is level 1) holds heap indices
/// `2^(T-1) .. 2^T`, and the 1-based label of heap node `h` within its level
/// is `h - 2^(T-1) + 1`, so children of label `k` carry labels `2k - 1` and
/// `2k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabTree {
    pub version: u32,
    /// Number of split levels; the tree has `2^depth` leaves.
    pub depth: usize,
    pub seed: u64,
    pub standardizer: Standardizer,
    /// Internal nodes in heap order (entry `h - 1` is heap node `h`).
    pub nodes: Vec<SplitNode>,
    /// Training members per leaf, by leaf label minus one.
    pub leaf_sizes: Vec<usize>,
}

/// Everything produced while training a vocabulary.
#[derive(Debug, Clone)]
pub struct VocabBuild {
    pub tree: VocabTree,
    /// `level_labels[t][i]` is the 1-based label of row `i` at level `t + 1`;
    /// the last entry holds the keyword labels.
    pub level_labels: Vec<Vec<u32>>,
}

impl VocabBuild {
    /// Keyword (leaf) label of every training row.
    pub fn labels(&self) -> &[u32] {
        self.level_labels.last().expect("at least the root level")
    }
}

/// Label of an ancestor `levels_up` levels above a node with `label`.
pub fn ancestor_label(label: u32, levels_up: usize) -> u32 {
    (label - 1) / (1 << levels_up) + 1
}

/// Grow the tree level by level, splitting every node of a level before
/// moving on. Each node draws its seeding sample from its own RNG stream, so
/// the result does not depend on scheduling.
pub fn build_vocab(features: &StandardizedFeatures, depth: usize, seed: u64) -> Result<VocabBuild> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Config(format!("vocabulary depth must lie in 1..={MAX_DEPTH}, got {depth}")));
    }
    let points = features.matrix.view();
    let n = points.nrows();
    if n == 0 {
        return Err(Error::input("no feature vectors to cluster"));
    }
    let mut nodes = Vec::with_capacity((1 << depth) - 1);
    let mut level_labels = vec![vec![1u32; n]];
    let mut groups: Vec<Vec<usize>> = vec![(0..n).collect()];
    for level in 0..depth {
        let first_heap = 1u64 << level;
        let splits: Vec<Option<super::Split>> = groups
            .par_iter()
            .enumerate()
            .map(|(k, members)| {
                if members.is_empty() {
                    return Ok(None);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(first_heap + k as u64);
                bisect(points, members, &mut rng).map(Some)
            })
            .collect::<Result<_>>()?;
        let mut labels = vec![0u32; n];
        let mut next = Vec::with_capacity(groups.len() * 2);
        for (k, (split, members)) in splits.into_iter().zip(&groups).enumerate() {
            let (left, right, centroids) = match split {
                Some(s) => (s.left, s.right, s.centroids),
                None => (Vec::new(), Vec::new(), [None, None]),
            };
            let [cl, cr] = centroids;
            nodes.push(SplitNode { size: members.len(), left: cl, right: cr });
            for &i in &left {
                labels[i] = 2 * k as u32 + 1;
            }
            for &i in &right {
                labels[i] = 2 * k as u32 + 2;
            }
            next.push(left);
            next.push(right);
        }
        level_labels.push(labels);
        groups = next;
    }
    let tree = VocabTree {
        version: VOCAB_FORMAT_VERSION,
        depth,
        seed,
        standardizer: features.transform.clone(),
        nodes,
        leaf_sizes: groups.iter().map(Vec::len).collect(),
    };
    Ok(VocabBuild { tree, level_labels })
}

impl VocabTree {
    pub fn leaves(&self) -> usize {
        1 << self.depth
    }

    /// Quantize a raw (unstandardized) feature vector.
    pub fn assign(&self, query: ArrayView1<'_, f64>) -> Result<u32> {
        let z = Array1::from(self.standardizer.apply_row(query)?);
        self.assign_standardized(z.view())
    }

    /// Descend from the root, stepping to the nearer child centroid. Ties
    /// and nodes with no centroids go left; a node with one empty child
    /// always sends queries to the other.
    pub fn assign_standardized(&self, z: ArrayView1<'_, f64>) -> Result<u32> {
        if z.len() != self.standardizer.dim() {
            return Err(Error::shape(format!("expected {} features, got {}", self.standardizer.dim(), z.len())));
        }
        let mut heap = 1usize;
        for _ in 0..self.depth {
            let node = self.nodes.get(heap - 1).ok_or_else(|| Error::shape("vocabulary tree is truncated"))?;
            let go_right = match (&node.left, &node.right) {
                (Some(l), Some(r)) => sq_dist(z, r) < sq_dist(z, l),
                (None, Some(_)) => true,
                _ => false,
            };
            heap = 2 * heap + usize::from(go_right);
        }
        Ok((heap - self.leaves() + 1) as u32)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tree: VocabTree = serde_json::from_str(text)?;
        if tree.version != VOCAB_FORMAT_VERSION {
            return Err(Error::input(format!("unsupported vocabulary version {}", tree.version)));
        }
        if tree.nodes.len() + 1 != tree.leaves() || tree.leaf_sizes.len() != tree.leaves() {
            return Err(Error::input("vocabulary node counts do not match its depth"));
        }
        Ok(tree)
    }
}

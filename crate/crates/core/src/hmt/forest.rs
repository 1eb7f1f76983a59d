use crate::error::{Error, Result};
use crate::transform::{MagnitudePyramid, SUBBANDS};

/// Coefficients of one subband arranged as parent/child trees across scales.
///
/// Nodes are stored level by level from the coarsest scale (depth 0, the
/// roots) to the finest. Each node at depth `d > 0` has exactly one parent at
/// depth `d - 1`. Quadtrees built by [`build_forest`] store each level in
/// row-major grid order and give every non-leaf four children; arbitrary
/// level-structured trees can be assembled with
/// [`CoefficientQuadForest::from_levels`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientQuadForest {
    values: Vec<Vec<f64>>,
    parents: Vec<Vec<usize>>,
}

impl CoefficientQuadForest {
    /// `values[d]` are the observations at depth `d`; `parents[d][i]` indexes
    /// the parent of node `i` within depth `d - 1`. `parents[0]` must be empty.
    pub fn from_levels(values: Vec<Vec<f64>>, parents: Vec<Vec<usize>>) -> Result<Self> {
        if values.is_empty() || values[0].is_empty() {
            return Err(Error::shape("forest needs at least one root"));
        }
        if parents.len() != values.len() {
            return Err(Error::shape("parents and values disagree on depth count"));
        }
        if !parents[0].is_empty() {
            return Err(Error::shape("roots cannot have parents"));
        }
        for d in 1..values.len() {
            if parents[d].len() != values[d].len() {
                return Err(Error::shape(format!("depth {d}: parent count != node count")));
            }
            if let Some(&bad) = parents[d].iter().find(|&&p| p >= values[d - 1].len()) {
                return Err(Error::shape(format!("depth {d}: parent index {bad} out of range")));
            }
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("forest contains non-finite coefficients"));
        }
        Ok(CoefficientQuadForest { values, parents })
    }

    /// Number of scales (tree depth).
    pub fn depth(&self) -> usize {
        self.values.len()
    }

    pub fn roots(&self) -> usize {
        self.values[0].len()
    }

    pub fn node_count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    /// Node counts per depth, coarsest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.values.iter().map(Vec::len).collect()
    }

    pub fn values(&self, depth: usize) -> &[f64] {
        &self.values[depth]
    }

    pub fn parents(&self, depth: usize) -> &[usize] {
        &self.parents[depth]
    }
}

/// Wire one subband of a magnitude pyramid into quadtrees.
///
/// The coarsest pyramid level supplies the roots; a node at `(r, c)` on a
/// finer level hangs under `(r / 2, c / 2)` one level up.
pub fn build_forest(pyr: &MagnitudePyramid, subband: usize) -> Result<CoefficientQuadForest> {
    if subband >= SUBBANDS {
        return Err(Error::shape(format!("subband {subband} out of range")));
    }
    let levels = pyr.levels.len();
    if levels < 2 {
        return Err(Error::shape(format!("need at least 2 levels, got {levels}")));
    }
    let mut values = Vec::with_capacity(levels);
    let mut parents = Vec::with_capacity(levels);
    let mut prev_cols = 0;
    for (i, level) in pyr.levels.iter().rev().enumerate() {
        let (bands, rows, cols) = level.dim();
        if bands != SUBBANDS {
            return Err(Error::shape(format!("level has {bands} subbands")));
        }
        if i > 0 {
            let (_, pr, pc) = pyr.levels[levels - i].dim();
            if rows != 2 * pr || cols != 2 * pc {
                return Err(Error::shape("pyramid levels do not halve"));
            }
        }
        let grid = level.index_axis(ndarray::Axis(0), subband);
        values.push(grid.iter().copied().collect::<Vec<f64>>());
        parents.push(if i == 0 {
            Vec::new()
        } else {
            (0..rows * cols)
                .map(|idx| (idx / cols / 2) * prev_cols + (idx % cols) / 2)
                .collect()
        });
        prev_cols = cols;
    }
    CoefficientQuadForest::from_levels(values, parents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};

    fn pyramid(levels: usize) -> MagnitudePyramid {
        let side = 1usize << levels;
        let levels = (1..=levels)
            .map(|l| {
                let n = side >> l;
                Array3::from_shape_fn((6, n, n), |(b, r, c)| (b * 10000 + l * 1000 + r * n + c) as f64)
            })
            .collect();
        MagnitudePyramid { levels, lowpass: Array2::zeros((2, 2)) }
    }

    #[test]
    fn six_level_counts() {
        let forest = build_forest(&pyramid(6), 2).unwrap();
        let mut fine_to_coarse = forest.level_sizes();
        fine_to_coarse.reverse();
        assert_eq!(fine_to_coarse, vec![1024, 256, 64, 16, 4, 1]);
        assert_eq!(forest.node_count(), 1365);
        assert_eq!(forest.roots(), 1);
    }

    #[test]
    fn children_map_to_halved_coordinates() {
        let pyr = pyramid(6);
        let forest = build_forest(&pyr, 4).unwrap();
        // depth 5 is the finest level (32x32), depth 4 is 16x16.
        for (idx, &p) in forest.parents(5).iter().enumerate() {
            let (r, c) = (idx / 32, idx % 32);
            assert_eq!(p, (r / 2) * 16 + c / 2);
            assert_eq!(forest.values(5)[idx], pyr.levels[0][[4, r, c]]);
            assert_eq!(forest.values(4)[p], pyr.levels[1][[4, r / 2, c / 2]]);
        }
        for d in 1..forest.depth() {
            let mut counts = vec![0; forest.level_sizes()[d - 1]];
            forest.parents(d).iter().for_each(|&p| counts[p] += 1);
            assert!(counts.iter().all(|&n| n == 4));
        }
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(build_forest(&pyramid(1), 0), Err(Error::Shape(_))));
        assert!(matches!(build_forest(&pyramid(6), 6), Err(Error::Shape(_))));
        assert!(CoefficientQuadForest::from_levels(vec![vec![1.0], vec![2.0]], vec![vec![], vec![1]]).is_err());
        assert!(CoefficientQuadForest::from_levels(vec![vec![f64::NAN]], vec![vec![]]).is_err());
    }
}

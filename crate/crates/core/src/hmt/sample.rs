use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CoefficientQuadForest, HmtParams};
use crate::error::Result;

/// Draw `trees` independent quadtrees from an HMT.
///
/// Node `i` at depth `d ≥ 1` is a child of node `i / 4` at depth `d - 1`.
/// Observations are magnitudes of zero-mean Gaussian draws.
pub fn sample_forest<R: Rng + ?Sized>(params: &HmtParams, trees: usize, rng: &mut R) -> Result<CoefficientQuadForest> {
    params.validate(params.depth())?;
    let mut states: Vec<usize> = (0..trees).map(|_| usize::from(rng.random::<f64>() >= params.root_prior[0])).collect();
    let mut values = Vec::with_capacity(params.depth());
    let mut parents = Vec::with_capacity(params.depth());
    for d in 0..params.depth() {
        if d > 0 {
            let eps = &params.transitions[d - 1];
            states = (0..states.len() * 4)
                .map(|i| usize::from(rng.random::<f64>() >= eps[states[i / 4]][0]))
                .collect();
            parents.push((0..states.len()).map(|i| i / 4).collect());
        } else {
            parents.push(Vec::new());
        }
        values.push(
            states
                .iter()
                .map(|&s| {
                    let z: f64 = StandardNormal.sample(rng);
                    (z * params.sigmas[d][s]).abs()
                })
                .collect(),
        );
    }
    CoefficientQuadForest::from_levels(values, parents)
}

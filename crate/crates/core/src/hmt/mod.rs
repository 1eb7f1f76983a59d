//! Two-state hidden Markov tree over wavelet magnitude quadtrees.
//!
//! Each subband's coefficients form trees running from the coarsest scale to
//! the finest. Every node carries a hidden state, small (`S`, index 0) or
//! large (`L`, index 1), which picks a zero-mean Gaussian for the observed
//! magnitude. States propagate from parent to child through a 2×2 transition
//! matrix. All nodes at one scale share the same parameters.

mod em;
mod features;
mod forest;
mod inference;
mod sample;

pub use em::{em_fit, EmConfig, EmFit, VARIANCE_FLOOR};
pub use features::{
    assemble_features, persistence_index, variance_index, FeatureVector, VarianceEncoding, FEATURE_DIM,
    PER_SUBBAND,
};
pub use forest::{build_forest, CoefficientQuadForest};
pub use inference::{upward_downward, Posteriors};
pub use sample::sample_forest;

use crate::error::{Error, Result};

/// Index of the small-variance state.
pub const SMALL: usize = 0;
/// Index of the large-variance state.
pub const LARGE: usize = 1;

/// Parameters of a scale-tied two-state HMT.
///
/// Vectors are indexed by tree depth, coarsest scale first. With six levels,
/// depth `d` holds wavelet scale `6 - d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmtParams {
    /// State distribution at the roots.
    pub root_prior: [f64; 2],
    /// `transitions[d - 1][k][m]` is the probability that a node at depth `d`
    /// is in state `m` given its parent is in state `k`.
    pub transitions: Vec<[[f64; 2]; 2]>,
    /// Standard deviations `[σ_S, σ_L]` per depth.
    pub sigmas: Vec<[f64; 2]>,
}

impl HmtParams {
    pub fn depth(&self) -> usize {
        self.sigmas.len()
    }

    /// Check probabilities and variances against a forest of `depth` scales.
    pub fn validate(&self, depth: usize) -> Result<()> {
        if self.sigmas.len() != depth || self.transitions.len() + 1 != depth {
            return Err(Error::shape(format!(
                "parameters cover {} scales, forest has {depth}",
                self.sigmas.len()
            )));
        }
        let on_simplex = |row: &[f64; 2]| {
            row.iter().all(|p| (0.0..=1.0).contains(p)) && (row[0] + row[1] - 1.0).abs() <= 1e-9
        };
        if !on_simplex(&self.root_prior) || !self.transitions.iter().flatten().all(on_simplex) {
            return Err(Error::Numeric("state probabilities must lie on the simplex".into()));
        }
        if let Some(s) = self.sigmas.iter().flatten().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Numeric(format!("standard deviation {s} is not positive")));
        }
        Ok(())
    }

    /// Swap state labels at every depth where `σ_S > σ_L`.
    ///
    /// The model is unchanged: transitions into and out of a relabeled depth
    /// are permuted along with it.
    pub fn canonicalize(&mut self) {
        for d in 0..self.sigmas.len() {
            if self.sigmas[d][0] <= self.sigmas[d][1] {
                continue;
            }
            self.sigmas[d].swap(0, 1);
            if d == 0 {
                self.root_prior.swap(0, 1);
            } else {
                for row in &mut self.transitions[d - 1] {
                    row.swap(0, 1);
                }
            }
            if d + 1 < self.sigmas.len() {
                self.transitions[d].swap(0, 1);
            }
        }
    }
}

/// Log density of a zero-mean Gaussian with the given log σ and `1 / σ²`.
#[inline]
fn log_gauss(w: f64, ln_sigma: f64, inv_var: f64) -> f64 {
    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
    -HALF_LN_2PI - ln_sigma - 0.5 * w * w * inv_var
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HmtParams {
        HmtParams {
            root_prior: [0.3, 0.7],
            transitions: vec![[[0.9, 0.1], [0.2, 0.8]], [[0.6, 0.4], [0.35, 0.65]]],
            sigmas: vec![[3.0, 1.0], [0.5, 2.0], [4.0, 0.25]],
        }
    }

    #[test]
    fn canonicalize_orders_sigmas_and_keeps_rows_stochastic() {
        let mut p = params();
        p.canonicalize();
        assert!(p.sigmas.iter().all(|s| s[0] <= s[1]));
        assert_eq!(p.root_prior, [0.7, 0.3]);
        // depth 0 swapped, depth 1 not: rows of the first matrix swap.
        assert_eq!(p.transitions[0], [[0.2, 0.8], [0.9, 0.1]]);
        // depth 2 swapped: columns of the second matrix swap.
        assert_eq!(p.transitions[1], [[0.4, 0.6], [0.65, 0.35]]);
        p.validate(3).unwrap();
    }

    #[test]
    fn validation_errors() {
        let mut p = params();
        assert!(matches!(p.validate(4), Err(Error::Shape(_))));
        p.sigmas[1][0] = 0.0;
        assert!(matches!(p.validate(3), Err(Error::Numeric(_))));
        let mut p = params();
        p.transitions[0][1] = [0.5, 0.6];
        assert!(matches!(p.validate(3), Err(Error::Numeric(_))));
    }
}

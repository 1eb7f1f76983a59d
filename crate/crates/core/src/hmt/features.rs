use serde::{Deserialize, Serialize};

use super::HmtParams;
use crate::error::{Error, Result};
use crate::transform::SUBBANDS;

/// Scales fitted per subband.
const SCALES: usize = 6;
/// Finest parent/child transitions kept per subband.
const KEPT_TRANSITIONS: usize = 4;
/// Entries contributed by one subband.
pub const PER_SUBBAND: usize = 2 * SCALES + 2 * KEPT_TRANSITIONS;
pub const FEATURE_DIM: usize = SUBBANDS * PER_SUBBAND;

/// How variance entries are written into the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceEncoding {
    /// `ln σ²`
    #[default]
    Log,
    /// `σ²`
    Raw,
}

/// Texture descriptor of one patch.
///
/// Layout, for subband `b` in `0..6`:
///
/// * `20 b + 2 (6 - ℓ) + s` holds the variance of state `s` at scale
///   `ℓ ∈ 1..=6` (scale 1 is the finest), so scales run coarse to fine.
/// * `20 b + 12 + 2 (4 - ℓ) + s` holds the persistence probability
///   `ε_ss` for the transition into child scale `ℓ ∈ 1..=4`.
///
/// State `s = 0` is the small-variance state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Position of a variance entry. Panics outside the valid ranges.
pub fn variance_index(subband: usize, scale: usize, state: usize) -> usize {
    assert!(subband < SUBBANDS && (1..=SCALES).contains(&scale) && state < 2);
    PER_SUBBAND * subband + 2 * (SCALES - scale) + state
}

/// Position of a persistence entry. Panics outside the valid ranges.
pub fn persistence_index(subband: usize, child_scale: usize, state: usize) -> usize {
    assert!(subband < SUBBANDS && (1..=KEPT_TRANSITIONS).contains(&child_scale) && state < 2);
    PER_SUBBAND * subband + 2 * SCALES + 2 * (KEPT_TRANSITIONS - child_scale) + state
}

/// Pack six fitted subband models into one feature vector.
///
/// The coarsest transition and the root prior are not part of the vector.
pub fn assemble_features(params: &[HmtParams], encoding: VarianceEncoding) -> Result<FeatureVector> {
    if params.len() != SUBBANDS {
        return Err(Error::shape(format!("expected {SUBBANDS} subband models, got {}", params.len())));
    }
    let mut out = [0.0; FEATURE_DIM];
    for (b, p) in params.iter().enumerate() {
        if p.sigmas.len() != SCALES || p.transitions.len() != SCALES - 1 {
            return Err(Error::shape(format!("subband {b} model does not have {SCALES} scales")));
        }
        for (d, sigma) in p.sigmas.iter().enumerate() {
            for s in 0..2 {
                let var = sigma[s] * sigma[s];
                out[variance_index(b, SCALES - d, s)] = match encoding {
                    VarianceEncoding::Log => var.ln(),
                    VarianceEncoding::Raw => var,
                };
            }
        }
        // transitions[d - 1] leads into depth d, i.e. scale 6 - d.
        for child_scale in 1..=KEPT_TRANSITIONS {
            let eps = &p.transitions[SCALES - child_scale - 1];
            for s in 0..2 {
                out[persistence_index(b, child_scale, s)] = eps[s][s];
            }
        }
    }
    Ok(FeatureVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(tag: f64) -> HmtParams {
        HmtParams {
            root_prior: [0.4, 0.6],
            transitions: (0..5).map(|d| {
                let p = 0.5 + 0.01 * d as f64 + tag;
                let q = 0.7 + 0.01 * d as f64 + tag;
                [[p, 1.0 - p], [1.0 - q, q]]
            }).collect(),
            sigmas: (0..6).map(|d| [(d + 1) as f64, 10.0 * (d + 1) as f64]).collect(),
        }
    }

    #[test]
    fn golden_layout() {
        let params: Vec<HmtParams> = (0..6).map(|b| model(0.001 * b as f64)).collect();
        let f = assemble_features(&params, VarianceEncoding::Raw).unwrap();
        let v = f.as_slice();
        assert_eq!(v.len(), 120);
        // Subband 0 starts at the coarsest scale (depth 0).
        assert_eq!(&v[0..4], &[1.0, 100.0, 4.0, 400.0]);
        assert_eq!(&v[10..12], &[36.0, 3600.0]);
        // First kept transition leads into scale 4, i.e. transitions[1].
        assert!((v[12] - 0.51).abs() < 1e-15 && (v[13] - 0.71).abs() < 1e-15);
        assert!((v[18] - 0.54).abs() < 1e-15 && (v[19] - 0.74).abs() < 1e-15);
        // Last entry: subband 5, child scale 1, large state.
        assert!((v[119] - 0.745).abs() < 1e-12);
        assert_eq!(variance_index(3, 6, 1), 61);
        assert_eq!(persistence_index(5, 1, 1), 119);

        let logs = assemble_features(&params, VarianceEncoding::Log).unwrap();
        assert!((logs.0[variance_index(2, 1, 1)] - 3600f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_models_tile() {
        let params = vec![model(0.0); 6];
        let f = assemble_features(&params, VarianceEncoding::Log).unwrap();
        for b in 1..6 {
            assert_eq!(&f.0[..20], &f.0[20 * b..20 * (b + 1)]);
        }
        assert!((0..6).all(|b| (1..=4).all(|l| (0..2).all(|s| (0.0..=1.0).contains(&f.0[persistence_index(b, l, s)])))));
    }

    #[test]
    fn wrong_counts_are_shape_errors() {
        assert!(matches!(assemble_features(&vec![model(0.0); 5], VarianceEncoding::Log), Err(Error::Shape(_))));
        let mut bad = vec![model(0.0); 6];
        bad[4].sigmas.pop();
        assert!(matches!(assemble_features(&bad, VarianceEncoding::Log), Err(Error::Shape(_))));
    }
}

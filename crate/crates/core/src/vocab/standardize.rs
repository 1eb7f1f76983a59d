use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-score transform learned from a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations; 1.0 for constant columns.
    pub scales: Vec<f64>,
    /// Columns with no spread. They are zeroed on application.
    pub constant: Vec<bool>,
}

/// Training features after standardization, with the transform kept for
/// out-of-sample queries.
#[derive(Debug, Clone)]
pub struct StandardizedFeatures {
    pub matrix: Array2<f64>,
    pub transform: Standardizer,
}

impl Standardizer {
    pub fn fit(features: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, dim) = features.dim();
        if n < 2 {
            return Err(Error::input(format!("need at least 2 feature rows, got {n}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("feature matrix contains non-finite values"));
        }
        let mut means = Vec::with_capacity(dim);
        let mut scales = Vec::with_capacity(dim);
        let mut constant = Vec::with_capacity(dim);
        for col in features.axis_iter(Axis(1)) {
            let first = col[0];
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let flat = col.iter().all(|&v| v == first) || var.sqrt() == 0.0;
            means.push(mean);
            scales.push(if flat { 1.0 } else { var.sqrt() });
            constant.push(flat);
        }
        Ok(Standardizer { means, scales, constant })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Standardize one vector.
    pub fn apply_row(&self, row: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::shape(format!("expected {} features, got {}", self.dim(), row.len())));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| if self.constant[j] { 0.0 } else { (v - self.means[j]) / self.scales[j] })
            .collect())
    }

    pub fn apply(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (n, dim) = features.dim();
        if dim != self.dim() {
            return Err(Error::shape(format!("expected {} features, got {dim}", self.dim())));
        }
        let mut out = Array2::zeros((n, dim));
        for (src, mut dst) in features.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
            for (j, v) in self.apply_row(src)?.into_iter().enumerate() {
                dst[j] = v;
            }
        }
        Ok(out)
    }
}

/// Z-score every column of an `N × D` matrix (`N ≥ 2`).
pub fn standardize(features: ArrayView2<'_, f64>) -> Result<StandardizedFeatures> {
    let transform = Standardizer::fit(features)?;
    let matrix = transform.apply(features)?;
    Ok(StandardizedFeatures { matrix, transform })
}

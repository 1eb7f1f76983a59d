//! Critically sampled separable DWT used as a shift-sensitivity baseline.
//!
//! Periodic extension with the orthonormal default q-shift lowpass and its
//! quadrature-mirror highpass, so the transform is an orthogonal change of
//! basis. Each level keeps three real detail subbands.

use ndarray::{Array2, Axis};

use super::filters::QSHIFT_06_H0A;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DwtPyramid {
    /// Per level (finest first): row-high/col-low, row-low/col-high, both high.
    pub details: Vec<[Array2<f64>; 3]>,
    pub approx: Array2<f64>,
}

impl DwtPyramid {
    /// Sum of squares per (level, subband), level-major.
    pub fn subband_energies(&self) -> Vec<f64> {
        self.details
            .iter()
            .flat_map(|bands| bands.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()))
            .collect()
    }
}

fn highpass() -> Vec<f64> {
    let n = QSHIFT_06_H0A.len();
    (0..n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * QSHIFT_06_H0A[n - 1 - k]
        })
        .collect()
}

fn analyze(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n / 2)
        .map(|k| h.iter().enumerate().map(|(j, &hj)| hj * x[(2 * k + j) % n]).sum())
        .collect()
}

fn along(x: &Array2<f64>, axis: Axis, h: &[f64]) -> Array2<f64> {
    let lanes: Vec<Vec<f64>> = x.lanes(axis).into_iter().map(|l| analyze(&l.to_vec(), h)).collect();
    let len = lanes[0].len();
    match axis {
        Axis(0) => Array2::from_shape_fn((len, lanes.len()), |(r, c)| lanes[c][r]),
        _ => Array2::from_shape_fn((lanes.len(), len), |(r, c)| lanes[r][c]),
    }
}

/// Forward periodic DWT; both sides must be divisible by `2^levels`.
pub fn dwt_forward(plane: &Array2<f64>, levels: usize) -> Result<DwtPyramid> {
    let (rows, cols) = plane.dim();
    let block = 1usize << levels;
    if levels == 0 || rows % block != 0 || cols % block != 0 {
        return Err(Error::shape(format!("{rows}x{cols} plane is not divisible by 2^{levels}")));
    }
    let lo = QSHIFT_06_H0A.to_vec();
    let hi = highpass();
    let mut approx = plane.clone();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let l = along(&approx, Axis(0), &lo);
        let h = along(&approx, Axis(0), &hi);
        details.push([along(&h, Axis(1), &lo), along(&l, Axis(1), &hi), along(&h, Axis(1), &hi)]);
        approx = along(&l, Axis(1), &lo);
    }
    Ok(DwtPyramid { details, approx })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_transform_preserves_energy() {
        let plane = Array2::from_shape_fn((32, 32), |(r, c)| ((r * 13 + c * 7) % 17) as f64 - 8.0);
        let pyr = dwt_forward(&plane, 3).unwrap();
        let input: f64 = plane.iter().map(|v| v * v).sum();
        let output = pyr.subband_energies().iter().sum::<f64>() + pyr.approx.iter().map(|v| v * v).sum::<f64>();
        assert!((input - output).abs() < 1e-9 * input);
    }
}

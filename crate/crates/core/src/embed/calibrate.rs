use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

const MAX_BISECTION: usize = 50;
const MAX_BRACKET: usize = 200;
const PERPLEXITY_TOL: f64 = 1e-5;

/// Per-point Gaussian bandwidths and the resulting conditional neighbor
/// distributions.
#[derive(Debug, Clone)]
pub struct Calibration {
    /// `σ_i²` for every point.
    pub bandwidths: Vec<f64>,
    /// Row `i` holds `p(j | i)`; the diagonal is zero.
    pub conditionals: Array2<f64>,
    /// Perplexity reached for every point.
    pub achieved: Vec<f64>,
}

/// Row of `p(j | i)` for precision `beta = 1 / (2 σ²)`, plus its entropy in nats.
fn row_distribution(d2: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let shift = d2.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, p)) in d2.iter().zip(out.iter_mut()).enumerate() {
        if j == i {
            *p = 0.0;
            continue;
        }
        let e = (-beta * (d - shift)).exp();
        *p = e;
        z += e;
        weighted += e * (d - shift);
    }
    out.iter_mut().for_each(|p| *p /= z);
    z.ln() + beta * weighted / z
}

/// Find, for each point, the bandwidth whose conditional distribution over
/// the other points has the requested perplexity (`exp` of the entropy in
/// nats).
///
/// The search bisects on `ln(1 / 2σ²)` after bracketing the target.
pub fn perplexity_calibration(distances: ArrayView2<'_, f64>, perplexity: f64) -> Result<Calibration> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::shape("distance matrix must be square"));
    }
    if !(perplexity >= 1.0) || (n as f64) < perplexity + 1.0 {
        return Err(Error::input(format!("perplexity {perplexity} needs at least {} points, got {n}", perplexity.ceil() + 1.0)));
    }
    if distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::input("distances must be finite and non-negative"));
    }
    let target = perplexity.ln();
    let mut bandwidths = Vec::with_capacity(n);
    let mut achieved = Vec::with_capacity(n);
    let mut conditionals = Array2::zeros((n, n));
    let mut row = vec![0.0; n];
    for i in 0..n {
        let d2 = distances.row(i).to_vec();
        let spread = d2.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).sum::<f64>() / (n - 1) as f64;
        let mut ln_beta = -(spread.max(f64::MIN_POSITIVE)).ln();
        let entropy = |lb: f64, row: &mut [f64]| row_distribution(&d2, i, lb.exp(), row);

        // Entropy decreases in beta: expand outward until the target is bracketed.
        let (mut lo, mut hi) = (ln_beta, ln_beta);
        let h0 = entropy(ln_beta, &mut row);
        if h0 > target {
            for _ in 0..MAX_BRACKET {
                hi += 2.0;
                if entropy(hi, &mut row) <= target {
                    break;
                }
            }
        } else {
            for _ in 0..MAX_BRACKET {
                lo -= 2.0;
                if entropy(lo, &mut row) >= target {
                    break;
                }
            }
        }
        let mut h = h0;
        for _ in 0..MAX_BISECTION {
            ln_beta = 0.5 * (lo + hi);
            h = entropy(ln_beta, &mut row);
            if (h.exp() - perplexity).abs() < PERPLEXITY_TOL {
                break;
            }
            if h > target {
                lo = ln_beta;
            } else {
                hi = ln_beta;
            }
        }
        bandwidths.push(0.5 / ln_beta.exp());
        achieved.push(h.exp());
        conditionals.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
    }
    Ok(Calibration { bandwidths, conditionals, achieved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sq_distances(points: &Array2<f64>) -> Array2<f64> {
        let n = points.nrows();
        Array2::from_shape_fn((n, n), |(i, j)| {
            points.row(i).iter().zip(points.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
        })
    }

    #[test]
    fn equidistant_triangle_is_uniform() {
        let d = Array2::from_shape_fn((3, 3), |(i, j)| if i == j { 0.0 } else { 1.0 });
        let cal = perplexity_calibration(d.view(), 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert!((cal.conditionals[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reaches_target_perplexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for perp in [2.0, 5.0, 12.5] {
            let pts = Array2::from_shape_fn((40, 6), |_| rng.random::<f64>() * 3.0);
            let cal = perplexity_calibration(sq_distances(&pts).view(), perp).unwrap();
            for row in cal.conditionals.rows() {
                let h: f64 = -row.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>();
                assert!((h.exp() - perp).abs() < 1e-4, "perplexity {} vs {perp}", h.exp());
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_distances_scales_bandwidths() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = Array2::from_shape_fn((25, 3), |_| rng.random::<f64>());
        let d = sq_distances(&pts);
        let a = perplexity_calibration(d.view(), 6.0).unwrap();
        let b = perplexity_calibration((&d * 9.0).view(), 6.0).unwrap();
        for i in 0..25 {
            assert!((b.bandwidths[i] / a.bandwidths[i] - 9.0).abs() < 1e-6);
        }
        let diff = (&a.conditionals - &b.conditionals).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn too_few_points() {
        let d = Array2::from_shape_fn((3, 3), |(i, j)| if i == j { 0.0 } else { 1.0 });
        assert!(matches!(perplexity_calibration(d.view(), 3.0), Err(Error::Input(_))));
    }
}

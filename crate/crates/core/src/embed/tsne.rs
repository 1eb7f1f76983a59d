use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::perplexity_calibration;
use crate::error::{Error, Result};

const MIN_POINTS: usize = 5;
const MOMENTUM_SWITCH: usize = 250;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            perplexity: 30.0,
            iterations: 1000,
            exaggeration: 4.0,
            exaggeration_iterations: 100,
            learning_rate: 100.0,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    /// Perplexity actually used for `n` points: the configured value, capped
    /// at `(n − 1) / 3` so each point keeps a meaningful neighborhood.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        self.perplexity.min((n as f64 - 1.0) / 3.0).max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    /// One `(x, y)` row per input point, centered at the origin.
    pub coords: Array2<f64>,
    pub perplexity: f64,
    /// KL(P ‖ Q) at the random start and after the last iteration.
    pub kl_initial: f64,
    pub kl_final: f64,
}

fn squared_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Unnormalized Student-t affinities and their total over `i ≠ j`.
fn student_t(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[[i, 0]] - y[[j, 0]];
                        let dy = y[[i, 1]] - y[[j, 1]];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let z: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    let num = Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]);
    (num, z)
}

fn kl_divergence(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let (num, z) = student_t(y);
    p.iter()
        .zip(num.iter())
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &q)| pij * (pij / (q / z).max(f64::MIN_POSITIVE)).ln())
        .sum()
}

/// Exact t-SNE into two dimensions.
///
/// Gradient descent with momentum and per-coordinate gains on the
/// Kullback-Leibler divergence between symmetrized Gaussian affinities in
/// the input and Student-t affinities in the plane. The layout is
/// recentered after every step.
pub fn tsne(points: ArrayView2<'_, f64>, config: &EmbeddingConfig) -> Result<Embedding> {
    let n = points.nrows();
    if n < MIN_POINTS {
        return Err(Error::input(format!("t-SNE needs at least {MIN_POINTS} points, got {n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("t-SNE input contains non-finite values"));
    }
    if !(config.learning_rate > 0.0 && config.exaggeration > 0.0 && config.perplexity > 0.0) {
        return Err(Error::Config("t-SNE settings must be positive".into()));
    }
    let perplexity = config.effective_perplexity(n);
    let cal = perplexity_calibration(squared_distances(points).view(), perplexity)?;
    let c = &cal.conditionals;
    let p = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            ((c[[i, j]] + c[[j, i]]) / (2.0 * n as f64)).max(P_FLOOR)
        }
    });

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y = Array2::from_shape_fn((n, 2), |_| init.sample(&mut rng));
    recenter(&mut y);
    let kl_initial = kl_divergence(&p, &y);
    let mut update = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::ones((n, 2));

    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iterations { config.exaggeration } else { 1.0 };
        let momentum = if iter < MOMENTUM_SWITCH { 0.5 } else { 0.8 };
        let (num, z) = student_t(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let w = (exaggeration * p[[i, j]] - num[[i, j]] / z) * num[[i, j]];
                    g[0] += 4.0 * w * (y[[i, 0]] - y[[j, 0]]);
                    g[1] += 4.0 * w * (y[[i, 1]] - y[[j, 1]]);
                }
                g
            })
            .collect();
        for i in 0..n {
            for d in 0..2 {
                let gd = grad[i][d];
                let gain = &mut gains[[i, d]];
                *gain = if (gd > 0.0) != (update[[i, d]] > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
                *gain = gain.max(MIN_GAIN);
                update[[i, d]] = momentum * update[[i, d]] - config.learning_rate * *gain * gd;
                y[[i, d]] += update[[i, d]];
            }
        }
        recenter(&mut y);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("t-SNE diverged".into()));
    }
    let kl_final = kl_divergence(&p, &y);
    Ok(Embedding { coords: y, perplexity, kl_initial, kl_final })
}

fn recenter(y: &mut Array2<f64>) {
    let n = y.nrows() as f64;
    for d in 0..2 {
        let mean = y.column(d).sum() / n;
        y.column_mut(d).mapv_inplace(|v| v - mean);
    }
}

/// Mean silhouette coefficient of a labeled point set (Euclidean).
///
/// Points alone in their cluster score zero.
pub fn silhouette(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    let n = points.nrows();
    if labels.len() != n {
        return Err(Error::shape("one label per point required"));
    }
    let clusters = labels.iter().max().map_or(0, |m| m + 1);
    if n < 2 || labels.iter().collect::<std::collections::BTreeSet<_>>().len() < 2 {
        return Err(Error::input("silhouette needs at least two clusters"));
    }
    let d = squared_distances(points).mapv(f64::sqrt);
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; clusters];
        let mut counts = vec![0usize; clusters];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += d[[i, j]];
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..clusters)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn two_clusters(seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((40, 20), |(i, j)| {
            let center = if (i < 20) == (j % 2 == 0) { 5.0 } else { 0.0 };
            center + rng.random_range(-0.5..0.5)
        })
    }

    #[test]
    fn separates_two_clusters() {
        let x = two_clusters(1);
        let emb = tsne(x.view(), &EmbeddingConfig::default()).unwrap();
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let s = silhouette(emb.coords.view(), &labels).unwrap();
        assert!(s > 0.5, "silhouette {s}");
        assert!(emb.kl_final < emb.kl_initial);
        for d in 0..2 {
            assert!(emb.coords.column(d).sum().abs() / 40.0 < 1e-8);
        }
    }

    #[test]
    fn duplicates_stay_together() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = Array2::from_shape_fn((30, 5), |_| rng.random::<f64>());
        for k in 0..5 {
            let src = x.row(2 * k).to_owned();
            x.row_mut(2 * k + 1).assign(&src);
        }
        let emb = tsne(x.view(), &EmbeddingConfig { seed: 3, ..EmbeddingConfig::default() }).unwrap();
        let d = squared_distances(emb.coords.view()).mapv(f64::sqrt);
        let mut all: Vec<f64> = (0..30).flat_map(|i| (i + 1..30).map(move |j| (i, j))).map(|(i, j)| d[[i, j]]).collect();
        all.sort_by(f64::total_cmp);
        let median = all[all.len() / 2];
        for k in 0..5 {
            assert!(d[[2 * k, 2 * k + 1]] < median);
        }
    }

    #[test]
    fn same_seed_same_layout() {
        let x = two_clusters(2);
        let config = EmbeddingConfig { iterations: 300, seed: 11, ..EmbeddingConfig::default() };
        let a = tsne(x.view(), &config).unwrap();
        let b = tsne(x.view(), &config).unwrap();
        assert!(a.coords.iter().zip(b.coords.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn input_errors() {
        let mut x = two_clusters(3);
        x[[4, 4]] = f64::NAN;
        assert!(matches!(tsne(x.view(), &EmbeddingConfig::default()), Err(Error::Input(_))));
        let small = Array2::<f64>::zeros((4, 2));
        assert!(matches!(tsne(small.view(), &EmbeddingConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn silhouette_of_separated_pairs() {
        let pts = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let s = silhouette(pts.view(), &[0, 0, 1, 1]).unwrap();
        // a = 1, b = mean(10, sqrt(101)) for every point.
        let b = (10.0 + 101f64.sqrt()) / 2.0;
        assert!((s - (b - 1.0) / b).abs() < 1e-12);
        assert!(silhouette(pts.view(), &[0, 0, 0, 0]).is_err());
    }
}

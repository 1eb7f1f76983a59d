use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Points examined when choosing the two starting centroids.
const SEED_SAMPLE: usize = 256;
const MAX_LLOYD: usize = 100;

/// Result of splitting one set of rows in two.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Row indices of the odd (left) child.
    pub left: Vec<usize>,
    /// Row indices of the even (right) child.
    pub right: Vec<usize>,
    /// Final centroids; `None` for an empty child.
    pub centroids: [Option<Vec<f64>>; 2],
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(points: ArrayView2<'_, f64>, members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points.ncols()];
    for &i in members {
        for (acc, v) in c.iter_mut().zip(points.row(i)) {
            *acc += v;
        }
    }
    let n = members.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

/// Farthest pair within a seeded sample of the members; `None` when all
/// sampled points coincide.
fn farthest_pair<R: Rng + ?Sized>(points: ArrayView2<'_, f64>, members: &[usize], rng: &mut R) -> Option<(usize, usize)> {
    let pool: Vec<usize> = if members.len() <= SEED_SAMPLE {
        members.to_vec()
    } else {
        let mut picked = sample(rng, members.len(), SEED_SAMPLE).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|k| members[k]).collect()
    };
    let mut best = (0.0, None);
    for (a, &i) in pool.iter().enumerate() {
        for &j in &pool[a + 1..] {
            let d: f64 = points.row(i).iter().zip(points.row(j)).map(|(x, y)| (x - y) * (x - y)).sum();
            if d > best.0 {
                best = (d, Some((i, j)));
            }
        }
    }
    best.1
}

/// Two-means split of `members` (row indices into `points`).
///
/// Centroids start at the farthest pair of a seeded sample and are refined
/// by Lloyd iterations until assignments stop changing. A point equidistant
/// from both centroids goes left. When the members cannot be separated
/// (one point, or all identical) everything goes left and the right child
/// is empty.
pub fn bisect<R: Rng + ?Sized>(points: ArrayView2<'_, f64>, members: &[usize], rng: &mut R) -> Result<Split> {
    if members.is_empty() {
        return Err(Error::input("cannot split an empty set"));
    }
    let Some((a, b)) = farthest_pair(points, members, rng) else {
        let centroid = mean_of(points, members);
        let objective = members.iter().map(|&i| sq_dist(points.row(i), &centroid)).sum();
        return Ok(Split {
            left: members.to_vec(),
            right: Vec::new(),
            centroids: [Some(centroid), None],
            objective: vec![objective],
        });
    };
    let mut centroids = [points.row(a).to_vec(), points.row(b).to_vec()];
    let mut side = vec![2u8; members.len()];
    let mut objective = Vec::new();
    for _ in 0..MAX_LLOYD {
        let mut changed = false;
        let mut sse = 0.0;
        for (slot, &i) in side.iter_mut().zip(members) {
            let dl = sq_dist(points.row(i), &centroids[0]);
            let dr = sq_dist(points.row(i), &centroids[1]);
            let s = u8::from(dr < dl);
            sse += dl.min(dr);
            if *slot != s {
                *slot = s;
                changed = true;
            }
        }
        objective.push(sse);
        if !changed {
            break;
        }
        for (k, centroid) in centroids.iter_mut().enumerate() {
            let group: Vec<usize> = members.iter().zip(&side).filter(|(_, &s)| s as usize == k).map(|(&i, _)| i).collect();
            if !group.is_empty() {
                *centroid = mean_of(points, &group);
            }
        }
    }
    let (left, right): (Vec<(usize, u8)>, Vec<(usize, u8)>) =
        members.iter().copied().zip(side).partition(|&(_, s)| s == 0);
    let left: Vec<usize> = left.into_iter().map(|(i, _)| i).collect();
    let right: Vec<usize> = right.into_iter().map(|(i, _)| i).collect();
    let [cl, cr] = centroids;
    Ok(Split {
        centroids: [(!left.is_empty()).then_some(cl), (!right.is_empty()).then_some(cr)],
        left,
        right,
        objective,
    })
}

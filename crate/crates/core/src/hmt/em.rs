use super::inference::{sweep, Workspace};
use super::{upward_downward, CoefficientQuadForest, HmtParams};
use crate::error::{Error, Result};

/// Smallest variance any state may take.
pub const VARIANCE_FLOOR: f64 = 1e-12;
const PROB_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once the relative log-likelihood change drops below this.
    pub tolerance: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { max_iterations: 200, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: HmtParams,
    /// Log-likelihood of the forest under each evaluated parameter set; the
    /// last entry belongs to `params`.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    /// Set when every coefficient has the same magnitude, so no mixture can
    /// be identified.
    pub degenerate: bool,
}

/// Starting point: `σ_S = rms / 2`, `σ_L = 2 rms` per depth, persistence
/// 0.8 on the diagonal and an even root prior.
fn initial_params(forest: &CoefficientQuadForest) -> HmtParams {
    let depth = forest.depth();
    let sigmas = (0..depth)
        .map(|d| {
            let v = forest.values(d);
            let rms = (v.iter().map(|w| w * w).sum::<f64>() / v.len() as f64).sqrt();
            [(0.5 * rms).max(VARIANCE_FLOOR.sqrt()), (2.0 * rms).max(VARIANCE_FLOOR.sqrt())]
        })
        .collect();
    HmtParams {
        root_prior: [0.5, 0.5],
        transitions: vec![[[0.8, 0.2], [0.2, 0.8]]; depth - 1],
        sigmas,
    }
}

fn clamp_row(row: [f64; 2]) -> [f64; 2] {
    let p = row[0].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    [p, 1.0 - p]
}

/// Sufficient statistics of one E-step.
struct Stats {
    root: [f64; 2],
    weight: Vec<[f64; 2]>,
    energy: Vec<[f64; 2]>,
    counts: Vec<[[f64; 2]; 2]>,
}

impl Stats {
    fn new(depth: usize) -> Self {
        Stats { root: [0.0; 2], weight: vec![[0.0; 2]; depth], energy: vec![[0.0; 2]; depth], counts: vec![[[0.0; 2]; 2]; depth] }
    }
}

fn e_step(forest: &CoefficientQuadForest, params: &HmtParams, ws: &mut Workspace) -> Result<(f64, Stats)> {
    let mut stats = Stats::new(forest.depth());
    let loglik = sweep(forest, params, ws, |d, i, g, xi| {
        let w = forest.values(d)[i];
        let w2 = w * w;
        let (weight, energy) = (&mut stats.weight[d], &mut stats.energy[d]);
        weight[0] += g[0];
        weight[1] += g[1];
        energy[0] += g[0] * w2;
        energy[1] += g[1] * w2;
        if d == 0 {
            stats.root[0] += g[0];
            stats.root[1] += g[1];
        } else {
            let c = &mut stats.counts[d];
            c[0][0] += xi[0][0];
            c[0][1] += xi[0][1];
            c[1][0] += xi[1][0];
            c[1][1] += xi[1][1];
        }
    })?;
    Ok((loglik, stats))
}

fn m_step(stats: &Stats, old: &HmtParams) -> HmtParams {
    let mut new = old.clone();
    let n_roots = stats.root[0] + stats.root[1];
    new.root_prior = clamp_row([stats.root[0] / n_roots, stats.root[1] / n_roots]);
    for d in 0..stats.weight.len() {
        for k in 0..2 {
            if stats.weight[d][k] > f64::MIN_POSITIVE {
                new.sigmas[d][k] = (stats.energy[d][k] / stats.weight[d][k]).max(VARIANCE_FLOOR).sqrt();
            }
        }
        if d == 0 {
            continue;
        }
        let counts = stats.counts[d];
        for k in 0..2 {
            let total = counts[k][0] + counts[k][1];
            if total > f64::MIN_POSITIVE {
                new.transitions[d - 1][k] = clamp_row([counts[k][0] / total, counts[k][1] / total]);
            }
        }
    }
    new
}

/// Fit scale-tied HMT parameters by expectation-maximization.
///
/// Initialization is deterministic. After fitting, states are relabeled so
/// that `σ_S ≤ σ_L` at every depth.
pub fn em_fit(forest: &CoefficientQuadForest, config: &EmConfig) -> Result<EmFit> {
    if forest.depth() < 2 {
        return Err(Error::shape("an HMT needs at least 2 scales"));
    }
    if config.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be positive".into()));
    }
    let first = forest.values(0)[0];
    let constant = (0..forest.depth()).all(|d| forest.values(d).iter().all(|&w| w == first));
    let mut params = initial_params(forest);
    if constant {
        let sigma = first.abs().max(VARIANCE_FLOOR.sqrt());
        params.sigmas.iter_mut().for_each(|s| *s = [sigma, sigma]);
        let post = upward_downward(forest, &params)?;
        return Ok(EmFit { params, loglik_trace: vec![post.loglik], converged: true, degenerate: true });
    }

    let mut ws = Workspace::new(forest);
    let mut trace = Vec::new();
    let mut converged = false;
    loop {
        let (loglik, stats) = e_step(forest, &params, &mut ws)?;
        if !loglik.is_finite() {
            return Err(Error::Numeric("log-likelihood is not finite".into()));
        }
        if let Some(&prev) = trace.last() {
            let change = (loglik - prev) / f64::max(f64::abs(prev), 1e-300);
            if change.abs() < config.tolerance {
                trace.push(loglik);
                converged = true;
                break;
            }
        }
        trace.push(loglik);
        if trace.len() >= config.max_iterations {
            break;
        }
        params = m_step(&stats, &params);
    }
    params.canonicalize();
    Ok(EmFit { params, loglik_trace: trace, converged, degenerate: false })
}

use super::{log_gauss, CoefficientQuadForest, HmtParams};
use crate::error::{Error, Result};

/// Output of the upward-downward pass.
#[derive(Debug, Clone)]
pub struct Posteriors {
    /// `states[d][i]` is `P(state | all observations)` for node `i` at depth `d`.
    pub states: Vec<Vec<[f64; 2]>>,
    /// `pairs[d][i][k][m]` is the joint posterior of parent state `k` and
    /// child state `m` for node `i` at depth `d ≥ 1`; `pairs[0]` is empty.
    pub pairs: Vec<Vec<[[f64; 2]; 2]>>,
    /// Log-likelihood of the whole forest.
    pub loglik: f64,
}

/// Reusable per-node buffers for repeated passes over one forest.
pub(crate) struct Workspace {
    offsets: Vec<usize>,
    beta: Vec<[f64; 2]>,
    up: Vec<[f64; 2]>,
    prod: Vec<[f64; 2]>,
    prod_log: Vec<f64>,
    alpha: Vec<[f64; 2]>,
}

impl Workspace {
    pub(crate) fn new(forest: &CoefficientQuadForest) -> Self {
        let mut offsets = vec![0];
        for n in forest.level_sizes() {
            offsets.push(offsets.last().unwrap() + n);
        }
        let total = *offsets.last().unwrap();
        Workspace {
            offsets,
            beta: vec![[0.0; 2]; total],
            up: vec![[0.0; 2]; total],
            prod: vec![[1.0; 2]; total],
            prod_log: vec![0.0; total],
            alpha: vec![[0.0; 2]; total],
        }
    }
}

/// Running product kept as mantissa plus log so long chains of factors
/// neither underflow nor cost a logarithm each.
struct LogAccumulator {
    mantissa: f64,
    log: f64,
}

impl LogAccumulator {
    fn new() -> Self {
        LogAccumulator { mantissa: 1.0, log: 0.0 }
    }

    #[inline]
    fn mul(&mut self, factor: f64) {
        self.mantissa *= factor;
        if !(1e-250..=1e250).contains(&self.mantissa) {
            self.log += self.mantissa.ln();
            self.mantissa = 1.0;
        }
    }

    fn ln(&self) -> f64 {
        self.log + self.mantissa.ln()
    }
}

/// One upward-downward pass. `visit(depth, index, γ, ξ)` receives every
/// node's posterior and, below the roots, the joint posterior `ξ[k][m]` of
/// parent state `k` and node state `m`. Returns the log-likelihood.
///
/// `params` must already be validated against the forest.
pub(crate) fn sweep<V>(forest: &CoefficientQuadForest, params: &HmtParams, ws: &mut Workspace, mut visit: V) -> Result<f64>
where
    V: FnMut(usize, usize, [f64; 2], [[f64; 2]; 2]),
{
    let depth = forest.depth();
    let mut acc = LogAccumulator::new();
    let mut log_const = 0.0;
    ws.prod.iter_mut().for_each(|p| *p = [1.0; 2]);
    ws.prod_log.iter_mut().for_each(|p| *p = 0.0);

    for d in (0..depth).rev() {
        let sig = params.sigmas[d];
        let c = [log_gauss(0.0, sig[0].ln(), 0.0), log_gauss(0.0, sig[1].ln(), 0.0)];
        let h = [0.5 / (sig[0] * sig[0]), 0.5 / (sig[1] * sig[1])];
        let base = ws.offsets[d];
        for (i, &w) in forest.values(d).iter().enumerate() {
            let node = base + i;
            let w2 = w * w;
            let e0 = c[0] - h[0] * w2;
            let e1 = c[1] - h[1] * w2;
            let m = ws.prod[node];
            let (t0, t1, top) = if e0 >= e1 {
                (m[0], (e1 - e0).exp() * m[1], e0)
            } else {
                ((e0 - e1).exp() * m[0], m[1], e1)
            };
            let s = t0 + t1;
            if !(s > 0.0) {
                return Err(Error::Numeric("forest has zero likelihood under these parameters".into()));
            }
            ws.beta[node] = [t0 / s, t1 / s];
            acc.mul(s);
            log_const += top + ws.prod_log[node];
        }
        if d > 0 {
            let eps = params.transitions[d - 1];
            let parent_base = ws.offsets[d - 1];
            for (i, &p) in forest.parents(d).iter().enumerate() {
                let b = ws.beta[base + i];
                let msg = [eps[0][0] * b[0] + eps[0][1] * b[1], eps[1][0] * b[0] + eps[1][1] * b[1]];
                ws.up[base + i] = msg;
                let parent = parent_base + p;
                let pr = &mut ws.prod[parent];
                pr[0] *= msg[0];
                pr[1] *= msg[1];
                let big = pr[0].max(pr[1]);
                if big < 1e-200 && big > 0.0 {
                    pr[0] /= big;
                    pr[1] /= big;
                    ws.prod_log[parent] += big.ln();
                }
            }
        }
    }

    let prior = params.root_prior;
    for i in 0..forest.roots() {
        let b = ws.beta[i];
        let g = [prior[0] * b[0], prior[1] * b[1]];
        let z = g[0] + g[1];
        if !(z > 0.0) {
            return Err(Error::Numeric("forest has zero likelihood under these parameters".into()));
        }
        acc.mul(z);
        ws.alpha[i] = prior;
        visit(0, i, [g[0] / z, g[1] / z], [[0.0; 2]; 2]);
    }

    for d in 1..depth {
        let eps = params.transitions[d - 1];
        let (base, parent_base) = (ws.offsets[d], ws.offsets[d - 1]);
        for (i, &p) in forest.parents(d).iter().enumerate() {
            let (node, parent) = (base + i, parent_base + p);
            let (ap, bp, up) = (ws.alpha[parent], ws.beta[parent], ws.up[node]);
            // Parent belief with this node's own evidence divided out.
            let rest = [
                if up[0] > 0.0 { ap[0] * bp[0] / up[0] } else { 0.0 },
                if up[1] > 0.0 { ap[1] * bp[1] / up[1] } else { 0.0 },
            ];
            let a = [rest[0] * eps[0][0] + rest[1] * eps[1][0], rest[0] * eps[0][1] + rest[1] * eps[1][1]];
            let bc = ws.beta[node];
            let z = a[0] * bc[0] + a[1] * bc[1];
            let za = a[0] + a[1];
            ws.alpha[node] = [a[0] / za, a[1] / za];
            let inv = 1.0 / z;
            let xi = [
                [rest[0] * eps[0][0] * bc[0] * inv, rest[0] * eps[0][1] * bc[1] * inv],
                [rest[1] * eps[1][0] * bc[0] * inv, rest[1] * eps[1][1] * bc[1] * inv],
            ];
            visit(d, i, [a[0] * bc[0] * inv, a[1] * bc[1] * inv], xi);
        }
    }
    Ok(log_const + acc.ln())
}

/// Exact posterior state probabilities by the scaled upward-downward
/// recursion.
///
/// Upward messages are renormalized at each node and the scale factors are
/// accumulated separately, so deep or large forests never underflow.
pub fn upward_downward(forest: &CoefficientQuadForest, params: &HmtParams) -> Result<Posteriors> {
    params.validate(forest.depth())?;
    let sizes = forest.level_sizes();
    let mut states: Vec<Vec<[f64; 2]>> = sizes.iter().map(|&n| vec![[0.0; 2]; n]).collect();
    let mut pairs: Vec<Vec<[[f64; 2]; 2]>> =
        sizes.iter().enumerate().map(|(d, &n)| if d == 0 { Vec::new() } else { vec![[[0.0; 2]; 2]; n] }).collect();
    let mut ws = Workspace::new(forest);
    let loglik = sweep(forest, params, &mut ws, |d, i, g, xi| {
        states[d][i] = g;
        if d > 0 {
            pairs[d][i] = xi;
        }
    })?;
    Ok(Posteriors { states, pairs, loglik })
}

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::special::{digamma, ln_gamma};
use crate::error::{Error, Result};

/// Keyword counts of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagOfWords {
    /// Distinct 0-based keyword indices with their counts, sorted by index.
    pub entries: Vec<(usize, u32)>,
    pub vocab_size: usize,
}

impl BagOfWords {
    /// Count 1-based keyword labels (`1..=vocab_size`).
    pub fn from_labels(labels: &[u32], vocab_size: usize) -> Result<Self> {
        let mut counts = vec![0u32; vocab_size];
        for &l in labels {
            if l == 0 || l as usize > vocab_size {
                return Err(Error::input(format!("keyword {l} outside 1..={vocab_size}")));
            }
            counts[l as usize - 1] += 1;
        }
        Ok(Self::from_counts(&counts))
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        let entries = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(w, &c)| (w, c)).collect();
        BagOfWords { entries, vocab_size: counts.len() }
    }

    /// Total number of words.
    pub fn total(&self) -> u32 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn dense(&self) -> Vec<u32> {
        let mut out = vec![0; self.vocab_size];
        for &(w, c) in &self.entries {
            out[w] = c;
        }
        out
    }
}

/// Topic model: `phi` is `T × K` with column `k` the keyword distribution of
/// pattern `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub phi: Array2<f64>,
    pub alpha: Vec<f64>,
    pub beta: f64,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.phi.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() != self.topics() || self.topics() == 0 {
            return Err(Error::shape("alpha length must equal the topic count"));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::Numeric("alpha must be positive".into()));
        }
        for col in self.phi.axis_iter(Axis(1)) {
            if col.iter().any(|p| !(*p >= 0.0)) || (col.sum() - 1.0).abs() > 1e-10 {
                return Err(Error::Numeric("topic columns must lie on the simplex".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EStepConfig {
    /// Stop when the L1 change of γ falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EStepConfig {
    fn default() -> Self {
        EStepConfig { tolerance: 1e-6, max_iterations: 200 }
    }
}

/// Variational posterior of one document.
#[derive(Debug, Clone)]
pub struct DocPosterior {
    pub gamma: Vec<f64>,
    /// Row `i` is the topic distribution of the `i`-th distinct word of the
    /// document.
    pub responsibilities: Array2<f64>,
    /// Evidence lower bound of the document after each sweep.
    pub bound_trace: Vec<f64>,
}

impl DocPosterior {
    pub fn bound(&self) -> f64 {
        *self.bound_trace.last().expect("at least one sweep")
    }
}

fn estep_from(doc: &BagOfWords, model: &TopicModel, mut gamma: Vec<f64>, config: &EStepConfig) -> Result<DocPosterior> {
    let k = model.topics();
    if let Some(&(w, _)) = doc.entries.iter().find(|e| e.0 >= model.vocab_size()) {
        return Err(Error::input(format!("keyword index {w} outside the vocabulary")));
    }
    if doc.entries.is_empty() {
        return Err(Error::input("document has no words"));
    }
    let alpha = &model.alpha;
    let prior_norm = ln_gamma(alpha.iter().sum()) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    let mut resp = Array2::zeros((doc.entries.len(), k));
    let mut trace = Vec::new();
    for _ in 0..config.max_iterations.max(1) {
        let psi: Vec<f64> = gamma.iter().map(|&g| digamma(g)).collect();
        let top = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale: Vec<f64> = psi.iter().map(|p| (p - top).exp()).collect();
        let mut next = alpha.clone();
        let mut word_term = 0.0;
        for (i, &(w, n)) in doc.entries.iter().enumerate() {
            let phi = model.phi.row(w);
            let mut row = resp.row_mut(i);
            let mut z = 0.0;
            for t in 0..k {
                row[t] = phi[t] * scale[t];
                z += row[t];
            }
            if !(z > 0.0) {
                return Err(Error::input(format!("keyword {w} has zero probability under every pattern")));
            }
            let n = f64::from(n);
            for t in 0..k {
                row[t] /= z;
                next[t] += n * row[t];
            }
            word_term += n * (top + z.ln());
        }
        let change: f64 = next.iter().zip(&gamma).map(|(a, b)| (a - b).abs()).sum();
        // With r ∝ φ exp ψ(γ_old), the word terms of the bound collapse to
        // Σ n (top + ln z) − Σ_k (γ_k − α_k) ψ(γ_old,k).
        let gsum: f64 = next.iter().sum();
        let bound = prior_norm - ln_gamma(gsum) + next.iter().map(|&g| ln_gamma(g)).sum::<f64>() + word_term
            - next.iter().zip(alpha).zip(&psi).map(|((g, a), p)| (g - a) * p).sum::<f64>();
        gamma = next;
        trace.push(bound);
        if change < config.tolerance {
            break;
        }
    }
    Ok(DocPosterior { gamma, responsibilities: resp, bound_trace: trace })
}

/// Mean-field coordinate ascent for one document, starting from
/// `γ = α + N / K`.
pub fn variational_estep(doc: &BagOfWords, model: &TopicModel, config: &EStepConfig) -> Result<DocPosterior> {
    model.validate()?;
    let start = f64::from(doc.total()) / model.topics() as f64;
    let gamma = model.alpha.iter().map(|a| a + start).collect();
    estep_from(doc, model, gamma, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-level concentration.
    pub alpha: f64,
    /// Symmetric pseudo-count added to every keyword of every pattern.
    pub beta: f64,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative change of the corpus bound that ends the fit.
    pub tolerance: f64,
    pub estep: EStepConfig,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 20,
            alpha: 1.0,
            beta: 0.01,
            seed: 0,
            max_iterations: 500,
            tolerance: 1e-6,
            estep: EStepConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdaFit {
    pub model: TopicModel,
    /// Variational Dirichlet parameters, one row per document.
    pub gamma: Array2<f64>,
    /// Pattern weights π, one row per document.
    pub weights: Array2<f64>,
    /// Corpus objective after each E-step.
    pub bound_trace: Vec<f64>,
    pub converged: bool,
}

/// Posterior-mean pattern proportions: `γ − α` clipped at zero and
/// normalized.
pub fn pattern_weights(gamma: &[f64], alpha: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = gamma.iter().zip(alpha).map(|(g, a)| (g - a).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / gamma.len() as f64; gamma.len()]
    }
}

/// Log prior of the pattern columns under the smoothing pseudo-counts.
fn topic_log_prior(phi: &Array2<f64>, beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    beta * phi.iter().map(|p| p.ln()).sum::<f64>()
}

fn initial_phi(corpus: &[BagOfWords], vocab: usize, topics: usize, seed: u64) -> Array2<f64> {
    let mut freq = vec![0.0; vocab];
    for doc in corpus {
        for &(w, c) in &doc.entries {
            freq[w] += f64::from(c);
        }
    }
    let total: f64 = freq.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = Array2::from_shape_fn((vocab, topics), |(w, _)| (freq[w] / total + 1.0 / vocab as f64) * rng.random_range(0.5..1.5));
    for mut col in phi.axis_iter_mut(Axis(1)) {
        let s = col.sum();
        col.mapv_inplace(|v| v / s);
    }
    phi
}

/// Fit LDA by variational EM.
///
/// Each E-step warm-starts every document from its previous γ, and the
/// M-step sets each pattern column proportional to `β` plus its expected
/// keyword counts. Under these updates the summed document bounds plus
/// `β Σ ln φ` never decrease. Sufficient statistics are reduced in document
/// order, so results do not depend on thread count.
pub fn lda_fit(corpus: &[BagOfWords], config: &LdaConfig) -> Result<LdaFit> {
    if corpus.is_empty() {
        return Err(Error::input("corpus is empty"));
    }
    if config.topics == 0 {
        return Err(Error::Config("topic count must be at least 1".into()));
    }
    if !(config.alpha > 0.0) || !(config.beta >= 0.0) {
        return Err(Error::Config("alpha must be positive and beta non-negative".into()));
    }
    let vocab = corpus[0].vocab_size;
    if corpus.iter().any(|d| d.vocab_size != vocab) {
        return Err(Error::input("documents disagree on vocabulary size"));
    }
    if let Some(i) = corpus.iter().position(|d| d.entries.is_empty()) {
        return Err(Error::input(format!("document {i} has no words")));
    }
    let k = config.topics;
    let mut model = TopicModel {
        phi: initial_phi(corpus, vocab, k, config.seed),
        alpha: vec![config.alpha; k],
        beta: config.beta,
    };
    let mut gammas: Vec<Vec<f64>> = corpus
        .iter()
        .map(|d| vec![config.alpha + f64::from(d.total()) / k as f64; k])
        .collect();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    loop {
        let posts: Vec<DocPosterior> = corpus
            .par_iter()
            .zip(gammas.par_iter())
            .map(|(doc, g)| estep_from(doc, &model, g.clone(), &config.estep))
            .collect::<Result<_>>()?;
        let bound = posts.iter().map(DocPosterior::bound).sum::<f64>() + topic_log_prior(&model.phi, model.beta);
        gammas = posts.iter().map(|p| p.gamma.clone()).collect();
        let done = trace
            .last()
            .is_some_and(|&prev| ((bound - prev) / f64::max(f64::abs(prev), 1e-300)).abs() < config.tolerance);
        trace.push(bound);
        if done {
            converged = true;
            break;
        }
        if trace.len() >= config.max_iterations {
            break;
        }

        let mut counts = Array2::from_elem((vocab, k), config.beta);
        for (doc, post) in corpus.iter().zip(&posts) {
            for (i, &(w, n)) in doc.entries.iter().enumerate() {
                for t in 0..k {
                    counts[[w, t]] += f64::from(n) * post.responsibilities[[i, t]];
                }
            }
        }
        for mut col in counts.axis_iter_mut(Axis(1)) {
            let s = col.sum();
            if s > 0.0 {
                col.mapv_inplace(|v| v / s);
            } else {
                col.fill(1.0 / vocab as f64);
            }
        }
        model.phi = counts;
        model.validate()?;
    }

    let n = corpus.len();
    let gamma = Array2::from_shape_fn((n, k), |(d, t)| gammas[d][t]);
    let mut weights = Array2::zeros((n, k));
    for (d, g) in gammas.iter().enumerate() {
        for (t, v) in pattern_weights(g, &model.alpha).into_iter().enumerate() {
            weights[[d, t]] = v;
        }
    }
    Ok(LdaFit { model, gamma, weights, bound_trace: trace, converged })
}

//! Run configuration, loaded from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::hmt::{EmConfig, VarianceEncoding};
use crate::topics::{EStepConfig, LdaConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingConfig {
    pub patch: usize,
    pub stride: usize,
    pub sub_image: usize,
}

impl Default for TilingConfig {
    fn default() -> Self {
        TilingConfig { patch: 64, stride: 32, sub_image: 480 }
    }
}

impl TilingConfig {
    /// Patches along one side of a sub-image.
    pub fn patches_per_side(&self) -> usize {
        (self.sub_image - self.patch) / self.stride + 1
    }

    pub fn patches_per_sub_image(&self) -> usize {
        self.patches_per_side() * self.patches_per_side()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub levels: usize,
    pub encoding: VarianceEncoding,
    pub em_max_iterations: usize,
    pub em_tolerance: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let em = EmConfig::default();
        FeatureConfig {
            levels: 6,
            encoding: VarianceEncoding::Log,
            em_max_iterations: em.max_iterations,
            em_tolerance: em.tolerance,
        }
    }
}

impl FeatureConfig {
    pub fn em(&self) -> EmConfig {
        EmConfig { max_iterations: self.em_max_iterations, tolerance: self.em_tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub depth: usize,
    /// Defaults to the run seed plus 1.
    pub seed: Option<u64>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig { depth: 10, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub estep_max_iterations: usize,
    pub estep_tolerance: f64,
    /// Defaults to the run seed plus 2.
    pub seed: Option<u64>,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        let lda = LdaConfig::default();
        TopicsConfig {
            topics: lda.topics,
            alpha: lda.alpha,
            beta: lda.beta,
            max_iterations: lda.max_iterations,
            tolerance: lda.tolerance,
            estep_max_iterations: lda.estep.max_iterations,
            estep_tolerance: lda.estep.tolerance,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    /// Defaults to the run seed plus 3.
    pub seed: Option<u64>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        let e = EmbeddingConfig::default();
        EmbedConfig {
            perplexity: e.perplexity,
            iterations: e.iterations,
            exaggeration: e.exaggeration,
            exaggeration_iterations: e.exaggeration_iterations,
            learning_rate: e.learning_rate,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// 1-based patterns summed in the heatmap; empty selects all.
    pub patterns: Vec<usize>,
}

/// Which stages `run-all` executes. A disabled stage must already have its
/// outputs on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub extract: bool,
    pub vocab: bool,
    pub topics: bool,
    pub embed: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles { extract: true, vocab: true, topics: true, embed: true, report: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub tiling: TilingConfig,
    pub features: FeatureConfig,
    pub vocab: VocabConfig,
    pub topics: TopicsConfig,
    pub embed: EmbedConfig,
    pub report: ReportConfig,
    pub stages: StageToggles,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("config sections serialize")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tiling;
        let f = &self.features;
        if f.levels != 6 {
            return Err(config_err(format!("features.levels must be 6 for 120-entry features, got {}", f.levels)));
        }
        if t.patch == 0 || t.patch % (1 << f.levels) != 0 {
            return Err(config_err(format!("patch size {} is not a positive multiple of 2^{}", t.patch, f.levels)));
        }
        if t.stride == 0 || t.stride > t.patch {
            return Err(config_err(format!("stride {} must lie in 1..={}", t.stride, t.patch)));
        }
        if t.sub_image < t.patch || (t.sub_image - t.patch) % t.stride != 0 {
            return Err(config_err(format!(
                "sub-image {} does not fit a whole grid of {}-pixel patches at stride {}",
                t.sub_image, t.patch, t.stride
            )));
        }
        if f.em_max_iterations == 0 || !(f.em_tolerance > 0.0) {
            return Err(config_err("EM needs positive max iterations and tolerance"));
        }
        if !(1..=20).contains(&self.vocab.depth) {
            return Err(config_err(format!("vocab.depth {} outside 1..=20", self.vocab.depth)));
        }
        let tp = &self.topics;
        if tp.topics == 0 || !(tp.alpha > 0.0) || !(tp.beta >= 0.0) {
            return Err(config_err("topics needs K >= 1, alpha > 0 and beta >= 0"));
        }
        if tp.max_iterations == 0 || tp.estep_max_iterations == 0 || !(tp.tolerance > 0.0) || !(tp.estep_tolerance > 0.0) {
            return Err(config_err("topic iteration limits and tolerances must be positive"));
        }
        let e = &self.embed;
        if !(e.perplexity > 0.0) || !(e.exaggeration > 0.0) || !(e.learning_rate > 0.0) || e.iterations == 0 {
            return Err(config_err("embed perplexity, exaggeration, learning rate and iterations must be positive"));
        }
        if let Some(&bad) = self.report.patterns.iter().find(|&&p| p == 0 || p > tp.topics) {
            return Err(config_err(format!("report pattern {bad} outside 1..={}", tp.topics)));
        }
        Ok(())
    }

    pub fn vocab_seed(&self) -> u64 {
        self.vocab.seed.unwrap_or(self.seed.wrapping_add(1))
    }

    pub fn topics_seed(&self) -> u64 {
        self.topics.seed.unwrap_or(self.seed.wrapping_add(2))
    }

    pub fn embed_seed(&self) -> u64 {
        self.embed.seed.unwrap_or(self.seed.wrapping_add(3))
    }

    pub fn vocab_size(&self) -> usize {
        1 << self.vocab.depth
    }

    pub fn lda(&self) -> LdaConfig {
        let t = &self.topics;
        LdaConfig {
            topics: t.topics,
            alpha: t.alpha,
            beta: t.beta,
            seed: self.topics_seed(),
            max_iterations: t.max_iterations,
            tolerance: t.tolerance,
            estep: EStepConfig { tolerance: t.estep_tolerance, max_iterations: t.estep_max_iterations },
        }
    }

    pub fn embedding(&self) -> EmbeddingConfig {
        let e = &self.embed;
        EmbeddingConfig {
            perplexity: e.perplexity,
            iterations: e.iterations,
            exaggeration: e.exaggeration,
            exaggeration_iterations: e.exaggeration_iterations,
            learning_rate: e.learning_rate,
            seed: self.embed_seed(),
        }
    }

    /// Hash of everything the feature file depends on.
    pub fn extract_hash(&self) -> String {
        hash_parts(&[b"extract", &json(&self.tiling), &json(&self.features)])
    }

    /// Cumulative hashes: each stage folds in its upstream hash, so any
    /// upstream change invalidates everything below it.
    pub fn vocab_hash(&self) -> String {
        let seed = self.vocab_seed().to_le_bytes();
        hash_parts(&[self.extract_hash().as_bytes(), b"vocab", &json(&self.vocab.depth), &seed])
    }

    pub fn topics_hash(&self) -> String {
        let t = &self.topics;
        let params = json(&(t.topics, t.alpha, t.beta, t.max_iterations, t.tolerance, t.estep_max_iterations, t.estep_tolerance));
        let seed = self.topics_seed().to_le_bytes();
        hash_parts(&[self.vocab_hash().as_bytes(), b"topics", &params, &seed])
    }

    pub fn embed_hash(&self) -> String {
        let e = &self.embed;
        let params = json(&(e.perplexity, e.iterations, e.exaggeration, e.exaggeration_iterations, e.learning_rate));
        let seed = self.embed_seed().to_le_bytes();
        hash_parts(&[self.topics_hash().as_bytes(), b"embed", &params, &seed])
    }
}

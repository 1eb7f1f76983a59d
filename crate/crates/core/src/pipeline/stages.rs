//! Stage runners. Each stage reads the previous stage's file, checks its
//! provenance against the current configuration and the file it was derived
//! from, and writes its own outputs.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::artifacts::*;
use super::extract::{extract_images, ExtractSummary, FeatureFile, FEATURES_KIND};
use super::report::{render_report, ReportInput, ReportSummary};
use super::Pipeline;
use crate::embed::tsne;
use crate::error::{Error, Result};
use crate::topics::{lda_fit, BagOfWords, TopicModel};
use crate::vocab::{build_vocab, standardize};

/// One LDA document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubImageRef {
    pub panel: String,
    pub sub_image: usize,
}

/// Payload of the model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub topics: usize,
    pub documents: Vec<SubImageRef>,
    pub model: TopicModel,
    pub bound_trace: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct VocabSummary {
    pub records: usize,
    pub leaves: usize,
    /// Leaves holding at least one training patch.
    pub occupied: usize,
}

#[derive(Debug, Clone)]
pub struct TopicsSummary {
    pub documents: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EmbedSummary {
    pub points: usize,
    pub perplexity: f64,
    pub kl_initial: f64,
    pub kl_final: f64,
}

/// Documents and weights parsed from a weights or embedding table.
fn matrix_rows(table: &CsvTable, first: usize, width: usize) -> Result<(Vec<SubImageRef>, Array2<f64>)> {
    let panel = table.column("panel")?;
    let sub = table.column("sub_image")?;
    let mut docs = Vec::with_capacity(table.rows.len());
    let mut values = Array2::zeros((table.rows.len(), width));
    for (i, row) in table.rows.iter().enumerate() {
        docs.push(SubImageRef { panel: row[panel].clone(), sub_image: parse_field(&row[sub], "sub-image index")? });
        for j in 0..width {
            values[[i, j]] = parse_field(&row[first + j], "value")?;
        }
    }
    Ok((docs, values))
}

impl Pipeline {
    pub fn extract(&self, images: &[PathBuf], csv: bool) -> Result<ExtractSummary> {
        let summary = self.pool.install(|| extract_images(images, &self.config, &self.path(CACHE_DIR)))?;
        write_atomic(&self.path(FEATURES_BIN), &summary.file.to_bytes())?;
        if csv {
            write_atomic(&self.path(FEATURES_CSV), &summary.file.to_csv()?)?;
        }
        Ok(summary)
    }

    fn load_features(&self) -> Result<(FeatureFile, String)> {
        let path = self.path(FEATURES_BIN);
        let bytes = read_stage_file(&path, "extract")?;
        let file = FeatureFile::from_bytes(&bytes, &path)?;
        file.provenance.verify(&path, FEATURES_KIND, &self.config.extract_hash(), None, "extract")?;
        Ok((file, sha256_hex(&bytes)))
    }

    /// Load a CSV stage file written by `stage`, checking it against the
    /// current configuration and against the upstream file on disk.
    fn load_table(&self, name: &str, kind: &str, hash: &str, upstream: &str, stage: &str) -> Result<(CsvTable, String)> {
        let path = self.path(name);
        let bytes = read_stage_file(&path, stage)?;
        let table = CsvTable::parse(&bytes, &path)?;
        let upstream_sha = sha256_hex(&read_stage_file(&self.path(upstream), stage)?);
        table.provenance.verify(&path, kind, hash, Some(&upstream_sha), stage)?;
        Ok((table, sha256_hex(&bytes)))
    }

    pub fn vocab(&self) -> Result<VocabSummary> {
        let (features, upstream) = self.load_features()?;
        let seed = self.config.vocab_seed();
        let depth = self.config.vocab.depth;
        let build = self.pool.install(|| build_vocab(&standardize(features.values.view())?, depth, seed))?;
        let hash = self.config.vocab_hash();
        write_json(&self.path(VOCAB_JSON), &Provenance::new(VOCAB_KIND, hash.clone(), seed, Some(upstream.clone())), &build.tree)?;

        let header = ["panel", "sub_image", "patch_row", "patch_col", "label"].map(String::from);
        let rows: Vec<Vec<String>> = features
            .keys
            .iter()
            .zip(build.labels())
            .map(|(k, label)| {
                vec![
                    features.panels[k.panel as usize].id.clone(),
                    k.sub_image.to_string(),
                    k.patch_row.to_string(),
                    k.patch_col.to_string(),
                    label.to_string(),
                ]
            })
            .collect();
        write_csv(&self.path(LABELS_CSV), &Provenance::new(LABELS_KIND, hash, seed, Some(upstream)), &header, &rows)?;
        Ok(VocabSummary {
            records: rows.len(),
            leaves: build.tree.leaves(),
            occupied: build.tree.leaf_sizes.iter().filter(|&&n| n > 0).count(),
        })
    }

    pub fn topics(&self) -> Result<TopicsSummary> {
        let (labels, upstream) = self.load_table(LABELS_CSV, LABELS_KIND, &self.config.vocab_hash(), FEATURES_BIN, "vocab")?;
        let (panel, sub, label) = (labels.column("panel")?, labels.column("sub_image")?, labels.column("label")?);
        let mut documents: Vec<SubImageRef> = Vec::new();
        let mut words: Vec<Vec<u32>> = Vec::new();
        for row in &labels.rows {
            let doc = SubImageRef { panel: row[panel].clone(), sub_image: parse_field(&row[sub], "sub-image index")? };
            if documents.last() != Some(&doc) {
                if documents.contains(&doc) {
                    return Err(Error::pipeline(format!("{LABELS_CSV}: rows of {doc:?} are not contiguous")));
                }
                documents.push(doc);
                words.push(Vec::new());
            }
            words.last_mut().unwrap().push(parse_field(&row[label], "label")?);
        }
        let expected = self.config.tiling.patches_per_sub_image();
        let corpus = words
            .iter()
            .zip(&documents)
            .map(|(w, doc)| {
                if w.len() != expected {
                    return Err(Error::pipeline(format!("{doc:?} has {} labels, expected {expected}", w.len())));
                }
                BagOfWords::from_labels(w, self.config.vocab_size())
            })
            .collect::<Result<Vec<_>>>()?;

        let lda = self.config.lda();
        let fit = self.pool.install(|| lda_fit(&corpus, &lda))?;
        let hash = self.config.topics_hash();
        let k = lda.topics;
        let mut header = vec!["panel".to_string(), "sub_image".to_string()];
        header.extend((1..=k).map(|j| format!("pattern_{j}")));
        let rows: Vec<Vec<String>> = documents
            .iter()
            .zip(fit.weights.rows())
            .map(|(doc, w)| {
                let mut row = vec![doc.panel.clone(), doc.sub_image.to_string()];
                row.extend(w.iter().map(f64::to_string));
                row
            })
            .collect();
        let summary = TopicsSummary { documents: documents.len(), iterations: fit.bound_trace.len(), converged: fit.converged };
        let body = ModelDocument { topics: k, documents, model: fit.model, bound_trace: fit.bound_trace, converged: fit.converged };
        write_json(&self.path(MODEL_JSON), &Provenance::new(MODEL_KIND, hash.clone(), lda.seed, Some(upstream.clone())), &body)?;
        write_csv(&self.path(WEIGHTS_CSV), &Provenance::new(WEIGHTS_KIND, hash, lda.seed, Some(upstream)), &header, &rows)?;
        Ok(summary)
    }

    fn load_weights(&self) -> Result<(Vec<SubImageRef>, Array2<f64>, String)> {
        let (table, sha) = self.load_table(WEIGHTS_CSV, WEIGHTS_KIND, &self.config.topics_hash(), LABELS_CSV, "topics")?;
        let first = table.column("pattern_1")?;
        let (docs, weights) = matrix_rows(&table, first, table.header.len() - first)?;
        Ok((docs, weights, sha))
    }

    pub fn embed(&self) -> Result<EmbedSummary> {
        let (docs, weights, upstream) = self.load_weights()?;
        let config = self.config.embedding();
        let embedding = self.pool.install(|| tsne(weights.view(), &config))?;
        let header = ["panel", "sub_image", "x", "y"].map(String::from);
        let rows: Vec<Vec<String>> = docs
            .iter()
            .zip(embedding.coords.rows())
            .map(|(d, xy)| vec![d.panel.clone(), d.sub_image.to_string(), xy[0].to_string(), xy[1].to_string()])
            .collect();
        let prov = Provenance::new(EMBEDDING_KIND, self.config.embed_hash(), config.seed, Some(upstream));
        write_csv(&self.path(EMBEDDING_CSV), &prov, &header, &rows)?;
        Ok(EmbedSummary {
            points: rows.len(),
            perplexity: embedding.perplexity,
            kl_initial: embedding.kl_initial,
            kl_final: embedding.kl_final,
        })
    }

    /// Render the report bundle. `patterns` overrides the configured heatmap
    /// subset; `images` supplies optional backgrounds, matched to panels by
    /// file stem.
    pub fn report(&self, patterns: Option<&[usize]>, images: &[PathBuf]) -> Result<ReportSummary> {
        let (features, _) = self.load_features()?;
        let (docs, weights, _) = self.load_weights()?;
        let (table, _) = self.load_table(EMBEDDING_CSV, EMBEDDING_KIND, &self.config.embed_hash(), WEIGHTS_CSV, "embed")?;
        let (points, coords) = matrix_rows(&table, table.column("x")?, 2)?;
        if points != docs {
            return Err(Error::pipeline(format!("{EMBEDDING_CSV} and {WEIGHTS_CSV} list different sub-images; re-run `embed`")));
        }
        let doc_panels = docs
            .iter()
            .map(|d| {
                let p = features.panels.iter().position(|p| p.id == d.panel);
                p.map(|p| (p, d.sub_image)).ok_or_else(|| Error::pipeline(format!("unknown panel {:?}", d.panel)))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = weights.ncols();
        let patterns: Vec<usize> = match patterns {
            Some(p) => p.to_vec(),
            None if !self.config.report.patterns.is_empty() => self.config.report.patterns.clone(),
            None => (1..=k).collect(),
        };
        let backgrounds = features
            .panels
            .iter()
            .map(|p| images.iter().find(|path| super::ingest::panel_id(path) == p.id).map(|path| absolute(path)))
            .collect();
        let input = ReportInput {
            panels: &features.panels,
            tiling: &self.config.tiling,
            documents: &doc_panels,
            weights: weights.view(),
            coords: coords.view(),
            patterns: &patterns,
            backgrounds,
        };
        render_report(&input, &self.path(REPORT_DIR))
    }
}

fn absolute(path: &Path) -> PathBuf {
    std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

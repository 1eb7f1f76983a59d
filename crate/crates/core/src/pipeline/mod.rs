//! End-to-end runs: ingestion, tiling, staged execution, persistence and
//! reports.
//!
//! A run directory holds one file per stage:
//!
//! | stage     | writes                                   |
//! |-----------|------------------------------------------|
//! | `extract` | `features.bin` (and `features.csv`)      |
//! | `vocab`   | `vocab.json`, `labels.csv`               |
//! | `topics`  | `model.json`, `weights.csv`              |
//! | `embed`   | `embedding.csv`                          |
//! | `report`  | `report/` with profiles, heatmaps, scatter |
//!
//! Each file carries the cumulative configuration hash of its stage and the
//! SHA-256 of its input, so a stage refuses to run on outputs left behind by
//! a different configuration. All parallel work is reduced in a fixed order,
//! so outputs are byte-identical for any worker count.

pub mod artifacts;
pub mod config;
pub mod extract;
pub mod ingest;
pub mod report;
pub mod stages;
pub mod synthetic;
pub mod tiling;

use std::path::{Path, PathBuf};

pub use config::RunConfig;
pub use extract::{patch_features, ExtractSummary, FeatureFile, PanelInfo, RecordKey};
pub use ingest::{load_panel, PanelImage};
pub use report::{dominant_patterns, ReportSummary};
pub use stages::{EmbedSummary, ModelDocument, SubImageRef, TopicsSummary, VocabSummary};
pub use synthetic::{stripe_panel, write_stripe_corpus, StripeConfig, StripeOrientation};
pub use tiling::{tile, SubImageGrid, TileIndex};

use crate::error::{Error, Result};

/// A configured run rooted at an output directory.
pub struct Pipeline {
    config: RunConfig,
    out_dir: PathBuf,
    pool: rayon::ThreadPool,
}

/// What `run_all` did.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub extract: Option<ExtractSummary>,
    pub vocab: Option<VocabSummary>,
    pub topics: Option<TopicsSummary>,
    pub embed: Option<EmbedSummary>,
    pub report: Option<ReportSummary>,
}

impl RunSummary {
    /// Images skipped during extraction.
    pub fn failures(&self) -> &[(PathBuf, String)] {
        self.extract.as_ref().map_or(&[], |e| &e.failures)
    }
}

impl Pipeline {
    /// `jobs = 0` uses one worker per core.
    pub fn new(config: RunConfig, out_dir: impl Into<PathBuf>, jobs: usize) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
        Ok(Pipeline { config, out_dir: out_dir.into(), pool })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Run every enabled stage in order.
    pub fn run_all(&self, images: &[PathBuf], patterns: Option<&[usize]>, csv: bool) -> Result<RunSummary> {
        let stages = &self.config.stages;
        let mut summary = RunSummary::default();
        if stages.extract {
            let extract = self.extract(images, csv)?;
            log::info!("extract: {} records from {} panels", extract.file.keys.len(), extract.file.panels.len());
            summary.extract = Some(extract);
        }
        if stages.vocab {
            summary.vocab = Some(self.vocab()?);
        }
        if stages.topics {
            summary.topics = Some(self.topics()?);
        }
        if stages.embed {
            summary.embed = Some(self.embed()?);
        }
        if stages.report {
            summary.report = Some(self.report(patterns, images)?);
        }
        Ok(summary)
    }
}

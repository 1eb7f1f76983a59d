//! Latent Dirichlet allocation over keyword bags and pattern-weight
//! summaries.
//!
//! A document is one sub-image; its words are the keyword labels of its
//! patches. Each pattern (topic) is a distribution over keywords and each
//! document mixes patterns with Dirichlet-distributed proportions.

mod aggregate;
mod dirichlet;
mod lda;
pub mod special;

pub use aggregate::{aggregate_panels, pattern_subset_score};
pub use dirichlet::{dirichlet_ln_pdf, dirichlet_pdf};
pub use lda::{
    lda_fit, pattern_weights, variational_estep, BagOfWords, DocPosterior, EStepConfig, LdaConfig, LdaFit, TopicModel,
};

//! Two-dimensional t-SNE layout of pattern-weight vectors.

mod calibrate;
mod tsne;

pub use calibrate::{perplexity_calibration, Calibration};
pub use tsne::{silhouette, tsne, Embedding, EmbeddingConfig};

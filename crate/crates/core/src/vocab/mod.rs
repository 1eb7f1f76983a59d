//! Keyword vocabulary: divisive bisecting 2-means over patch features.
//!
//! Features are z-scored per column, then the whole set is split in two,
//! each half is split again, and so on for a fixed number of levels. The
//! leaves of the resulting binary tree are the keywords; a patch's keyword
//! label is the 1-based index of its leaf.

mod bisect;
mod standardize;
mod tree;

pub use bisect::{bisect, Split};
pub use standardize::{standardize, StandardizedFeatures, Standardizer};
pub use tree::{ancestor_label, build_vocab, SplitNode, VocabBuild, VocabTree, VOCAB_FORMAT_VERSION};

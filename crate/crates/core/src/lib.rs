//! Unsupervised stylometry for scanned paintings.
//!
//! The crate turns RGB rasters into a per-sub-image mixture of learned
//! "stylistic patterns":
//!
//! 1. [`colorspace`] maps pixels from RGB through HSL onto the Cartesian
//!    double cone and z-scores each plane of a patch.
//! 2. [`transform`] runs a six-level dual-tree complex wavelet transform on
//!    every plane and fuses the three colour channels into magnitudes.
//! 3. [`hmt`] fits a two-state hidden Markov tree to each oriented subband and
//!    packs the fitted parameters into a 120-entry feature vector.
//! 4. [`vocab`] quantizes feature vectors with a depth-10 bisecting 2-means
//!    tree, giving 1024 keywords.
//! 5. [`topics`] fits latent Dirichlet allocation over sub-image keyword bags.
//! 6. [`embed`] projects per-sub-image pattern weights to 2-D with exact t-SNE.
//! 7. [`pipeline`] tiles images, runs the stages, persists artifacts and
//!    renders reports.

pub mod colorspace;
pub mod embed;
pub mod error;
pub mod hmt;
pub mod pipeline;
pub mod topics;
pub mod transform;
pub mod vocab;

pub use error::{Error, Result};

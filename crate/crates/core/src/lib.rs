//! Evaluation harness for virtual-staining segmentation pipelines.
//!
//! Neural models (domain transfer, promptable segmenter, patch embedder)
//! stay outside the process behind the [`adapters`] protocol; everything
//! around them lives here: prompt construction and mask postprocessing
//! ([`raster`]), overlap and instance metrics ([`metrics`]), the Wilcoxon
//! signed-rank test ([`stats`]), embedding-space divergence ([`distance`]),
//! 3-D reconstruction ([`volume`]), patch similarity maps ([`patch`]) and the
//! end-to-end runs over dataset manifests ([`pipeline`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapters;
pub mod distance;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod patch;
pub mod pipeline;
pub mod raster;
pub mod stats;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};

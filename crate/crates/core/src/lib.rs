//! Classical multi-view depth estimation with uncertainty, and the metrics
//! used to evaluate it.
//!
//! The estimator sweeps fronto-parallel planes uniformly in inverse depth,
//! scores each other view against the keyview with ZNCC, fuses the per-view
//! cost volumes (plain or confidence-weighted mean) and decodes an inverse
//! depth map plus a Laplace-scale uncertainty map.
//!
//! Evaluation covers absolute relative error, inlier ratio, median or
//! scalar alignment, clipping, sparsification curves with AUSE, and greedy
//! source-view selection. [`augmentation`] implements histogram-driven scale
//! augmentation, and [`synth`] renders exact-ground-truth scenes.
//!
//! The crate is `no_std` (with `alloc`). The `parallel` feature spreads
//! hypotheses and rows over rayon workers; results are bitwise identical
//! with or without it.

#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod augmentation;
pub mod data;
pub mod decoder;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod image;
pub mod metrics;
mod par;
pub mod plane_sweep;
pub mod synth;
pub mod view_selection;

pub use data::{depth_to_inverse, inverse_to_depth, DepthMap, InverseDepthMap, Sample, View};
pub use decoder::{estimate_depth, DepthEstimate};
pub use error::{Error, Result};
pub use fusion::FusionMode;
pub use geometry::{Homography, Intrinsics, Pose};
pub use image::Image;
pub use metrics::{Alignment, EvalSettings};
pub use plane_sweep::{CostVolume, RangeSource, SweepConfig};

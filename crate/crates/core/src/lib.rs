//! Deterministic, seedable domain randomization for 3D grayscale volumes.
//!
//! The crate covers the whole offline workflow around intensity augmentation
//! for volumetric segmentation:
//!
//! - [`volume`]: volume/mask carriers, resampling, affine warping, crop/pad,
//!   left/right splitting and the fixed preprocessing chain.
//! - [`io`]: the native `VAUG` container, a NIfTI-1 importer and dataset
//!   manifests.
//! - [`geo`], [`remap`], [`style`]: geometric, intensity-remapping and
//!   style-based augmentation.
//! - [`curation`], [`postprocess`]: ground-truth cleanup and prediction
//!   cleanup built on [`labeling`].
//! - [`metrics`], [`stats`]: DSC, STAPLE consensus, Friedman and Dunn tests.
//! - [`pipeline`], [`preview`]: training-set materialization and the
//!   preview service back end.
//!
//! Every random draw goes through an explicit generator; identical inputs
//! produce bit-identical outputs.

pub mod curation;
pub mod error;
pub mod geo;
pub mod io;
pub mod labeling;
pub mod metrics;
pub mod pipeline;
pub mod postprocess;
pub mod preview;
pub mod remap;
pub mod rng;
pub mod stats;
pub mod style;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{Axis, AxisOrder, Geometry, Interp, Mask, Raster, Volume};

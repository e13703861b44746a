//! Multi-view ultrasound compounding.
//!
//! The crate fuses co-registered B-mode images taken from several probe
//! angles. Views are warped into a common frame, decomposed into Gaussian
//! and Laplacian pyramids, and blended band by band: middle bands keep the
//! locally highest-contrast view where structural confidences agree (and the
//! most structurally confident view where they do not), extreme bands use an
//! intensity-confidence weighted average. Detected anatomic boundaries are
//! re-injected while the pyramid is collapsed.
//!
//! Besides the fusion itself the crate carries the per-pixel average,
//! maximum and confidence-weighted baselines, the horizontal boundary
//! detector, patch metrics (mean/variance ratios, Otsu, ellipse fit, Dice),
//! and a deterministic synthetic scene generator.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! live in the `echofuse` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod math;

pub mod boundary;
pub mod compound;
pub mod confidence;
pub mod ellipse;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod phantom;
pub mod pyramid;
pub mod rng;
pub mod warp;

pub use error::Error;
pub use grid::{BoundaryMask, Grid, Image, Mask, ValidityMask};
pub use warp::{RigidTransform2D, ViewInput};

pub type Result<T> = core::result::Result<T, Error>;

//! Per-pixel confidence maps.
//!
//! Two roles are distinguished: intensity confidence (how trustworthy the
//! measured brightness is) and structural confidence (how likely the pixel
//! shows real anatomy rather than artifact or shadow). Maps produced by
//! external estimators can be loaded from disk; otherwise intensity
//! confidence falls back to a per-column attenuation recurrence and
//! structural confidence to a constant map.

use alloc::vec::Vec;

use crate::grid::{Grid, Image};
use crate::math;
use crate::{Error, Result};

pub const DEFAULT_DECAY: f64 = 0.002;
pub const DEFAULT_ABSORPTION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ConfidenceKind {
    Intensity,
    Structural,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    grid: Grid,
    kind: ConfidenceKind,
}

impl ConfidenceMap {
    /// Wraps `grid`, rejecting values that are non-finite or outside [0, 1].
    pub fn new(grid: Grid, kind: ConfidenceKind) -> Result<Self> {
        if let Some((index, &value)) =
            grid.data().iter().enumerate().find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Range { index, value });
        }
        Ok(Self { grid, kind })
    }

    pub fn kind(&self) -> ConfidenceKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.grid.get(x, y)
    }
}

/// Parameters of the attenuation fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct AttenuationParams {
    /// Loss per row of depth.
    pub decay: f64,
    /// Loss per unit of intensity traversed.
    pub absorption: f64,
}

impl Default for AttenuationParams {
    fn default() -> Self {
        Self { decay: DEFAULT_DECAY, absorption: DEFAULT_ABSORPTION }
    }
}

/// Intensity confidence from a simple beam-attenuation model.
///
/// Each column starts at 1 and is multiplied, row by row, by
/// `exp(-decay) * exp(-absorption * I(x, y - 1))`.
pub fn attenuation_intensity_confidence(image: &Image, params: AttenuationParams) -> Result<ConfidenceMap> {
    let AttenuationParams { decay, absorption } = params;
    if !(decay >= 0.0 && decay.is_finite()) || !(absorption >= 0.0 && absorption.is_finite()) {
        return Err(Error::Parameter("decay and absorption must be finite and non-negative"));
    }
    let (w, h) = image.dims();
    let step = math::exp(-decay);
    let mut data: Vec<f32> = alloc::vec![0.0; w * h];
    for x in 0..w {
        let mut c = 1.0f64;
        data[x] = 1.0;
        for y in 1..h {
            c *= step * math::exp(-absorption * image.get(x, y - 1) as f64);
            data[y * w + x] = c as f32;
        }
    }
    ConfidenceMap::new(Grid::new(w, h, data)?, ConfidenceKind::Intensity)
}

/// Constant structural confidence of 1. Feeding this to the fusion makes
/// every layer fall back to pure contrast selection.
pub fn uniform_structural_confidence(width: usize, height: usize) -> Result<ConfidenceMap> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions("confidence map dimensions must be positive"));
    }
    ConfidenceMap::new(Grid::filled(width, height, 1.0), ConfidenceKind::Structural)
}

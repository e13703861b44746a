//! Row-major pixel containers.
//!
//! `x` is the column, `y` the row, and `y` grows downward (the axial
//! direction of the probe in its native frame).

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A row-major grid of `f32` samples with no range restriction.
///
/// Laplacian bands, intermediate reconstructions and confidence layers are
/// all stored this way.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions("grid dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::Dimensions("data length does not match width * height"));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Element-wise `self + other`.
    pub fn add(&self, other: &Grid) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    /// Element-wise `self - other`.
    pub fn sub(&self, other: &Grid) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &Grid, f: impl Fn(f32, f32) -> f32) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Dimensions("grid dimensions differ"));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { width: self.width, height: self.height, data })
    }

    pub fn max_abs_diff(&self, other: &Grid) -> f32 {
        assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max)
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    /// Copy out the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Dimensions("crop window is outside the grid"));
        }
        Ok(Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}

/// A single-channel intensity image with every value finite and in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image(Grid);

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_grid(Grid::new(width, height, data)?)
    }

    pub fn from_grid(grid: Grid) -> Result<Self> {
        if let Some((index, &value)) =
            grid.data().iter().enumerate().find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Range { index, value });
        }
        Ok(Self(grid))
    }

    /// Clamp into [0, 1] (NaN becomes 0) and wrap.
    pub fn from_grid_clamped(grid: &Grid) -> Self {
        Self(grid.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!((0.0..=1.0).contains(&value));
        Self(Grid::filled(width, height, value))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.0.get(x, y)
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }

    pub fn flip_horizontal(&self) -> Self {
        Self(self.0.flip_horizontal())
    }
}

impl AsRef<Grid> for Image {
    fn as_ref(&self) -> &Grid {
        &self.0
    }
}

/// Binary per-pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

/// Pixels observed by a view after warping.
pub type ValidityMask = Mask;
/// Pixels belonging to an anatomic boundary.
pub type BoundaryMask = Mask;

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions("mask dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::Dimensions("data length does not match width * height"));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Pixels where `grid > threshold`.
    pub fn above(grid: &Grid, threshold: f32) -> Self {
        Self { width: grid.width(), height: grid.height(), data: grid.data().iter().map(|&v| v > threshold).collect() }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// 1.0 where set, 0.0 elsewhere.
    pub fn to_grid(&self) -> Grid {
        Grid { width: self.width, height: self.height, data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect() }
    }

    pub fn and(&self, other: &Mask) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Dimensions("mask dimensions differ"));
        }
        Ok(Self { width: self.width, height: self.height, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect() })
    }

    pub fn or(&self, other: &Mask) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Dimensions("mask dimensions differ"));
        }
        Ok(Self { width: self.width, height: self.height, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a || b).collect() })
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Dimensions("crop window is outside the mask"));
        }
        Ok(Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}

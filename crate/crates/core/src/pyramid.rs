//! Gaussian and Laplacian pyramids in the Burt–Adelson style.
//!
//! Layer 1 is the finest (input resolution) and layer K the coarsest; each
//! layer is `ceil(previous / 2)` in both axes. Reduction blurs with a small
//! binomial kernel under reflect-101 borders and keeps even indices.
//! Expansion zero-inserts to the target size and blurs with the same kernel
//! scaled by 2 per axis, which keeps constants exactly constant.

use alloc::vec::Vec;

use crate::grid::Grid;
use crate::{Error, Result};

pub const DEFAULT_LEVELS: usize = 5;

/// Separable smoothing kernel used for both reduction and expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Kernel {
    /// (1, 4, 6, 4, 1) / 16
    #[default]
    Binomial5,
    /// (1, 2, 1) / 4
    Binomial3,
}

impl Kernel {
    pub fn taps(self) -> &'static [f32] {
        match self {
            Kernel::Binomial5 => &[1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0],
            Kernel::Binomial3 => &[0.25, 0.5, 0.25],
        }
    }
}

/// Reflect-101 (`dcb|abcd|cba`) index into `0..n`.
#[inline]
pub fn reflect101(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Separable convolution with `taps` (odd length, centred), reflect-101
/// borders, each pass multiplied by `gain`.
fn convolve_separable(src: &Grid, taps: &[f32], gain: f32) -> Grid {
    let (w, h) = src.dims();
    let r = (taps.len() / 2) as isize;
    let mut tmp = Grid::zeros(w, h);
    for y in 0..h {
        let row = src.row(y);
        for x in 0..w {
            let mut acc = 0.0f32;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * row[reflect101(x as isize + k as isize - r, w)];
            }
            tmp.set(x, y, acc * gain);
        }
    }
    let mut out = Grid::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f32;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * tmp.get(x, reflect101(y as isize + k as isize - r, h));
            }
            out.set(x, y, acc * gain);
        }
    }
    out
}

pub fn blur(src: &Grid, kernel: Kernel) -> Grid {
    convolve_separable(src, kernel.taps(), 1.0)
}

/// Blur then keep even rows and columns.
pub fn reduce(src: &Grid, kernel: Kernel) -> Grid {
    let blurred = blur(src, kernel);
    let (w, h) = src.dims();
    Grid::from_fn(w.div_ceil(2), h.div_ceil(2), |x, y| blurred.get(2 * x, 2 * y))
}

/// Zero-insert `src` into a `width`×`height` grid and blur with the kernel
/// scaled by 2 per axis. `width` must be `2w - 1` or `2w` (same for height).
pub fn expand(src: &Grid, width: usize, height: usize, kernel: Kernel) -> Result<Grid> {
    let (w, h) = src.dims();
    if width.div_ceil(2) != w || height.div_ceil(2) != h {
        return Err(Error::Structure("expand target is not a valid parent of the source"));
    }
    let mut zeros = Grid::zeros(width, height);
    for y in 0..h {
        for x in 0..w {
            zeros.set(2 * x, 2 * y, src.get(x, y));
        }
    }
    Ok(convolve_separable(&zeros, kernel.taps(), 2.0))
}

/// Layer dimensions for a `width`×`height` source and `levels` layers,
/// finest first.
pub fn level_dims(width: usize, height: usize, levels: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(levels);
    let (mut w, mut h) = (width, height);
    for _ in 0..levels {
        dims.push((w, h));
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    dims
}

fn check_levels(width: usize, height: usize, levels: usize) -> Result<()> {
    if levels < 2 {
        return Err(Error::Parameter("a pyramid needs at least 2 levels"));
    }
    let need = 1usize.checked_shl((levels - 1) as u32).unwrap_or(usize::MAX);
    if width < need || height < need {
        return Err(Error::Dimensions("image is too small for the requested number of levels"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPyramid {
    layers: Vec<Grid>,
}

impl GaussianPyramid {
    pub fn levels(&self) -> usize {
        self.layers.len()
    }

    /// Layers finest first (index 0 is layer 1).
    pub fn layers(&self) -> &[Grid] {
        &self.layers
    }

    /// 1-based layer access.
    pub fn layer(&self, k: usize) -> &Grid {
        &self.layers[k - 1]
    }

    pub fn into_layers(self) -> Vec<Grid> {
        self.layers
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPyramid {
    layers: Vec<Grid>,
    kernel: Kernel,
}

impl LaplacianPyramid {
    /// Assembles a pyramid from raw layers, checking the dimension chain.
    pub fn from_layers(layers: Vec<Grid>, kernel: Kernel) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Structure("a pyramid needs at least 2 layers"));
        }
        for pair in layers.windows(2) {
            let (w, h) = pair[0].dims();
            if pair[1].dims() != (w.div_ceil(2), h.div_ceil(2)) {
                return Err(Error::Structure("layer dimensions do not halve down the pyramid"));
            }
        }
        Ok(Self { layers, kernel })
    }

    pub fn levels(&self) -> usize {
        self.layers.len()
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn layers(&self) -> &[Grid] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> &Grid {
        &self.layers[k - 1]
    }

    pub fn into_layers(self) -> Vec<Grid> {
        self.layers
    }
}

pub fn gaussian_pyramid(image: &Grid, levels: usize, kernel: Kernel) -> Result<GaussianPyramid> {
    check_levels(image.width(), image.height(), levels)?;
    let mut layers = Vec::with_capacity(levels);
    layers.push(image.clone());
    for _ in 1..levels {
        let next = reduce(layers.last().expect("non-empty"), kernel);
        layers.push(next);
    }
    Ok(GaussianPyramid { layers })
}

/// Band-pass layers `G_k - expand(G_{k+1})` for k < K, plus `G_K`.
pub fn laplacian_from_gaussian(gaussian: &GaussianPyramid, kernel: Kernel) -> Result<LaplacianPyramid> {
    let g = gaussian.layers();
    let mut layers = Vec::with_capacity(g.len());
    for k in 0..g.len() - 1 {
        let (w, h) = g[k].dims();
        layers.push(g[k].sub(&expand(&g[k + 1], w, h, kernel)?)?);
    }
    layers.push(g[g.len() - 1].clone());
    Ok(LaplacianPyramid { layers, kernel })
}

pub fn laplacian_pyramid(image: &Grid, levels: usize, kernel: Kernel) -> Result<LaplacianPyramid> {
    laplacian_from_gaussian(&gaussian_pyramid(image, levels, kernel)?, kernel)
}

/// Reconstruction stopped at 1-based layer `to_layer`, unclamped.
pub fn partial_collapse(pyr: &LaplacianPyramid, to_layer: usize) -> Result<Grid> {
    let levels = pyr.levels();
    if to_layer == 0 || to_layer > levels {
        return Err(Error::Parameter("partial collapse layer is out of range"));
    }
    let layers = pyr.layers();
    let mut img = layers[levels - 1].clone();
    for k in (to_layer - 1..levels - 1).rev() {
        let (w, h) = layers[k].dims();
        img = expand(&img, w, h, pyr.kernel)?.add(&layers[k])?;
    }
    Ok(img)
}

/// Full reconstruction without clamping.
pub fn collapse_unclamped(pyr: &LaplacianPyramid) -> Result<Grid> {
    partial_collapse(pyr, 1)
}

/// Full reconstruction, clamped to [0, 1].
pub fn collapse(pyr: &LaplacianPyramid) -> Result<Grid> {
    Ok(collapse_unclamped(pyr)?.clamp01())
}

//! Detection of anatomic horizontal boundaries, with rejection of the
//! repeated echo lines that reverberation leaves underneath a reflector.
//!
//! The pipeline is: a long-range vertical gradient, thresholding and
//! 8-connected clustering, removal of small clusters and of clusters that
//! have another cluster shortly above them, and finally intensity-guided
//! region growing from the surviving cluster pixels.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{BoundaryMask, Grid, Image, Mask};
use crate::{Error, Result};

/// Tolerance, in 8-bit units, applied to the intensity comparisons of the
/// growth step so that inputs quantized to 1/255 compare like integers.
const LEVEL_EPS: f64 = 1e-6;

/// Which intensity differences count as a horizontal edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GradientPolarity {
    /// `max_j |I(x, y) - I(x, y + j)|`.
    Absolute,
    /// `max_j max(0, I(x, y) - I(x, y + j))`: only pixels brighter than
    /// something below them respond, so the support sits on the structure
    /// itself and not on the dark band above it.
    #[default]
    BrightAbove,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct BoundaryParams {
    /// Gradient look-ahead in rows.
    pub alpha: usize,
    /// Rows above a cluster that must be free of other clusters.
    pub beta: usize,
    /// Smallest cluster kept, in pixels.
    pub min_size: usize,
    /// Gradient binarization level, in [0, 1] intensity units.
    pub grad_threshold: f64,
    /// Seed/growth brightness floor, 8-bit units.
    pub t1: f64,
    /// Largest step between neighbours during growth, 8-bit units.
    pub t2: f64,
    pub median_denoise: bool,
    pub polarity: GradientPolarity,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self {
            alpha: 15,
            beta: 20,
            min_size: 50,
            grad_threshold: 50.0 / 255.0,
            t1: 30.0,
            t2: 2.0,
            median_denoise: true,
            polarity: GradientPolarity::BrightAbove,
        }
    }
}

impl BoundaryParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 {
            return Err(Error::Parameter("boundary.alpha must be at least 1"));
        }
        if self.min_size == 0 {
            return Err(Error::Parameter("boundary.min_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.grad_threshold) {
            return Err(Error::Parameter("boundary.grad_threshold must lie in [0, 1]"));
        }
        if !(self.t1.is_finite() && self.t2.is_finite() && self.t2 >= 0.0) {
            return Err(Error::Parameter("boundary thresholds must be finite and t2 non-negative"));
        }
        Ok(())
    }
}

/// Per-pixel long-range vertical gradient, non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap(pub Grid);

impl GradientMap {
    pub fn grid(&self) -> &Grid {
        &self.0
    }
}

/// `max_{j=1..alpha} |I(x,y) - I(x,y+j)|`, with `j` truncated at the bottom
/// edge. The bottom row is 0.
pub fn vertical_gradient(image: &Image, alpha: usize) -> GradientMap {
    vertical_gradient_with(image, alpha, GradientPolarity::Absolute)
}

pub fn vertical_gradient_with(image: &Image, alpha: usize, polarity: GradientPolarity) -> GradientMap {
    let (w, h) = image.dims();
    let mut out = Grid::zeros(w, h);
    for y in 0..h {
        let reach = alpha.min(h - 1 - y);
        for x in 0..w {
            let v = image.get(x, y);
            let mut best = 0.0f32;
            for j in 1..=reach {
                let d = match polarity {
                    GradientPolarity::Absolute => (v - image.get(x, y + j)).abs(),
                    GradientPolarity::BrightAbove => (v - image.get(x, y + j)).max(0.0),
                };
                best = best.max(d);
            }
            out.set(x, y, best);
        }
    }
    GradientMap(out)
}

/// 3×3 median with replicated borders.
pub fn median3x3(src: &Grid) -> Grid {
    let (w, h) = src.dims();
    Grid::from_fn(w, h, |x, y| {
        let mut win = [0.0f32; 9];
        let mut n = 0;
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                win[n] = src.get(xx, yy);
                n += 1;
            }
        }
        win.sort_unstable_by(|a, b| a.total_cmp(b));
        win[4]
    })
}

/// An 8-connected set of pixels, listed in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: usize,
    pub pixels: Vec<(usize, usize)>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSet {
    pub width: usize,
    pub height: usize,
    pub clusters: Vec<Cluster>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Union of all cluster pixels.
    pub fn to_mask(&self) -> Mask {
        let mut m = Mask::filled(self.width, self.height, false);
        for c in &self.clusters {
            for &(x, y) in &c.pixels {
                m.set(x, y, true);
            }
        }
        m
    }
}

const NEIGHBOURS_8: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

#[inline]
fn neighbour(x: usize, y: usize, d: (isize, isize), w: usize, h: usize) -> Option<(usize, usize)> {
    let nx = x as isize + d.0;
    let ny = y as isize + d.1;
    (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then_some((nx as usize, ny as usize))
}

/// 8-connected components of `mask`, discovered in row-major order.
pub fn label_components(mask: &Mask) -> Vec<Cluster> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut clusters = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || seen[y * w + x] {
                continue;
            }
            let mut pixels = Vec::new();
            seen[y * w + x] = true;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                pixels.push((cx, cy));
                for d in NEIGHBOURS_8 {
                    if let Some((nx, ny)) = neighbour(cx, cy, d, w, h) {
                        if mask.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            pixels.sort_unstable_by_key(|&(px, py)| (py, px));
            clusters.push(Cluster { id: clusters.len(), pixels });
        }
    }
    clusters
}

/// Optional median denoise, binarization at `grad_threshold` (strictly
/// greater passes), then 8-connected labeling.
pub fn extract_clusters(grad: &GradientMap, grad_threshold: f64, median_denoise: bool) -> ClusterSet {
    let g = if median_denoise { median3x3(grad.grid()) } else { grad.grid().clone() };
    let mask = Mask::from_fn(g.width(), g.height(), |x, y| g.get(x, y) as f64 > grad_threshold);
    ClusterSet { width: g.width(), height: g.height(), clusters: label_components(&mask) }
}

/// Drops clusters smaller than `min_size`, then drops every remaining
/// cluster that has a pixel of another remaining cluster within `beta` rows
/// directly above one of its pixels.
pub fn filter_clusters(set: &ClusterSet, min_size: usize, beta: usize) -> ClusterSet {
    let big: Vec<&Cluster> = set.clusters.iter().filter(|c| c.len() >= min_size).collect();
    let (w, h) = (set.width, set.height);
    let mut owner: Vec<Option<usize>> = vec![None; w * h];
    for (i, c) in big.iter().enumerate() {
        for &(x, y) in &c.pixels {
            owner[y * w + x] = Some(i);
        }
    }
    let clusters = big
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            !c.pixels.iter().any(|&(x, y)| {
                (y.saturating_sub(beta)..y).any(|yy| matches!(owner[yy * w + x], Some(o) if o != *i))
            })
        })
        .map(|(_, c)| (*c).clone())
        .collect();
    ClusterSet { width: w, height: h, clusters }
}

/// Stack-based region growing from the cluster pixels.
///
/// Cluster pixels brighter than `t1` seed the mask in row-major order; a
/// popped pixel adds each unmarked 8-neighbour brighter than `t1` whose
/// intensity differs from it by less than `t2`. Both thresholds are in 8-bit
/// units.
pub fn refine_boundaries(image: &Image, clusters: &ClusterSet, t1: f64, t2: f64) -> Result<BoundaryMask> {
    let (w, h) = image.dims();
    if (clusters.width, clusters.height) != (w, h) {
        return Err(Error::Dimensions("clusters do not match the image"));
    }
    let level = |x: usize, y: usize| image.get(x, y) as f64 * 255.0;
    let bright = |x: usize, y: usize| level(x, y) > t1 + LEVEL_EPS;
    let seeds = clusters.to_mask();
    let mut out = Mask::filled(w, h, false);
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !seeds.get(x, y) || out.get(x, y) || !bright(x, y) {
                continue;
            }
            out.set(x, y, true);
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                let here = level(cx, cy);
                for d in NEIGHBOURS_8 {
                    if let Some((nx, ny)) = neighbour(cx, cy, d, w, h) {
                        if !out.get(nx, ny) && bright(nx, ny) && (here - level(nx, ny)).abs() < t2 - LEVEL_EPS {
                            out.set(nx, ny, true);
                            stack.push((nx, ny));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs the full detector and also returns the intermediate stages.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDetection {
    pub gradient: GradientMap,
    pub clusters: ClusterSet,
    pub kept: ClusterSet,
    pub mask: BoundaryMask,
}

pub fn detect_boundaries_traced(image: &Image, params: &BoundaryParams) -> Result<BoundaryDetection> {
    params.validate()?;
    let gradient = vertical_gradient_with(image, params.alpha, params.polarity);
    let clusters = extract_clusters(&gradient, params.grad_threshold, params.median_denoise);
    let kept = filter_clusters(&clusters, params.min_size, params.beta);
    let mask = refine_boundaries(image, &kept, params.t1, params.t2)?;
    Ok(BoundaryDetection { gradient, clusters, kept, mask })
}

pub fn detect_boundaries(image: &Image, params: &BoundaryParams) -> Result<BoundaryMask> {
    Ok(detect_boundaries_traced(image, params)?.mask)
}

//! Rigid placement of probe-frame views into the common compounding frame.

use crate::confidence::ConfidenceMap;
use crate::grid::{BoundaryMask, Grid, Image, Mask, ValidityMask};
use crate::math;
use crate::{Error, Result};

/// Coordinates closer than this to an integer are treated as lying on it, so
/// that exact rotations by multiples of 90 degrees stay exact.
const SNAP_EPS: f64 = 1e-9;

/// Rotation followed by translation, mapping native probe-frame pixel
/// coordinates into the common frame: `p_common = R(rotation) * p_native + (dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RigidTransform2D {
    /// Radians. Positive angles turn +x towards +y (clockwise on screen).
    pub rotation: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Default for RigidTransform2D {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform2D {
    pub const IDENTITY: Self = Self { rotation: 0.0, dx: 0.0, dy: 0.0 };

    pub fn new(rotation: f64, dx: f64, dy: f64) -> Self {
        Self { rotation, dx, dy }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { rotation: 0.0, dx, dy }
    }

    /// Rotation by `rotation` about the point `(cx, cy)`.
    pub fn about_point(rotation: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = (math::sin(rotation), math::cos(rotation));
        Self { rotation, dx: cx - (c * cx - s * cy), dy: cy - (s * cx + c * cy) }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = (math::sin(self.rotation), math::cos(self.rotation));
        (c * x - s * y + self.dx, s * x + c * y + self.dy)
    }

    pub fn apply_inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = (math::sin(self.rotation), math::cos(self.rotation));
        let (u, v) = (x - self.dx, y - self.dy);
        (c * u + s * v, -s * u + c * v)
    }

    pub fn inverse(&self) -> Self {
        let (dx, dy) = self.apply_inverse(0.0, 0.0);
        Self { rotation: -self.rotation, dx, dy }
    }

    /// The same placement after mirroring both the native frame (width
    /// `native_width`) and the common frame (width `common_width`) left-right.
    pub fn mirrored(&self, native_width: usize, common_width: usize) -> Self {
        let (s, c) = (math::sin(self.rotation), math::cos(self.rotation));
        let wn = native_width as f64 - 1.0;
        let wc = common_width as f64 - 1.0;
        Self { rotation: -self.rotation, dx: wc - c * wn - self.dx, dy: self.dy + s * wn }
    }
}

/// One probe view: an image in its native frame plus its placement and
/// whichever per-pixel maps are already known.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewInput {
    pub image: Image,
    pub to_common: RigidTransform2D,
    pub intensity_confidence: Option<ConfidenceMap>,
    pub structural_confidence: Option<ConfidenceMap>,
    pub boundary_mask: Option<BoundaryMask>,
}

impl ViewInput {
    pub fn new(image: Image, to_common: RigidTransform2D) -> Self {
        Self { image, to_common, intensity_confidence: None, structural_confidence: None, boundary_mask: None }
    }

    /// Checks that every attached map matches the image dimensions.
    pub fn validate(&self) -> Result<()> {
        let dims = self.image.dims();
        let conf_ok = |c: &Option<ConfidenceMap>| c.as_ref().is_none_or(|c| c.dims() == dims);
        if !conf_ok(&self.intensity_confidence) || !conf_ok(&self.structural_confidence) {
            return Err(Error::Dimensions("confidence map does not match its image"));
        }
        if self.boundary_mask.as_ref().is_some_and(|m| m.dims() != dims) {
            return Err(Error::Dimensions("boundary mask does not match its image"));
        }
        Ok(())
    }
}

/// A view resampled into the common frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedView {
    pub image: Image,
    pub validity: ValidityMask,
    pub intensity_confidence: Option<Grid>,
    pub structural_confidence: Option<Grid>,
    pub boundary_mask: Option<BoundaryMask>,
}

/// Where a common-frame pixel lands in the source grid.
#[derive(Debug, Clone, Copy)]
struct SourceSample {
    x0: usize,
    y0: usize,
    fx: f64,
    fy: f64,
}

fn snap(v: f64) -> f64 {
    let r = math::round(v);
    if (v - r).abs() < SNAP_EPS {
        r
    } else {
        v
    }
}

/// Locates `(sx, sy)` in a `w`×`h` source. `None` unless every neighbour that
/// carries interpolation weight is inside the source.
fn locate(sx: f64, sy: f64, w: usize, h: usize) -> Option<SourceSample> {
    let (sx, sy) = (snap(sx), snap(sy));
    let (fx0, fy0) = (math::floor(sx), math::floor(sy));
    if fx0 < 0.0 || fy0 < 0.0 || fx0 >= w as f64 || fy0 >= h as f64 {
        return None;
    }
    let (x0, y0) = (fx0 as usize, fy0 as usize);
    let (fx, fy) = (sx - fx0, sy - fy0);
    if (fx > 0.0 && x0 + 1 >= w) || (fy > 0.0 && y0 + 1 >= h) {
        return None;
    }
    Some(SourceSample { x0, y0, fx, fy })
}

fn bilinear(grid: &Grid, s: SourceSample) -> f32 {
    let SourceSample { x0, y0, fx, fy } = s;
    let at = |x: usize, y: usize| grid.get(x, y) as f64;
    let mut top = at(x0, y0);
    if fx > 0.0 {
        top = top * (1.0 - fx) + at(x0 + 1, y0) * fx;
    }
    if fy > 0.0 {
        let mut bottom = at(x0, y0 + 1);
        if fx > 0.0 {
            bottom = bottom * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
        }
        top = top * (1.0 - fy) + bottom * fy;
    }
    top as f32
}

fn nearest(mask: &Mask, s: SourceSample) -> bool {
    let x = if s.fx >= 0.5 { s.x0 + 1 } else { s.x0 };
    let y = if s.fy >= 0.5 { s.y0 + 1 } else { s.y0 };
    mask.get(x, y)
}

fn sample_map(
    out_width: usize,
    out_height: usize,
    samples: &[Option<SourceSample>],
    f: impl Fn(SourceSample) -> f32,
) -> Grid {
    let mut out = Grid::zeros(out_width, out_height);
    for (dst, s) in out.data_mut().iter_mut().zip(samples) {
        if let Some(s) = s {
            *dst = f(*s);
        }
    }
    out
}

/// Warps the view image into an `out_width`×`out_height` common frame by
/// inverse mapping with bilinear interpolation.
pub fn warp_to_common(view: &ViewInput, out_width: usize, out_height: usize) -> Result<(Image, ValidityMask)> {
    let warped = warp_view(view, out_width, out_height)?;
    Ok((warped.image, warped.validity))
}

/// Warps the image and every attached map. Confidence maps are interpolated
/// bilinearly, the boundary mask by nearest neighbour. Invalid pixels hold 0.
pub fn warp_view(view: &ViewInput, out_width: usize, out_height: usize) -> Result<WarpedView> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::Dimensions("output dimensions must be positive"));
    }
    view.validate()?;
    let (w, h) = view.image.dims();
    let samples: alloc::vec::Vec<Option<SourceSample>> = (0..out_height)
        .flat_map(|y| (0..out_width).map(move |x| (x, y)))
        .map(|(x, y)| {
            let (sx, sy) = view.to_common.apply_inverse(x as f64, y as f64);
            locate(sx, sy, w, h)
        })
        .collect();

    let validity = Mask::new(out_width, out_height, samples.iter().map(Option::is_some).collect())?;
    let image_grid = sample_map(out_width, out_height, &samples, |s| bilinear(view.image.grid(), s));
    let warp_conf = |c: &Option<ConfidenceMap>| {
        c.as_ref().map(|c| sample_map(out_width, out_height, &samples, |s| bilinear(c.grid(), s)))
    };
    let boundary_mask = view.boundary_mask.as_ref().map(|m| {
        Mask::from_fn(out_width, out_height, |x, y| samples[y * out_width + x].is_some_and(|s| nearest(m, s)))
    });

    Ok(WarpedView {
        image: Image::from_grid_clamped(&image_grid),
        validity,
        intensity_confidence: warp_conf(&view.intensity_confidence),
        structural_confidence: warp_conf(&view.structural_confidence),
        boundary_mask,
    })
}

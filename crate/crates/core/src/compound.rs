//! Fusion of co-registered views.
//!
//! Three per-pixel baselines (mean, maximum, intensity-confidence weighted
//! mean) and the multi-scale method. The latter builds, per view, Gaussian
//! pyramids of the image, of both confidence maps, of the boundary mask and
//! of the validity mask, plus a Laplacian pyramid of the image. At each
//! layer `k` a source view is chosen per pixel:
//!
//! * if the structural confidences of the valid views spread by less than
//!   `gamma`, the view with the largest local contrast
//!   `Σ_{N(i,j)} |G_k(a,b) - G_k(i,j)|` over the 8-neighbourhood;
//! * otherwise the view with the largest structural confidence.
//!
//! The chosen view's band coefficient is blended with the
//! intensity-confidence weighted mean of all bands,
//! `φ(k) L_sel + (1 - φ(k)) La_k`, where `φ` peaks at the middle layer. While
//! collapsing, the reconstruction at `enhance_layer` is raised to the
//! boundary-mask weighted mean of the views' Gaussian layers wherever that is
//! brighter.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::boundary::{detect_boundaries, BoundaryParams};
use crate::confidence::{attenuation_intensity_confidence, uniform_structural_confidence, AttenuationParams};
use crate::grid::{Grid, Image, Mask};
use crate::math;
use crate::pyramid::{self, expand, GaussianPyramid, Kernel, LaplacianPyramid};
use crate::warp::{warp_view, ViewInput, WarpedView};
use crate::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.05;
pub const DEFAULT_ENHANCE_LAYER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    Average,
    Maximum,
    Ubf,
    Pyramid,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Average, Method::Maximum, Method::Ubf, Method::Pyramid];

    pub fn name(self) -> &'static str {
        match self {
            Method::Average => "average",
            Method::Maximum => "maximum",
            Method::Ubf => "ubf",
            Method::Pyramid => "pyramid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PyramidParams {
    pub levels: usize,
    pub kernel: Kernel,
    /// Structural-confidence spread below which contrast decides.
    pub gamma: f64,
    /// 1-based layer whose reconstruction receives boundary enhancement.
    pub enhance_layer: usize,
    pub enhancement: bool,
    /// Per-layer replacement for `φ(k)`, finest first.
    pub phi_overrides: Option<Vec<f64>>,
}

impl Default for PyramidParams {
    fn default() -> Self {
        Self {
            levels: pyramid::DEFAULT_LEVELS,
            kernel: Kernel::default(),
            gamma: DEFAULT_GAMMA,
            enhance_layer: DEFAULT_ENHANCE_LAYER,
            enhancement: true,
            phi_overrides: None,
        }
    }
}

impl PyramidParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Parameter("pyramid.levels must be at least 2"));
        }
        if !(1..=self.levels).contains(&self.enhance_layer) {
            return Err(Error::Parameter("compound.enhance_layer must lie in 1..=levels"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Parameter("compound.gamma must lie in [0, 1]"));
        }
        if let Some(o) = &self.phi_overrides {
            if o.len() != self.levels {
                return Err(Error::Parameter("compound.phi_overrides needs one weight per layer"));
            }
            if o.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::Parameter("compound.phi_overrides weights must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Contrast-selection weight applied at 1-based layer `k`.
    pub fn weight(&self, k: usize) -> Result<f64> {
        match &self.phi_overrides {
            Some(o) => Ok(o[k - 1]),
            None => phi(k, self.levels),
        }
    }
}

/// Layer weight of contrast selection,
/// `exp(-(2k - K - 1)² / (0.32 (K - 1)²)) / (0.4 √(2π))`, clamped to 1.
pub fn phi(k: usize, levels: usize) -> Result<f64> {
    if levels < 2 {
        return Err(Error::Degenerate("phi needs at least two layers"));
    }
    if !(1..=levels).contains(&k) {
        return Err(Error::Parameter("layer index out of range"));
    }
    let centred = (2 * k) as f64 - levels as f64 - 1.0;
    let spread = 0.16 * (levels as f64 - 1.0) * (levels as f64 - 1.0);
    let v = math::exp(-0.5 * centred * centred / spread) / (0.4 * math::sqrt(2.0 * PI));
    Ok(v.min(1.0))
}

// ── Baselines ───────────────────────────────────────────────────────────────

fn check_views(views: &[WarpedView]) -> Result<(usize, usize)> {
    let first = views.first().ok_or(Error::Parameter("at least one view is required"))?;
    let dims = first.image.dims();
    if views.iter().any(|v| v.image.dims() != dims || v.validity.dims() != dims) {
        return Err(Error::Dimensions("views do not share the common frame"));
    }
    Ok(dims)
}

fn per_pixel(views: &[WarpedView], f: impl Fn(&[(f32, f32)]) -> f32) -> Result<Image> {
    let (w, h) = check_views(views)?;
    let mut out = Grid::zeros(w, h);
    let mut buf: Vec<(f32, f32)> = Vec::with_capacity(views.len());
    for i in 0..w * h {
        buf.clear();
        for v in views {
            if v.validity.data()[i] {
                let weight = v.intensity_confidence.as_ref().map_or(1.0, |c| c.data()[i]);
                buf.push((v.image.data()[i], weight));
            }
        }
        if !buf.is_empty() {
            out.data_mut()[i] = f(&buf);
        }
    }
    Ok(Image::from_grid_clamped(&out))
}

fn mean(values: &[(f32, f32)]) -> f32 {
    (values.iter().map(|v| v.0 as f64).sum::<f64>() / values.len() as f64) as f32
}

/// Mean over the views valid at each pixel; 0 where none is.
pub fn compound_average(views: &[WarpedView]) -> Result<Image> {
    per_pixel(views, mean)
}

/// Maximum over the views valid at each pixel.
pub fn compound_maximum(views: &[WarpedView]) -> Result<Image> {
    per_pixel(views, |vals| vals.iter().map(|v| v.0).fold(f32::NEG_INFINITY, f32::max))
}

/// Intensity-confidence weighted mean over the valid views, falling back to
/// the plain mean where all weights vanish.
pub fn compound_ubf(views: &[WarpedView]) -> Result<Image> {
    if views.iter().any(|v| v.intensity_confidence.is_none()) {
        return Err(Error::Parameter("confidence-weighted fusion needs an intensity confidence map per view"));
    }
    per_pixel(views, |vals| {
        let wsum: f64 = vals.iter().map(|v| v.1 as f64).sum();
        if wsum > 0.0 {
            (vals.iter().map(|v| v.0 as f64 * v.1 as f64).sum::<f64>() / wsum) as f32
        } else {
            mean(vals)
        }
    })
}

// ── Per-layer operations ────────────────────────────────────────────────────

/// Per-pixel source view at one layer; `None` where no view is valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Option<usize>>,
}

impl SelectionMap {
    pub fn get(&self, x: usize, y: usize) -> Option<usize> {
        self.data[y * self.width + x]
    }

    /// Picks, per pixel, the coefficient of the selected view.
    pub fn apply(&self, layers: &[&Grid]) -> Grid {
        Grid::from_fn(self.width, self.height, |x, y| self.get(x, y).map_or(0.0, |m| layers[m].get(x, y)))
    }

    /// Selected view index as a grid (-1 where none), for inspection.
    pub fn to_grid(&self) -> Grid {
        Grid::from_fn(self.width, self.height, |x, y| self.get(x, y).map_or(-1.0, |m| m as f32))
    }
}

fn check_layers(grids: &[&Grid], masks: &[&Mask]) -> Result<(usize, usize)> {
    let first = grids.first().ok_or(Error::Parameter("at least one view is required"))?;
    let dims = first.dims();
    if grids.iter().any(|g| g.dims() != dims) || masks.iter().any(|m| m.dims() != dims) {
        return Err(Error::Dimensions("layers differ in size"));
    }
    Ok(dims)
}

/// Sum of absolute differences to the 8 neighbours inside the grid.
pub fn local_contrast(g: &Grid, x: usize, y: usize) -> f64 {
    let (w, h) = g.dims();
    let c = g.get(x, y) as f64;
    let mut sum = 0.0;
    for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
        for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
            if (xx, yy) != (x, y) {
                sum += (g.get(xx, yy) as f64 - c).abs();
            }
        }
    }
    sum
}

/// Chooses a view per pixel: the highest local contrast of the Gaussian
/// layer when structural confidences agree within `gamma`, otherwise the
/// highest structural confidence. Ties go to the lowest index.
pub fn select_view_layer(gi: &[&Grid], gs: &[&Grid], validity: &[&Mask], gamma: f64) -> Result<SelectionMap> {
    if gi.len() != gs.len() || gi.len() != validity.len() {
        return Err(Error::Structure("per-view layer lists differ in length"));
    }
    let (w, h) = check_layers(&[gi, gs].concat(), validity)?;
    let mut data = vec![None; w * h];
    for y in 0..h {
        for x in 0..w {
            let valid: Vec<usize> = (0..gi.len()).filter(|&m| validity[m].get(x, y)).collect();
            let Some(&first) = valid.first() else { continue };
            let conf = |m: usize| gs[m].get(x, y) as f64;
            let (lo, hi) = valid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| (lo.min(conf(m)), hi.max(conf(m))));
            let score: &dyn Fn(usize) -> f64 = if hi - lo < gamma { &|m| local_contrast(gi[m], x, y) } else { &conf };
            let mut best = first;
            let mut best_score = score(first);
            for &m in &valid[1..] {
                let s = score(m);
                if s > best_score {
                    best = m;
                    best_score = s;
                }
            }
            data[y * w + x] = Some(best);
        }
    }
    Ok(SelectionMap { width: w, height: h, data })
}

/// `Σ GC·L / Σ GC` over valid views; plain mean of the valid views where the
/// weights sum to zero; 0 where no view is valid.
pub fn weighted_average_layer(l: &[&Grid], gc: &[&Grid], validity: &[&Mask]) -> Result<Grid> {
    if l.len() != gc.len() || l.len() != validity.len() {
        return Err(Error::Structure("per-view layer lists differ in length"));
    }
    let (w, h) = check_layers(&[l, gc].concat(), validity)?;
    Ok(Grid::from_fn(w, h, |x, y| {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        let mut plain = 0.0f64;
        let mut n = 0usize;
        for m in 0..l.len() {
            if !validity[m].get(x, y) {
                continue;
            }
            let (c, v) = (gc[m].get(x, y) as f64, l[m].get(x, y) as f64);
            num += c * v;
            den += c;
            plain += v;
            n += 1;
        }
        if n == 0 {
            0.0
        } else if den > 0.0 {
            (num / den) as f32
        } else {
            (plain / n as f64) as f32
        }
    }))
}

/// `weight · selected + (1 - weight) · averaged`.
pub fn blend_layer(selected: &Grid, averaged: &Grid, weight: f64) -> Result<Grid> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::Parameter("blend weight must lie in [0, 1]"));
    }
    let rest = 1.0 - weight;
    selected.zip(averaged, |s, a| (weight * s as f64 + rest * a as f64) as f32)
}

/// Where any valid view has boundary weight, raises `partial` to the
/// boundary-weighted mean of the views' Gaussian layers if that is larger.
pub fn enhance_boundaries(partial: &Grid, gb: &[&Grid], gi: &[&Grid], validity: &[&Mask]) -> Result<Grid> {
    if gb.len() != gi.len() || gb.len() != validity.len() {
        return Err(Error::Structure("per-view layer lists differ in length"));
    }
    let (w, h) = check_layers(&[&[partial][..], gb, gi].concat(), validity)?;
    Ok(Grid::from_fn(w, h, |x, y| {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for m in 0..gb.len() {
            if validity[m].get(x, y) {
                let b = gb[m].get(x, y) as f64;
                num += b * gi[m].get(x, y) as f64;
                den += b;
            }
        }
        let p = partial.get(x, y);
        if den > 0.0 {
            p.max((num / den) as f32)
        } else {
            p
        }
    }))
}

// ── Pipeline ────────────────────────────────────────────────────────────────

/// How missing per-view maps are filled in before warping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrepareSettings {
    pub attenuation: AttenuationParams,
    pub boundary: BoundaryParams,
}

/// Fills in absent maps in the native frame (attenuation intensity
/// confidence, uniform structural confidence, detected boundaries) and warps
/// everything into the common frame.
pub fn prepare_view(view: &ViewInput, width: usize, height: usize, settings: &PrepareSettings) -> Result<WarpedView> {
    view.validate()?;
    let mut full = view.clone();
    if full.intensity_confidence.is_none() {
        full.intensity_confidence = Some(attenuation_intensity_confidence(&view.image, settings.attenuation)?);
    }
    if full.structural_confidence.is_none() {
        full.structural_confidence = Some(uniform_structural_confidence(view.image.width(), view.image.height())?);
    }
    if full.boundary_mask.is_none() {
        full.boundary_mask = Some(detect_boundaries(&view.image, &settings.boundary)?);
    }
    warp_view(&full, width, height)
}

/// All pyramids of one warped view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPyramids {
    pub image: GaussianPyramid,
    pub laplacian: LaplacianPyramid,
    pub intensity: GaussianPyramid,
    pub structural: GaussianPyramid,
    pub boundary: GaussianPyramid,
    /// Validity per layer: the smoothed validity exceeds one half.
    pub validity: Vec<Mask>,
}

impl ViewPyramids {
    pub fn build(view: &WarpedView, levels: usize, kernel: Kernel) -> Result<Self> {
        let (w, h) = view.image.dims();
        let require = |g: &Option<Grid>, what: &'static str| g.clone().ok_or(Error::Parameter(what));
        let gc = require(&view.intensity_confidence, "view is missing its intensity confidence")?;
        let gs = require(&view.structural_confidence, "view is missing its structural confidence")?;
        let gb = view.boundary_mask.as_ref().map_or_else(|| Grid::zeros(w, h), Mask::to_grid);
        let image = pyramid::gaussian_pyramid(view.image.grid(), levels, kernel)?;
        let laplacian = pyramid::laplacian_from_gaussian(&image, kernel)?;
        let valid = pyramid::gaussian_pyramid(&view.validity.to_grid(), levels, kernel)?;
        Ok(Self {
            laplacian,
            image,
            intensity: pyramid::gaussian_pyramid(&gc, levels, kernel)?,
            structural: pyramid::gaussian_pyramid(&gs, levels, kernel)?,
            boundary: pyramid::gaussian_pyramid(&gb, levels, kernel)?,
            validity: valid.layers().iter().map(|g| Mask::above(g, 0.5)).collect(),
        })
    }
}

/// Intermediate products of the multi-scale fusion, finest layer first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FusionTrace {
    pub selections: Vec<SelectionMap>,
    pub averaged: Vec<Grid>,
    pub blended: Vec<Grid>,
    pub before_enhancement: Option<Grid>,
    pub after_enhancement: Option<Grid>,
}

/// Multi-scale fusion of prebuilt per-view pyramids. `coverage` marks the
/// full-resolution pixels observed by at least one view; everything else is
/// set to 0.
pub fn fuse_pyramids(views: &[ViewPyramids], params: &PyramidParams, coverage: &Mask) -> Result<(Image, FusionTrace)> {
    params.validate()?;
    let first = views.first().ok_or(Error::Parameter("at least one view is required"))?;
    let levels = params.levels;
    if views.iter().any(|v| v.laplacian.levels() != levels || v.validity.len() != levels) {
        return Err(Error::Structure("view pyramids do not have the configured depth"));
    }
    if views.iter().any(|v| v.image.layer(1).dims() != first.image.layer(1).dims()) {
        return Err(Error::Dimensions("views do not share the common frame"));
    }
    if coverage.dims() != first.image.layer(1).dims() {
        return Err(Error::Dimensions("coverage mask does not match the views"));
    }

    let mut trace = FusionTrace::default();
    let mut fused_layers = Vec::with_capacity(levels);
    for k in 1..=levels {
        let gi: Vec<&Grid> = views.iter().map(|v| v.image.layer(k)).collect();
        let gs: Vec<&Grid> = views.iter().map(|v| v.structural.layer(k)).collect();
        let gc: Vec<&Grid> = views.iter().map(|v| v.intensity.layer(k)).collect();
        let lk: Vec<&Grid> = views.iter().map(|v| v.laplacian.layer(k)).collect();
        let valid: Vec<&Mask> = views.iter().map(|v| &v.validity[k - 1]).collect();

        let selection = select_view_layer(&gi, &gs, &valid, params.gamma)?;
        let averaged = weighted_average_layer(&lk, &gc, &valid)?;
        let blended = blend_layer(&selection.apply(&lk), &averaged, params.weight(k)?)?;
        trace.selections.push(selection);
        trace.averaged.push(averaged);
        fused_layers.push(blended);
    }
    trace.blended = fused_layers.clone();

    let enhance = |img: &Grid, k: usize, trace: &mut FusionTrace| -> Result<Grid> {
        let gb: Vec<&Grid> = views.iter().map(|v| v.boundary.layer(k)).collect();
        let gi: Vec<&Grid> = views.iter().map(|v| v.image.layer(k)).collect();
        let valid: Vec<&Mask> = views.iter().map(|v| &v.validity[k - 1]).collect();
        let out = enhance_boundaries(img, &gb, &gi, &valid)?;
        trace.before_enhancement = Some(img.clone());
        trace.after_enhancement = Some(out.clone());
        Ok(out)
    };

    let mut img = fused_layers[levels - 1].clone();
    if params.enhancement && params.enhance_layer == levels {
        img = enhance(&img, levels, &mut trace)?;
    }
    for k in (1..levels).rev() {
        let band = &fused_layers[k - 1];
        img = expand(&img, band.width(), band.height(), params.kernel)?.add(band)?;
        if params.enhancement && params.enhance_layer == k {
            img = enhance(&img, k, &mut trace)?;
        }
    }
    for (v, &c) in img.data_mut().iter_mut().zip(coverage.data()) {
        if !c {
            *v = 0.0;
        }
    }
    Ok((Image::from_grid_clamped(&img), trace))
}

/// Union of the views' validity masks.
pub fn coverage(views: &[WarpedView]) -> Result<Mask> {
    let (w, h) = check_views(views)?;
    let mut out = Mask::filled(w, h, false);
    for v in views {
        out = out.or(&v.validity)?;
    }
    Ok(out)
}

/// Multi-scale fusion of warped views that already carry all maps.
pub fn compound_pyramid_warped(views: &[WarpedView], params: &PyramidParams) -> Result<(Image, FusionTrace)> {
    params.validate()?;
    let cov = coverage(views)?;
    let pyramids =
        views.iter().map(|v| ViewPyramids::build(v, params.levels, params.kernel)).collect::<Result<Vec<_>>>()?;
    fuse_pyramids(&pyramids, params, &cov)
}

/// Fuses warped views with `method`.
pub fn compound_warped(views: &[WarpedView], method: Method, params: &PyramidParams) -> Result<Image> {
    match method {
        Method::Average => compound_average(views),
        Method::Maximum => compound_maximum(views),
        Method::Ubf => compound_ubf(views),
        Method::Pyramid => Ok(compound_pyramid_warped(views, params)?.0),
    }
}

/// Everything needed to compound native-frame views into a common frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundRequest {
    pub views: Vec<ViewInput>,
    pub width: usize,
    pub height: usize,
    pub method: Method,
    pub params: PyramidParams,
    pub prepare: PrepareSettings,
}

impl CompoundRequest {
    pub fn new(views: Vec<ViewInput>, width: usize, height: usize, method: Method) -> Self {
        Self { views, width, height, method, params: PyramidParams::default(), prepare: PrepareSettings::default() }
    }

    pub fn prepared_views(&self) -> Result<Vec<WarpedView>> {
        if self.views.len() < 2 {
            return Err(Error::Parameter("compounding needs at least two views"));
        }
        self.views.iter().map(|v| prepare_view(v, self.width, self.height, &self.prepare)).collect()
    }
}

pub fn compound(request: &CompoundRequest) -> Result<Image> {
    compound_warped(&request.prepared_views()?, request.method, &request.params)
}

/// The multi-scale method regardless of `request.method`.
pub fn compound_pyramid(request: &CompoundRequest) -> Result<Image> {
    Ok(compound_pyramid_warped(&request.prepared_views()?, &request.params)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(values: &[f32], valid: &[bool], conf: Option<&[f32]>) -> WarpedView {
        let n = values.len();
        WarpedView {
            image: Image::new(n, 1, values.to_vec()).unwrap(),
            validity: Mask::new(n, 1, valid.to_vec()).unwrap(),
            intensity_confidence: conf.map(|c| Grid::new(n, 1, c.to_vec()).unwrap()),
            structural_confidence: None,
            boundary_mask: None,
        }
    }

    #[test]
    fn phi_closed_form_values() {
        assert!((phi(3, 5).unwrap() - 0.997_355).abs() < 1e-5);
        assert!((phi(1, 5).unwrap() - 0.043_821).abs() < 1e-5);
        for k in 1..=5 {
            assert_eq!(phi(k, 5).unwrap(), phi(6 - k, 5).unwrap());
        }
        assert!(matches!(phi(1, 1), Err(Error::Degenerate(_))));
        assert!(phi(0, 5).is_err());
    }

    #[test]
    fn average_and_maximum_basics() {
        let a = view(&[0.2, 0.3], &[true, true], None);
        let b = view(&[0.8, 0.9], &[true, false], None);
        let avg = compound_average(&[a.clone(), b.clone()]).unwrap();
        assert!((avg.get(0, 0) - 0.5).abs() < 1e-7);
        assert_eq!(avg.get(1, 0), 0.3);
        let max = compound_maximum(&[a.clone(), b]).unwrap();
        assert_eq!(max.data(), &[0.8, 0.3]);
        assert_eq!(compound_average(&[a.clone(), a.clone()]).unwrap(), a.image);
    }

    #[test]
    fn uncovered_pixels_are_zero() {
        let a = view(&[0.2, 0.3], &[true, false], None);
        let b = view(&[0.8, 0.9], &[true, false], None);
        assert_eq!(compound_maximum(&[a, b]).unwrap().get(1, 0), 0.0);
    }

    #[test]
    fn ubf_weights() {
        let a = view(&[0.4, 0.4, 0.4], &[true; 3], Some(&[0.75, 1.0, 0.0]));
        let b = view(&[0.8, 0.8, 0.8], &[true; 3], Some(&[0.25, 0.0, 0.0]));
        let out = compound_ubf(&[a, b]).unwrap();
        assert!((out.get(0, 0) - 0.5).abs() < 1e-6);
        assert!((out.get(1, 0) - 0.4).abs() < 1e-7);
        // zero weights fall back to the plain mean
        assert!((out.get(2, 0) - 0.6).abs() < 1e-6);
        assert!(compound_ubf(&[view(&[0.1], &[true], None)]).is_err());
    }

    #[test]
    fn selection_prefers_the_edge_under_equal_confidence() {
        let flat = Grid::filled(3, 3, 0.5);
        let edge = Grid::from_fn(3, 3, |x, _| if x == 0 { 0.1 } else { 0.9 });
        let conf = Grid::filled(3, 3, 1.0);
        let valid = Mask::filled(3, 3, true);
        let sel = select_view_layer(&[&flat, &edge], &[&conf, &conf], &[&valid, &valid], 0.05).unwrap();
        assert_eq!(sel.get(1, 1), Some(1));
    }

    #[test]
    fn selection_follows_structural_confidence_when_it_disagrees() {
        let flat = Grid::filled(3, 3, 0.5);
        let edge = Grid::from_fn(3, 3, |x, _| if x == 0 { 0.1 } else { 0.9 });
        let hi = Grid::filled(3, 3, 0.9);
        let lo = Grid::filled(3, 3, 0.3);
        let valid = Mask::filled(3, 3, true);
        let sel = select_view_layer(&[&flat, &edge], &[&hi, &lo], &[&valid, &valid], 0.05).unwrap();
        assert!(sel.data.iter().all(|&m| m == Some(0)));
    }

    #[test]
    fn selection_with_one_valid_view() {
        let a = Grid::filled(2, 1, 0.5);
        let b = Grid::from_fn(2, 1, |x, _| x as f32);
        let c = Grid::filled(2, 1, 1.0);
        let va = Mask::new(2, 1, vec![false, true]).unwrap();
        let vb = Mask::new(2, 1, vec![true, false]).unwrap();
        let sel = select_view_layer(&[&a, &b], &[&c, &c], &[&va, &vb], 0.05).unwrap();
        assert_eq!(sel.data, vec![Some(1), Some(0)]);
    }

    #[test]
    fn weighted_average_cases() {
        let l1 = Grid::new(1, 1, vec![0.1]).unwrap();
        let l2 = Grid::new(1, 1, vec![-0.1]).unwrap();
        let v = Mask::filled(1, 1, true);
        let g = |c: f32| Grid::new(1, 1, vec![c]).unwrap();
        let out = weighted_average_layer(&[&l1, &l2], &[&g(0.6), &g(0.2)], &[&v, &v]).unwrap();
        assert!((out.get(0, 0) - 0.05).abs() < 1e-7);
        let out = weighted_average_layer(&[&l1, &l2], &[&g(0.0), &g(0.2)], &[&v, &v]).unwrap();
        assert!((out.get(0, 0) + 0.1).abs() < 1e-7);
        let out = weighted_average_layer(&[&l1, &l2], &[&g(0.3), &g(0.3)], &[&v, &v]).unwrap();
        assert!(out.get(0, 0).abs() < 1e-7);
    }

    #[test]
    fn blend_cases() {
        let s = Grid::new(1, 1, vec![0.2]).unwrap();
        let a = Grid::new(1, 1, vec![0.4]).unwrap();
        assert_eq!(blend_layer(&s, &a, 1.0).unwrap(), s);
        assert_eq!(blend_layer(&s, &a, 0.0).unwrap(), a);
        assert!((blend_layer(&s, &a, 0.5).unwrap().get(0, 0) - 0.3).abs() < 1e-7);
        assert!(blend_layer(&s, &a, 1.5).is_err());
    }

    #[test]
    fn enhancement_cases() {
        let v = Mask::filled(1, 1, true);
        let g = |c: f32| Grid::new(1, 1, vec![c]).unwrap();
        let p = g(0.5);
        let out = enhance_boundaries(&p, &[&g(0.0), &g(0.0)], &[&g(0.9), &g(0.3)], &[&v, &v]).unwrap();
        assert_eq!(out, p);
        let out = enhance_boundaries(&p, &[&g(1.0), &g(0.0)], &[&g(0.9), &g(0.3)], &[&v, &v]).unwrap();
        assert!((out.get(0, 0) - 0.9).abs() < 1e-7);
        let out = enhance_boundaries(&g(0.85), &[&g(1.0), &g(1.0)], &[&g(0.9), &g(0.7)], &[&v, &v]).unwrap();
        assert!((out.get(0, 0) - 0.85).abs() < 1e-7);
    }

    #[test]
    fn params_validation() {
        assert!(PyramidParams::default().validate().is_ok());
        let bad = PyramidParams { enhance_layer: 6, ..PyramidParams::default() };
        assert!(bad.validate().is_err());
        let bad = PyramidParams { phi_overrides: Some(vec![0.5; 4]), ..PyramidParams::default() };
        assert!(bad.validate().is_err());
        let ok = PyramidParams { phi_overrides: Some(vec![0.0; 5]), ..PyramidParams::default() };
        assert_eq!(ok.weight(3).unwrap(), 0.0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()), Some(m));
        }
        assert_eq!(Method::parse("median"), None);
    }
}

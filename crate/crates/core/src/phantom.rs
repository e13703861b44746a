//! Deterministic synthetic multi-view B-mode scenes with ground truth.
//!
//! Anatomy is described once in the common frame. Each view renders it in
//! its own probe frame (beam pointing down the native columns), so specular
//! surfaces are bright only where they face the beam. A reflector lying
//! within [`NEAR_HORIZONTAL_DEG`] of a view's lateral axis casts a shadow
//! below itself and spawns a train of progressively dimmer echo copies.
//! Multiplicative Rayleigh speckle is drawn from [`SplitMix64`].

use alloc::vec::Vec;

use crate::boundary::label_components;
use crate::confidence::{ConfidenceKind, ConfidenceMap};
use crate::grid::{Grid, Image, Mask};
use crate::math;
use crate::metrics::{PatchLabel, PatchSpec};
use crate::rng::{derive_seed, SplitMix64};
use crate::warp::{warp_view, RigidTransform2D, ViewInput};
use crate::{Error, Result};

/// Reflectors closer than this to a view's lateral axis reverberate.
pub const NEAR_HORIZONTAL_DEG: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct VesselSpec {
    pub cx: f64,
    pub cy: f64,
    /// Semi-axes of the wall centre line.
    pub rx: f64,
    pub ry: f64,
    pub thickness: f64,
    pub intensity: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_lumen"))]
    pub lumen: f64,
}

fn default_lumen() -> f64 {
    0.02
}

impl VesselSpec {
    pub fn new(cx: f64, cy: f64, rx: f64, ry: f64, thickness: f64, intensity: f64) -> Self {
        Self { cx, cy, rx, ry, thickness, intensity, lumen: default_lumen() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ReflectorSpec {
    /// Segment end points in the common frame.
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub thickness: f64,
    pub intensity: f64,
    /// Number of echo copies below the reflector.
    #[cfg_attr(feature = "serde", serde(default))]
    pub echoes: usize,
    /// Rows between echoes in the native frame; defaults to the reflector's
    /// depth below the probe.
    #[cfg_attr(feature = "serde", serde(default))]
    pub spacing: Option<f64>,
    /// Intensity factor applied per echo, in (0, 1).
    #[cfg_attr(feature = "serde", serde(default = "default_decay"))]
    pub decay: f64,
    /// Intensity factor applied to everything underneath, in [0, 1].
    #[cfg_attr(feature = "serde", serde(default = "default_shadow"))]
    pub shadow: f64,
}

fn default_decay() -> f64 {
    0.5
}

fn default_shadow() -> f64 {
    1.0
}

impl ReflectorSpec {
    /// Segment without echoes or shadow.
    pub fn segment(x0: f64, y0: f64, x1: f64, y1: f64, thickness: f64, intensity: f64) -> Self {
        Self {
            x0,
            y0,
            x1,
            y1,
            thickness,
            intensity,
            echoes: 0,
            spacing: None,
            decay: default_decay(),
            shadow: default_shadow(),
        }
    }

    pub fn with_echoes(mut self, echoes: usize, spacing: Option<f64>, decay: f64) -> Self {
        self.echoes = echoes;
        self.spacing = spacing;
        self.decay = decay;
        self
    }

    pub fn with_shadow(mut self, shadow: f64) -> Self {
        self.shadow = shadow;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SpeckleSpec {
    /// 0 disables speckle; 1 is fully developed unit-mean Rayleigh speckle.
    pub scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    /// Mean tissue intensity.
    #[cfg_attr(feature = "serde", serde(default = "default_background"))]
    pub background: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub vessel: Option<VesselSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub reflectors: Vec<ReflectorSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub speckle: Option<SpeckleSpec>,
    /// Response of a specular surface seen edge-on, relative to face-on.
    #[cfg_attr(feature = "serde", serde(default = "default_edge_response"))]
    pub edge_response: f64,
    /// Structural confidence assigned to echo pixels and to shadowed pixels
    /// in the simulated confidence maps.
    #[cfg_attr(feature = "serde", serde(default = "default_artifact_confidence"))]
    pub artifact_confidence: f64,
    /// Placement of each view; every view has the scene's dimensions.
    pub views: Vec<RigidTransform2D>,
}

fn default_background() -> f64 {
    0.2
}

fn default_edge_response() -> f64 {
    0.5
}

fn default_artifact_confidence() -> f64 {
    0.2
}

impl PhantomSpec {
    /// Empty scene with one view per angle, each rotated about the centre.
    pub fn with_view_angles(width: usize, height: usize, angles: &[f64]) -> Self {
        let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        Self {
            width,
            height,
            background: default_background(),
            vessel: None,
            reflectors: Vec::new(),
            speckle: None,
            edge_response: default_edge_response(),
            artifact_confidence: default_artifact_confidence(),
            views: angles.iter().map(|&a| RigidTransform2D::about_point(a, cx, cy)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width as f64, self.height as f64);
        if self.width < 2 || self.height < 2 {
            return Err(Error::Dimensions("phantom must be at least 2x2"));
        }
        if self.views.is_empty() {
            return Err(Error::Parameter("phantom needs at least one view"));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.background) || !unit(self.edge_response) || !unit(self.artifact_confidence) {
            return Err(Error::Parameter("background, edge_response and artifact_confidence must lie in [0, 1]"));
        }
        if let Some(v) = &self.vessel {
            let rx = v.rx + v.thickness / 2.0;
            let ry = v.ry + v.thickness / 2.0;
            if v.rx <= 0.0 || v.ry <= 0.0 || v.thickness <= 0.0 {
                return Err(Error::Parameter("vessel axes and thickness must be positive"));
            }
            if v.cx - rx < 0.0 || v.cx + rx > w - 1.0 || v.cy - ry < 0.0 || v.cy + ry > h - 1.0 {
                return Err(Error::Dimensions("vessel extends outside the scene"));
            }
            if !unit(v.intensity) || !unit(v.lumen) {
                return Err(Error::Parameter("vessel intensities must lie in [0, 1]"));
            }
        }
        for r in &self.reflectors {
            let inside = |x: f64, y: f64| (0.0..=w - 1.0).contains(&x) && (0.0..=h - 1.0).contains(&y);
            if !inside(r.x0, r.y0) || !inside(r.x1, r.y1) {
                return Err(Error::Dimensions("reflector extends outside the scene"));
            }
            if r.thickness <= 0.0 || !unit(r.intensity) || !unit(r.shadow) {
                return Err(Error::Parameter("reflector thickness must be positive, intensity and shadow in [0, 1]"));
            }
            if r.echoes > 0 && !(r.decay > 0.0 && r.decay < 1.0) {
                return Err(Error::Parameter("echo decay must lie in (0, 1)"));
            }
            if r.spacing.is_some_and(|s| !(s >= 1.0)) {
                return Err(Error::Parameter("echo spacing must be at least one row"));
            }
        }
        if let Some(s) = &self.speckle {
            if !(s.scale >= 0.0 && s.scale.is_finite()) {
                return Err(Error::Parameter("speckle scale must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// One rendered view with its ground truth, all in the native frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomView {
    pub image: Image,
    pub boundary: Mask,
    pub artifact: Mask,
    pub structural_confidence: ConfidenceMap,
    pub to_common: RigidTransform2D,
}

impl PhantomView {
    /// Input for the compounding pipeline carrying the simulated structural
    /// confidence.
    pub fn to_view_input(&self) -> ViewInput {
        let mut v = ViewInput::new(self.image.clone(), self.to_common);
        v.structural_confidence = Some(self.structural_confidence.clone());
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomScene {
    pub width: usize,
    pub height: usize,
    pub views: Vec<PhantomView>,
}

/// Specular response: `edge + (1 - edge) cos²` of the beam/normal angle.
fn specular(normal: (f64, f64), beam: (f64, f64), edge_response: f64) -> f64 {
    let n = math::sqrt(normal.0 * normal.0 + normal.1 * normal.1);
    if n == 0.0 {
        return 1.0;
    }
    let c = ((normal.0 * beam.0 + normal.1 * beam.1) / n).abs();
    edge_response + (1.0 - edge_response) * c * c
}

fn segment_distance(px: f64, py: f64, r: &ReflectorSpec) -> f64 {
    let (dx, dy) = (r.x1 - r.x0, r.y1 - r.y0);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((px - r.x0) * dx + (py - r.y0) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (r.x0 + t * dx, r.y0 + t * dy);
    math::sqrt((px - qx) * (px - qx) + (py - qy) * (py - qy))
}

/// Approximate signed distance to the vessel wall centre line and the
/// outward normal there.
fn vessel_distance(px: f64, py: f64, v: &VesselSpec) -> (f64, (f64, f64)) {
    let (u, w) = ((px - v.cx) / v.rx, (py - v.cy) / v.ry);
    let rho = math::sqrt(u * u + w * w);
    if rho == 0.0 {
        return (-v.rx.min(v.ry), (0.0, 1.0));
    }
    let g = (u / v.rx / rho, w / v.ry / rho);
    let gn = math::sqrt(g.0 * g.0 + g.1 * g.1);
    ((rho - 1.0) / gn, g)
}

fn reverberates(r: &ReflectorSpec, view: &RigidTransform2D) -> bool {
    // segment direction expressed in the native frame
    let (s, c) = (math::sin(view.rotation), math::cos(view.rotation));
    let (dx, dy) = (r.x1 - r.x0, r.y1 - r.y0);
    let (nx, ny) = (c * dx + s * dy, -s * dx + c * dy);
    let len = math::sqrt(nx * nx + ny * ny);
    if len == 0.0 {
        return false;
    }
    let tilt = math::acos((nx.abs() / len).min(1.0)).to_degrees();
    tilt <= NEAR_HORIZONTAL_DEG
}

fn render_view(spec: &PhantomSpec, index: usize) -> Result<PhantomView> {
    let (w, h) = (spec.width, spec.height);
    let t = spec.views[index];
    let beam = {
        let (s, c) = (math::sin(t.rotation), math::cos(t.rotation));
        (-s, c)
    };
    let mut clean = Grid::filled(w, h, spec.background as f32);
    let mut boundary = Mask::filled(w, h, false);
    let mut footprints: Vec<Mask> = spec.reflectors.iter().map(|_| Mask::filled(w, h, false)).collect();

    for y in 0..h {
        for x in 0..w {
            let (px, py) = t.apply(x as f64, y as f64);
            if let Some(v) = &spec.vessel {
                let (d, normal) = vessel_distance(px, py, v);
                if d.abs() <= v.thickness / 2.0 {
                    clean.set(x, y, (v.intensity * specular(normal, beam, spec.edge_response)) as f32);
                    boundary.set(x, y, true);
                } else if d < 0.0 {
                    clean.set(x, y, v.lumen as f32);
                }
            }
            for (r, fp) in spec.reflectors.iter().zip(footprints.iter_mut()) {
                if segment_distance(px, py, r) <= r.thickness / 2.0 {
                    let normal = (-(r.y1 - r.y0), r.x1 - r.x0);
                    clean.set(x, y, (r.intensity * specular(normal, beam, spec.edge_response)) as f32);
                    boundary.set(x, y, true);
                    fp.set(x, y, true);
                }
            }
        }
    }

    let mut structural = Grid::filled(w, h, 1.0);
    let mut echo_values = Grid::zeros(w, h);
    let mut artifact = Mask::filled(w, h, false);
    for (r, fp) in spec.reflectors.iter().zip(&footprints) {
        if fp.is_empty() || !reverberates(r, &t) {
            continue;
        }
        let mut depth_sum = 0.0;
        let mut depth_n = 0usize;
        for x in 0..w {
            let Some(bottom) = (0..h).rev().find(|&y| fp.get(x, y)) else { continue };
            for y in bottom + 1..h {
                clean.set(x, y, clean.get(x, y) * r.shadow as f32);
                if r.shadow < 1.0 {
                    structural.set(x, y, spec.artifact_confidence as f32);
                }
            }
            for y in 0..=bottom {
                if fp.get(x, y) {
                    depth_sum += y as f64;
                    depth_n += 1;
                }
            }
        }
        let spacing = r.spacing.unwrap_or(depth_sum / depth_n as f64).max(1.0);
        let mut gain = 1.0;
        for n in 1..=r.echoes {
            gain *= r.decay;
            let shift = math::round(n as f64 * spacing) as usize;
            for y in 0..h.saturating_sub(shift) {
                for x in 0..w {
                    if fp.get(x, y) {
                        let v = (clean.get(x, y) as f64 * gain) as f32;
                        let (ty, cur) = (y + shift, echo_values.get(x, y + shift));
                        echo_values.set(x, ty, cur.max(v));
                        artifact.set(x, ty, true);
                    }
                }
            }
        }
    }
    for (c, e) in clean.data_mut().iter_mut().zip(echo_values.data()) {
        *c = c.max(*e);
    }
    let artifact = Mask::from_fn(w, h, |x, y| artifact.get(x, y) && !boundary.get(x, y));
    for (s, &a) in structural.data_mut().iter_mut().zip(artifact.data()) {
        if a {
            *s = spec.artifact_confidence as f32;
        }
    }

    if let Some(s) = spec.speckle.filter(|s| s.scale > 0.0) {
        let mut rng = SplitMix64::new(derive_seed(s.seed, index as u64));
        let norm = math::sqrt(core::f64::consts::PI / 2.0);
        for v in clean.data_mut() {
            let m = 1.0 + s.scale * (rng.rayleigh(1.0) / norm - 1.0);
            *v = (*v as f64 * m) as f32;
        }
    }

    Ok(PhantomView {
        image: Image::from_grid_clamped(&clean),
        boundary,
        artifact,
        structural_confidence: ConfidenceMap::new(structural, ConfidenceKind::Structural)?,
        to_common: t,
    })
}

/// Renders every view of `spec`.
pub fn generate(spec: &PhantomSpec) -> Result<PhantomScene> {
    spec.validate()?;
    let views = (0..spec.views.len()).map(|i| render_view(spec, i)).collect::<Result<Vec<_>>>()?;
    Ok(PhantomScene { width: spec.width, height: spec.height, views })
}

/// Window `(x, y, width, height)` around the vessel wall with `margin`
/// pixels to spare, clipped to the scene.
pub fn vessel_window(spec: &PhantomSpec, margin: f64) -> Option<(usize, usize, usize, usize)> {
    let v = spec.vessel.as_ref()?;
    let (hx, hy) = (v.rx + v.thickness / 2.0 + margin, v.ry + v.thickness / 2.0 + margin);
    let x0 = math::floor(v.cx - hx).max(0.0) as usize;
    let y0 = math::floor(v.cy - hy).max(0.0) as usize;
    let x1 = (math::floor(v.cx + hx) as usize).min(spec.width - 1);
    let y1 = (math::floor(v.cy + hy) as usize).min(spec.height - 1);
    Some((x0, y0, x1 - x0 + 1, y1 - y0 + 1))
}

/// Ready-made scenes used by the examples, the CLI and the test suites.
pub mod presets {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    pub const NAMES: [&str; 3] = ["reflector", "reverberation", "crossing"];

    /// Single view: a 60-px horizontal reflector at row 40 with three echoes
    /// 15 rows apart.
    pub fn reflector(seed: u64) -> PhantomSpec {
        let mut spec = PhantomSpec::with_view_angles(160, 160, &[0.0]);
        spec.reflectors.push(ReflectorSpec::segment(50.0, 40.0, 109.0, 40.0, 3.0, 0.9).with_echoes(3, Some(15.0), 0.5));
        spec.speckle = Some(SpeckleSpec { scale: 0.5, seed });
        spec
    }

    /// Two orthogonal views. A horizontal and a vertical reflector each
    /// reverberate in one view only; the vessel is clear of both trains.
    pub fn reverberation(seed: u64) -> PhantomSpec {
        let mut spec = PhantomSpec::with_view_angles(192, 192, &[0.0, FRAC_PI_2]);
        spec.vessel = Some(VesselSpec::new(110.0, 145.0, 26.0, 20.0, 4.0, 0.85));
        spec.reflectors.push(ReflectorSpec::segment(40.0, 40.0, 110.0, 40.0, 3.0, 0.9).with_echoes(3, Some(15.0), 0.6));
        spec.reflectors.push(ReflectorSpec::segment(175.0, 20.0, 175.0, 90.0, 3.0, 0.9).with_echoes(3, Some(15.0), 0.6));
        spec.speckle = Some(SpeckleSpec { scale: 0.5, seed });
        spec
    }

    /// Two orthogonal views; in the first, the echo train of a reflector
    /// just above the vessel crosses the vessel top.
    pub fn crossing(seed: u64) -> PhantomSpec {
        let mut spec = PhantomSpec::with_view_angles(192, 192, &[0.0, FRAC_PI_2]);
        spec.vessel = Some(VesselSpec::new(96.0, 120.0, 26.0, 20.0, 4.0, 0.85));
        spec.reflectors.push(ReflectorSpec::segment(60.0, 80.0, 132.0, 80.0, 3.0, 0.9).with_echoes(3, Some(12.0), 0.8));
        spec.speckle = Some(SpeckleSpec { scale: 0.5, seed });
        spec
    }

    pub fn by_name(name: &str, seed: u64) -> Option<PhantomSpec> {
        match name {
            "reflector" => Some(reflector(seed)),
            "reverberation" => Some(reverberation(seed)),
            "crossing" => Some(crossing(seed)),
            _ => None,
        }
    }
}

/// Ground-truth vessel interior (the region bounded by the wall centre
/// line) in the common frame.
pub fn vessel_interior(spec: &PhantomSpec) -> Option<Mask> {
    let v = spec.vessel.as_ref()?;
    Some(Mask::from_fn(spec.width, spec.height, |x, y| {
        let (u, w) = ((x as f64 - v.cx) / v.rx, (y as f64 - v.cy) / v.ry);
        u * u + w * w <= 1.0
    }))
}

fn bbox(pixels: &[(usize, usize)]) -> (usize, usize, usize, usize) {
    let x0 = pixels.iter().map(|p| p.0).min().unwrap_or(0);
    let x1 = pixels.iter().map(|p| p.0).max().unwrap_or(0);
    let y0 = pixels.iter().map(|p| p.1).min().unwrap_or(0);
    let y1 = pixels.iter().map(|p| p.1).max().unwrap_or(0);
    (x0, y0, x1, y1)
}

fn padded(b: (usize, usize, usize, usize), pad: usize, w: usize, h: usize, label: PatchLabel) -> PatchSpec {
    let x0 = b.0.saturating_sub(pad);
    let y0 = b.1.saturating_sub(pad);
    let x1 = (b.2 + pad).min(w - 1);
    let y1 = (b.3 + pad).min(h - 1);
    PatchSpec { x: x0, y: y0, width: x1 - x0 + 1, height: y1 - y0 + 1, label }
}

/// Evaluation windows in the common frame: one artifact patch per connected
/// echo region of each view, and boundary patches around each reflector and
/// the four extreme points of the vessel wall.
pub fn evaluation_patches(spec: &PhantomSpec, scene: &PhantomScene) -> Result<Vec<PatchSpec>> {
    let (w, h) = (spec.width, spec.height);
    let mut patches = Vec::new();
    for view in &scene.views {
        let mut input = ViewInput::new(view.image.clone(), view.to_common);
        input.boundary_mask = Some(view.artifact.clone());
        let warped = warp_view(&input, w, h)?;
        let echoes = warped.boundary_mask.expect("mask attached");
        for c in label_components(&echoes) {
            if c.len() >= 8 {
                patches.push(padded(bbox(&c.pixels), 1, w, h, PatchLabel::Artifact));
            }
        }
    }
    for r in &spec.reflectors {
        let pad = math::round(r.thickness / 2.0 + 2.0) as usize;
        let b = (
            r.x0.min(r.x1).max(0.0) as usize,
            r.y0.min(r.y1).max(0.0) as usize,
            r.x0.max(r.x1) as usize,
            r.y0.max(r.y1) as usize,
        );
        patches.push(padded(b, pad, w, h, PatchLabel::Boundary));
    }
    if let Some(v) = &spec.vessel {
        let half_t = math::round(v.thickness / 2.0 + 3.0) as usize;
        let half_l = math::round(0.3 * v.rx.min(v.ry)).max(2.0) as usize;
        let (cx, cy) = (math::round(v.cx) as usize, math::round(v.cy) as usize);
        let (rx, ry) = (math::round(v.rx) as usize, math::round(v.ry) as usize);
        for (px, py, horizontal) in [(cx, cy - ry, true), (cx, cy + ry, true), (cx - rx, cy, false), (cx + rx, cy, false)] {
            let (hx, hy) = if horizontal { (half_l, half_t) } else { (half_t, half_l) };
            let b = (px.saturating_sub(hx), py.saturating_sub(hy), px + hx, py + hy);
            patches.push(padded(b, 0, w, h, PatchLabel::Boundary));
        }
    }
    Ok(patches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_reflector(row: f64) -> ReflectorSpec {
        ReflectorSpec {
            x0: 20.0,
            y0: row,
            x1: 80.0,
            y1: row,
            thickness: 1.0,
            intensity: 0.8,
            echoes: 3,
            spacing: Some(50.0),
            decay: 0.5,
            shadow: 1.0,
        }
    }

    #[test]
    fn vessel_only_scene_has_no_artifacts() {
        let mut spec = PhantomSpec::with_view_angles(64, 64, &[0.0]);
        spec.vessel = Some(VesselSpec { cx: 32.0, cy: 32.0, rx: 15.0, ry: 12.0, thickness: 3.0, intensity: 0.9, lumen: 0.02 });
        let scene = generate(&spec).unwrap();
        let v = &scene.views[0];
        assert!(v.artifact.is_empty());
        assert!(!v.boundary.is_empty());
        // top of the wall faces the beam, the side does not
        assert!(v.image.get(32, 20) > 0.85);
        assert!((v.image.get(17, 32) - 0.45).abs() < 1e-6);
        assert_eq!(v.image.get(0, 0), 0.2);
    }

    #[test]
    fn echo_train_rows_and_gains() {
        let mut spec = PhantomSpec::with_view_angles(100, 240, &[0.0]);
        spec.background = 0.0;
        spec.reflectors.push(flat_reflector(50.0));
        let scene = generate(&spec).unwrap();
        let img = &scene.views[0].image;
        let base = img.get(50, 50);
        assert!((base - 0.8).abs() < 1e-6);
        for (n, row) in [100usize, 150, 200].into_iter().enumerate() {
            let want = base * 0.5f32.powi(n as i32 + 1);
            assert!((img.get(50, row) - want).abs() < 1e-6, "echo {n}");
            assert!(scene.views[0].artifact.get(50, row));
        }
        assert_eq!(img.get(50, 125), 0.0);
    }

    #[test]
    fn vertical_reflector_does_not_reverberate() {
        let mut spec = PhantomSpec::with_view_angles(100, 240, &[0.0, core::f64::consts::FRAC_PI_2]);
        spec.width = 240;
        let (cx, cy) = (119.5, 119.5);
        spec.views = [0.0, core::f64::consts::FRAC_PI_2].iter().map(|&a| RigidTransform2D::about_point(a, cx, cy)).collect();
        spec.reflectors.push(ReflectorSpec { x0: 100.0, x1: 140.0, y0: 60.0, y1: 60.0, ..flat_reflector(60.0) });
        let scene = generate(&spec).unwrap();
        assert!(!scene.views[0].artifact.is_empty());
        assert!(scene.views[1].artifact.is_empty());
    }

    #[test]
    fn same_seed_same_scene() {
        let mut spec = PhantomSpec::with_view_angles(48, 48, &[0.0, 0.5]);
        spec.speckle = Some(SpeckleSpec { scale: 0.7, seed: 11 });
        spec.reflectors.push(ReflectorSpec { x0: 10.0, x1: 38.0, y0: 12.0, y1: 12.0, spacing: None, ..flat_reflector(12.0) });
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let a = generate(&spec).unwrap();
        spec.speckle = Some(SpeckleSpec { scale: 0.7, seed: 12 });
        assert_ne!(a, generate(&spec).unwrap());
    }

    #[test]
    fn out_of_bounds_geometry_is_rejected() {
        let mut spec = PhantomSpec::with_view_angles(64, 64, &[0.0]);
        spec.vessel = Some(VesselSpec { cx: 10.0, cy: 32.0, rx: 15.0, ry: 12.0, thickness: 3.0, intensity: 0.9, lumen: 0.0 });
        assert!(matches!(generate(&spec), Err(Error::Dimensions(_))));
        let mut spec = PhantomSpec::with_view_angles(64, 64, &[0.0]);
        spec.reflectors.push(ReflectorSpec { x1: 90.0, ..flat_reflector(10.0) });
        assert!(generate(&spec).is_err());
        let mut spec = PhantomSpec::with_view_angles(64, 64, &[0.0]);
        spec.reflectors.push(ReflectorSpec { x1: 60.0, decay: 1.0, ..flat_reflector(10.0) });
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn masks_are_disjoint() {
        let mut spec = PhantomSpec::with_view_angles(96, 96, &[0.0]);
        spec.reflectors.push(ReflectorSpec { x0: 10.0, x1: 80.0, y0: 10.0, y1: 10.0, thickness: 3.0, spacing: Some(12.0), ..flat_reflector(10.0) });
        spec.vessel = Some(VesselSpec { cx: 48.0, cy: 50.0, rx: 20.0, ry: 16.0, thickness: 3.0, intensity: 0.9, lumen: 0.02 });
        let scene = generate(&spec).unwrap();
        let v = &scene.views[0];
        assert!(v.boundary.and(&v.artifact).unwrap().is_empty());
        assert!(!v.artifact.is_empty());
    }

    #[test]
    fn presets_are_valid() {
        for name in presets::NAMES {
            let spec = presets::by_name(name, 3).unwrap();
            spec.validate().unwrap();
        }
        assert!(presets::by_name("nope", 0).is_none());
    }

    #[test]
    fn structural_confidence_marks_echoes_only() {
        let spec = presets::reflector(0);
        let v = &generate(&spec).unwrap().views[0];
        for y in 0..spec.height {
            for x in 0..spec.width {
                let want = if v.artifact.get(x, y) { 0.2 } else { 1.0 };
                assert_eq!(v.structural_confidence.get(x, y), want);
            }
        }
    }

    #[test]
    fn vessel_window_covers_the_wall() {
        let spec = presets::crossing(0);
        let (x, y, w, h) = vessel_window(&spec, 6.0).unwrap();
        assert_eq!((x, y, w, h), (62, 92, 69, 57));
    }
}

//! Quantitative evaluation of compounded images.
//!
//! Patch statistics are expressed relative to the whole image: artifact
//! patches should look like the rest of the image (mean ratio near 1, low
//! variance ratio) and boundary patches should carry much more variance than
//! the image as a whole. Vessel segmentation is an Otsu split followed by an
//! ellipse fit to the bright pixels, scored with Dice.

use alloc::vec::Vec;

use crate::ellipse::{fit_ellipse, Ellipse, FitError};
use crate::grid::{Grid, Mask};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PatchLabel {
    Boundary,
    Artifact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PatchSpec {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub label: PatchLabel,
}

impl PatchSpec {
    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= width && self.y + self.height <= height
    }
}

/// Mean and population variance of `values`, accumulated in f64.
fn moments(values: impl Iterator<Item = f32>) -> (f64, f64, usize) {
    let mut n = 0usize;
    let mut sum = 0.0f64;
    let mut sq = 0.0f64;
    for v in values {
        let v = v as f64;
        n += 1;
        sum += v;
        sq += v * v;
    }
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = sum / n as f64;
    // two-pass would be more accurate but the inputs live in [0, 1]
    let var = (sq / n as f64 - mean * mean).max(0.0);
    (mean, var, n)
}

fn region_values<'a>(image: &'a Grid, region: Option<&'a Mask>) -> impl Iterator<Item = f32> + 'a {
    image.data().iter().enumerate().filter(move |(i, _)| region.is_none_or(|m| m.data()[*i])).map(|(_, &v)| v)
}

fn patch_values<'a>(image: &'a Grid, patch: &PatchSpec) -> impl Iterator<Item = f32> + 'a {
    let PatchSpec { x, y, width, height, .. } = *patch;
    (y..y + height).flat_map(move |yy| (x..x + width).map(move |xx| image.get(xx, yy)))
}

fn check_patch(image: &Grid, patch: &PatchSpec, region: Option<&Mask>) -> Result<()> {
    if !patch.fits(image.width(), image.height()) {
        return Err(Error::Dimensions("patch is not fully inside the image"));
    }
    if region.is_some_and(|m| m.dims() != image.dims()) {
        return Err(Error::Dimensions("coverage mask does not match the image"));
    }
    Ok(())
}

/// `mean(patch) / mean(image)`. With `region`, the whole-image statistic only
/// uses pixels inside it (e.g. pixels observed by at least one view).
pub fn mean_ratio(image: &Grid, patch: &PatchSpec, region: Option<&Mask>) -> Result<f64> {
    check_patch(image, patch, region)?;
    let (whole, _, n) = moments(region_values(image, region));
    if n == 0 || whole <= 0.0 {
        return Err(Error::Degenerate("image mean is zero"));
    }
    Ok(moments(patch_values(image, patch)).0 / whole)
}

/// `var(patch) / var(image)`, population variances.
pub fn variance_ratio(image: &Grid, patch: &PatchSpec, region: Option<&Mask>) -> Result<f64> {
    check_patch(image, patch, region)?;
    let (_, whole, n) = moments(region_values(image, region));
    if n == 0 || whole <= 0.0 {
        return Err(Error::Degenerate("image variance is zero"));
    }
    Ok(moments(patch_values(image, patch)).1 / whole)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupScores {
    pub count: usize,
    /// Average mean ratio.
    pub amr: Option<f64>,
    /// Average variance ratio.
    pub avr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    /// AMR and AVR over artifact patches.
    pub artifact: GroupScores,
    /// AVR over boundary patches.
    pub boundary: GroupScores,
}

/// Averages per-patch ratios by label. Artifact patches report AMR and AVR,
/// boundary patches AVR only.
pub fn amr_avr(image: &Grid, patches: &[PatchSpec], region: Option<&Mask>) -> Result<MetricsReport> {
    if patches.is_empty() {
        return Err(Error::Parameter("at least one patch is required"));
    }
    let mut report = MetricsReport::default();
    let mut sums = [(0.0f64, 0.0f64); 2];
    for p in patches {
        let vr = variance_ratio(image, p, region)?;
        match p.label {
            PatchLabel::Artifact => {
                sums[0].0 += mean_ratio(image, p, region)?;
                sums[0].1 += vr;
                report.artifact.count += 1;
            }
            PatchLabel::Boundary => {
                sums[1].1 += vr;
                report.boundary.count += 1;
            }
        }
    }
    if report.artifact.count > 0 {
        let n = report.artifact.count as f64;
        report.artifact.amr = Some(sums[0].0 / n);
        report.artifact.avr = Some(sums[0].1 / n);
    }
    if report.boundary.count > 0 {
        report.boundary.avr = Some(sums[1].1 / report.boundary.count as f64);
    }
    Ok(report)
}

/// 8-bit bin of an intensity in [0, 1], rounding half up.
#[inline]
pub fn quantize(v: f32) -> u8 {
    math::floor(v.clamp(0.0, 1.0) as f64 * 255.0 + 0.5) as u8
}

pub fn histogram256(values: &[f32]) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[quantize(v) as usize] += 1;
    }
    hist
}

/// Otsu split point: bins `<= bin` are background, bins above are
/// foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtsuThreshold {
    pub bin: u8,
}

impl OtsuThreshold {
    /// Midpoint between the last background and first foreground bin.
    pub fn intensity(&self) -> f64 {
        (self.bin as f64 + 0.5) / 255.0
    }

    pub fn is_foreground(&self, v: f32) -> bool {
        quantize(v) > self.bin
    }
}

/// Between-class score of split `t` up to a positive constant:
/// `(N * S0 - n0 * S)^2 / (n0 * n1)`, returned as an exact fraction.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(n0: u64, s0: u64, n: u64, s: u64) -> Self {
        let n1 = n - n0;
        let diff = (n as i128 * s0 as i128 - n0 as i128 * s as i128).unsigned_abs();
        Self { num: diff * diff, den: n0 as u128 * n1 as u128 }
    }

    /// `self > other`, exactly when the cross products fit, in f64 otherwise.
    fn beats(&self, other: &Score) -> bool {
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(a), Some(b)) => a > b,
            _ => (self.num as f64 / self.den as f64) > (other.num as f64 / other.den as f64),
        }
    }
}

/// Threshold maximizing the between-class variance of the 256-bin
/// histogram; ties go to the lowest threshold.
pub fn otsu_from_histogram(hist: &[u64; 256]) -> Result<OtsuThreshold> {
    let n: u64 = hist.iter().sum();
    let s: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    let mut best: Option<(u8, Score)> = None;
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        if n0 == 0 || n0 == n {
            continue;
        }
        let score = Score::new(n0, s0, n, s);
        if best.as_ref().is_none_or(|(_, b)| score.beats(b)) {
            best = Some((t as u8, score));
        }
    }
    best.map(|(bin, _)| OtsuThreshold { bin }).ok_or(Error::Degenerate("patch occupies a single intensity bin"))
}

pub fn otsu_threshold(values: &[f32]) -> Result<OtsuThreshold> {
    otsu_from_histogram(&histogram256(values))
}

/// `2|a ∩ b| / (|a| + |b|)`; two empty masks score 1.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Dimensions("masks differ in size"));
    }
    let (na, nb) = (a.count(), b.count());
    if na + nb == 0 {
        return Ok(1.0);
    }
    let inter = a.data().iter().zip(b.data()).filter(|(&p, &q)| p && q).count();
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentError {
    /// The patch has a single intensity level.
    Threshold(Error),
    /// No ellipse could be fitted to the foreground pixels.
    Fit(FitError),
}

impl core::fmt::Display for SegmentError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Threshold(e) => write!(f, "thresholding failed: {e}"),
            Self::Fit(e) => write!(f, "ellipse fit failed: {e}"),
        }
    }
}

impl core::error::Error for SegmentError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub threshold: OtsuThreshold,
    pub ellipse: Ellipse,
    /// Pixels whose centres lie inside the fitted ellipse.
    pub mask: Mask,
}

/// Otsu-separates the bright wall pixels of `patch` and fills the ellipse
/// fitted through them. Coordinates are patch-local.
pub fn segment_vessel(patch: &Grid) -> core::result::Result<Segmentation, SegmentError> {
    let threshold = otsu_threshold(patch.data()).map_err(SegmentError::Threshold)?;
    let (w, h) = patch.dims();
    let points: Vec<(f64, f64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| threshold.is_foreground(patch.get(x, y)))
        .map(|(x, y)| (x as f64, y as f64))
        .collect();
    let ellipse = fit_ellipse(&points).map_err(SegmentError::Fit)?;
    let mask = Mask::from_fn(w, h, |x, y| ellipse.contains(x as f64, y as f64));
    Ok(Segmentation { threshold, ellipse, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn patch(x: usize, y: usize, width: usize, height: usize, label: PatchLabel) -> PatchSpec {
        PatchSpec { x, y, width, height, label }
    }

    #[test]
    fn mean_ratio_cases() {
        let c = Grid::filled(4, 4, 0.3);
        assert!((mean_ratio(&c, &patch(1, 1, 2, 2, PatchLabel::Artifact), None).unwrap() - 1.0).abs() < 1e-12);
        let g = Grid::new(2, 2, vec![0.0, 0.0, 0.4, 0.4]).unwrap();
        let bottom = patch(0, 1, 2, 1, PatchLabel::Artifact);
        assert!((mean_ratio(&g, &bottom, None).unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(mean_ratio(&g, &patch(0, 0, 2, 1, PatchLabel::Artifact), None).unwrap(), 0.0);
        assert!(matches!(mean_ratio(&Grid::zeros(2, 2), &bottom, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn variance_ratio_cases() {
        let g = Grid::new(2, 2, vec![0.1, 0.3, 0.5, 0.9]).unwrap();
        let whole = patch(0, 0, 2, 2, PatchLabel::Boundary);
        assert!((variance_ratio(&g, &whole, None).unwrap() - 1.0).abs() < 1e-9);
        // image: mean 0.45, var = (0.1225 + 0.0225 + 0.0025 + 0.2025) / 4 = 0.0875
        // top row: mean 0.2, var 0.01
        let top = patch(0, 0, 2, 1, PatchLabel::Boundary);
        assert!((variance_ratio(&g, &top, None).unwrap() - 0.01 / 0.0875).abs() < 1e-6);
        let flat = Grid::new(2, 2, vec![0.2, 0.2, 0.5, 0.9]).unwrap();
        assert_eq!(variance_ratio(&flat, &top, None).unwrap(), 0.0);
    }

    #[test]
    fn region_restricts_the_reference_statistics() {
        let g = Grid::new(2, 2, vec![0.0, 0.0, 0.4, 0.4]).unwrap();
        let region = Mask::new(2, 2, vec![false, true, true, true]).unwrap();
        let r = mean_ratio(&g, &patch(0, 1, 2, 1, PatchLabel::Artifact), Some(&region)).unwrap();
        assert!((r - 0.4 / (0.8 / 3.0)).abs() < 1e-6);
    }

    #[test]
    fn patch_outside_is_rejected() {
        let g = Grid::filled(4, 4, 0.5);
        assert!(mean_ratio(&g, &patch(3, 3, 2, 1, PatchLabel::Artifact), None).is_err());
    }

    #[test]
    fn amr_avr_single_and_duplicated() {
        let g = Grid::from_fn(8, 8, |x, y| ((x * 3 + y * 5) % 7) as f32 / 7.0);
        let a = patch(1, 1, 3, 3, PatchLabel::Artifact);
        let b = patch(4, 2, 3, 4, PatchLabel::Boundary);
        let one = amr_avr(&g, &[a, b], None).unwrap();
        assert_eq!(one.artifact.amr, Some(mean_ratio(&g, &a, None).unwrap()));
        assert_eq!(one.artifact.avr, Some(variance_ratio(&g, &a, None).unwrap()));
        assert_eq!(one.boundary.avr, Some(variance_ratio(&g, &b, None).unwrap()));
        assert_eq!(one.boundary.amr, None);
        let two = amr_avr(&g, &[a, b, a, b], None).unwrap();
        assert!((two.artifact.avr.unwrap() - one.artifact.avr.unwrap()).abs() < 1e-12);
        assert!((two.boundary.avr.unwrap() - one.boundary.avr.unwrap()).abs() < 1e-12);
        assert!(amr_avr(&g, &[], None).is_err());
    }

    #[test]
    fn otsu_separates_two_levels() {
        let mut v = vec![0.1f32; 50];
        v.extend(vec![0.9f32; 50]);
        let t = otsu_threshold(&v).unwrap();
        assert!(t.intensity() > 0.1 && t.intensity() < 0.9);
        assert!(!t.is_foreground(0.1) && t.is_foreground(0.9));
        assert_eq!(t.bin, quantize(0.1));
    }

    #[test]
    fn otsu_single_bin_is_degenerate() {
        assert!(matches!(otsu_threshold(&[0.4; 20]), Err(Error::Degenerate(_))));
        assert!(otsu_threshold(&[]).is_err());
    }

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(128.0 / 255.0), 128);
    }

    #[test]
    fn dice_cases() {
        let a = Mask::from_fn(20, 10, |x, _| x < 10);
        let b = Mask::from_fn(20, 10, |x, _| x >= 10);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        let c = Mask::from_fn(20, 10, |x, _| (5..15).contains(&x));
        assert!((dice(&a, &c).unwrap() - 0.5).abs() < 1e-12);
        let e = Mask::filled(3, 3, false);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn dark_patch_cannot_be_segmented() {
        assert!(matches!(segment_vessel(&Grid::zeros(16, 16)), Err(SegmentError::Threshold(_))));
    }
}

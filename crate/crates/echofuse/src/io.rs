//! Image, map and mask files.
//!
//! * PGM: binary `P5`, maxval 255. Comments are accepted in the header on
//!   read and never written. Bytes map to `v / 255`; saving rounds half up.
//! * FMAP: the ASCII line `FMAP <width> <height>\n` followed by
//!   `width * height` little-endian f32 values, row-major, top row first.
//! * Masks are PGM files; bytes of 128 and above are set, 0 and 255 are
//!   written.

use std::fs;
use std::path::Path;

use echofuse_core::confidence::{ConfidenceKind, ConfidenceMap};
use echofuse_core::metrics::quantize;
use echofuse_core::{Grid, Image, Mask};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: value {value} at index {index} is outside [0, 1]")]
    Range { path: String, index: usize, value: f32 },
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), message: message.into() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pgm8,
    Fmap,
}

impl Format {
    /// `.fmap` selects FMAP, anything else PGM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("fmap") => Format::Fmap,
            _ => Format::Pgm8,
        }
    }
}

// ── PGM ─────────────────────────────────────────────────────────────────────

/// Parses a P5 file into `(width, height, bytes)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, &[u8]), String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments before each field
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n' && b != b'\r') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("malformed PGM header".into());
        }
        let text = std::str::from_utf8(&bytes[start..pos]).map_err(|_| "malformed PGM header")?;
        *field = text.parse().map_err(|_| "PGM header value out of range")?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval} (only 255 is accepted)"));
    }
    if w == 0 || h == 0 {
        return Err("PGM dimensions must be positive".into());
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after PGM maxval".into());
    }
    let payload = &bytes[pos + 1..];
    let n = w.checked_mul(h).ok_or("PGM dimensions overflow")?;
    if payload.len() != n {
        return Err(format!("PGM payload has {} bytes, expected {n}", payload.len()));
    }
    Ok((w, h, payload))
}

pub fn encode_pgm(width: usize, height: usize, bytes: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    out
}

// ── FMAP ────────────────────────────────────────────────────────────────────

pub fn decode_fmap(bytes: &[u8]) -> Result<Grid, String> {
    let end = bytes.iter().position(|&b| b == b'\n').ok_or("missing FMAP header line")?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| "malformed FMAP header")?;
    let parts: Vec<&str> = header.split(' ').collect();
    let (w, h) = match parts.as_slice() {
        ["FMAP", w, h] => (
            w.parse::<usize>().map_err(|_| "malformed FMAP width")?,
            h.parse::<usize>().map_err(|_| "malformed FMAP height")?,
        ),
        _ => return Err("malformed FMAP header".into()),
    };
    if w == 0 || h == 0 {
        return Err("FMAP dimensions must be positive".into());
    }
    let payload = &bytes[end + 1..];
    let n = w.checked_mul(h).and_then(|n| n.checked_mul(4)).ok_or("FMAP dimensions overflow")?;
    if payload.len() != n {
        return Err(format!("FMAP payload has {} bytes, expected {n}", payload.len()));
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Grid::new(w, h, data).map_err(|e| e.to_string())
}

pub fn encode_fmap(grid: &Grid) -> Vec<u8> {
    let mut out = format!("FMAP {} {}\n", grid.width(), grid.height()).into_bytes();
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

// ── Files ───────────────────────────────────────────────────────────────────

/// Reads a PGM or FMAP file (recognized by its magic) as an unrestricted
/// grid. PGM bytes are scaled by 1/255.
pub fn read_grid(path: &Path) -> Result<Grid, IoError> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"FMAP") {
        decode_fmap(&bytes).map_err(|m| format_err(path, m))
    } else {
        let (w, h, px) = decode_pgm(&bytes).map_err(|m| format_err(path, m))?;
        Grid::new(w, h, px.iter().map(|&b| b as f32 / 255.0).collect()).map_err(|e| format_err(path, e.to_string()))
    }
}

/// Like [`read_grid`] but every value must be finite and in [0, 1].
pub fn load_image(path: &Path) -> Result<Image, IoError> {
    let grid = read_grid(path)?;
    if let Some((index, &value)) = grid.data().iter().enumerate().find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
        return Err(IoError::Range { path: path.display().to_string(), index, value });
    }
    Image::from_grid(grid).map_err(|e| format_err(path, e.to_string()))
}

pub fn load_confidence(path: &Path, kind: ConfidenceKind) -> Result<ConfidenceMap, IoError> {
    let img = load_image(path)?;
    ConfidenceMap::new(img.into_grid(), kind).map_err(|e| format_err(path, e.to_string()))
}

/// Writes `grid` as PGM (values clamped to [0, 1], rounded half up) or as
/// FMAP (verbatim).
pub fn save_grid(grid: &Grid, path: &Path, format: Format) -> Result<(), IoError> {
    let bytes = match format {
        Format::Fmap => encode_fmap(grid),
        Format::Pgm8 => {
            let px: Vec<u8> = grid.data().iter().map(|&v| quantize(v)).collect();
            encode_pgm(grid.width(), grid.height(), &px)
        }
    };
    write_bytes(path, &bytes)
}

pub fn save_image(image: &Image, path: &Path, format: Format) -> Result<(), IoError> {
    save_grid(image.grid(), path, format)
}

pub fn load_mask(path: &Path) -> Result<Mask, IoError> {
    let bytes = read_bytes(path)?;
    let (w, h, px) = decode_pgm(&bytes).map_err(|m| format_err(path, m))?;
    Mask::new(w, h, px.iter().map(|&b| b >= 128).collect()).map_err(|e| format_err(path, e.to_string()))
}

pub fn save_mask(mask: &Mask, path: &Path) -> Result<(), IoError> {
    let px: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_bytes(path, &encode_pgm(mask.width(), mask.height(), &px))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| format_err(path, e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_endpoints() {
        let (w, h, px) = decode_pgm(b"P5\n2 1\n255\n\x00\xff").unwrap();
        assert_eq!((w, h, px), (2, 1, &[0u8, 255][..]));
    }

    #[test]
    fn pgm_comments_are_skipped() {
        let (w, h, px) = decode_pgm(b"P5 # made by hand\n1 # width\n1\n# maxval next\n255\n\x80").unwrap();
        assert_eq!((w, h, px[0]), (1, 1, 128));
    }

    #[test]
    fn pgm_rejects_bad_headers() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n255").is_err());
        assert!(decode_pgm(b"P5\nx 1\n255\n\x00").is_err());
    }

    #[test]
    fn pgm_quantization() {
        let g = Grid::new(3, 1, vec![1.0, 0.5, 0.0]).unwrap();
        let px: Vec<u8> = g.data().iter().map(|&v| quantize(v)).collect();
        assert_eq!(px, vec![255, 128, 0]);
        assert_eq!(encode_pgm(3, 1, &px), b"P5\n3 1\n255\n\xff\x80\x00".to_vec());
    }

    #[test]
    fn fmap_constant() {
        let mut bytes = b"FMAP 2 2\n".to_vec();
        for _ in 0..4 {
            bytes.extend_from_slice(&0.5f32.to_le_bytes());
        }
        let g = decode_fmap(&bytes).unwrap();
        assert_eq!(g.dims(), (2, 2));
        assert!(g.data().iter().all(|&v| v == 0.5));
        assert_eq!(encode_fmap(&g), bytes);
    }

    #[test]
    fn fmap_rejects_bad_input() {
        assert!(decode_fmap(b"FMAP 1 1\n\x00\x00").is_err());
        assert!(decode_fmap(b"FMAP 1\n\x00\x00\x00\x00").is_err());
        assert!(decode_fmap(b"FMAP  1 1\n\x00\x00\x00\x00").is_err());
        assert!(decode_fmap(b"FMAP 0 1\n").is_err());
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.FMAP")), Format::Fmap);
        assert_eq!(Format::from_path(Path::new("a/b.pgm")), Format::Pgm8);
        assert_eq!(Format::from_path(Path::new("b")), Format::Pgm8);
    }
}

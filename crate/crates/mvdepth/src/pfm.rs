//! Grayscale PFM (`Pf`) files.
//!
//! Layout: `Pf\n`, `W H\n`, a scale line whose sign selects the byte order
//! (negative: little endian), then `H` rows of `W` 32-bit floats stored
//! bottom row first. Files are always written little endian with scale
//! `-1.0000`, so a 1x1 map has a 15-byte header.

use std::path::Path;

use mvdepth_core::{DepthMap, InverseDepthMap};

use crate::error::{read_bytes, write_bytes, IoError, ParseError, Result};
use crate::header::Header;

/// Row-major float raster, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

pub fn encode(width: usize, height: usize, data: &[f32]) -> Vec<u8> {
    assert_eq!(data.len(), width * height, "raster size mismatch");
    let header = format!("Pf\n{width} {height}\n-1.0000\n");
    let mut out = Vec::with_capacity(header.len() + 4 * data.len());
    out.extend_from_slice(header.as_bytes());
    for row in data.chunks_exact(width).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<FloatMap, ParseError> {
    let mut h = Header::new(bytes);
    match h.token("magic")? {
        "Pf" => {}
        "PF" => return Err(ParseError::new("magic", "color PFM is not supported")),
        other => return Err(ParseError::new("magic", format!("expected Pf, found {other:?}"))),
    }
    let width = h.dimension("width")?;
    let height = h.dimension("height")?;
    let tok = h.token("scale")?;
    let scale: f64 = tok
        .parse()
        .map_err(|_| ParseError::new("scale", format!("{tok:?} is not a number")))?;
    if !scale.is_finite() || scale == 0.0 {
        return Err(ParseError::new("scale", format!("{tok:?} must be finite and non-zero")));
    }
    let payload = h.payload("scale")?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| ParseError::new("height", "raster too large"))?;
    if payload.len() < expected {
        return Err(ParseError::new(
            "payload",
            format!("truncated: {} of {expected} bytes", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(ParseError::new(
            "payload",
            format!("{} trailing bytes", payload.len() - expected),
        ));
    }
    let little = scale < 0.0;
    let mut data = vec![0f32; width * height];
    for (r, row) in payload.chunks_exact(4 * width).enumerate() {
        let y = height - 1 - r;
        for (x, b) in row.chunks_exact(4).enumerate() {
            let b = [b[0], b[1], b[2], b[3]];
            data[y * width + x] = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        }
    }
    Ok(FloatMap { width, height, data })
}

pub fn read(path: &Path) -> Result<FloatMap> {
    decode(&read_bytes(path)?).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write(path: &Path, width: usize, height: usize, data: &[f32]) -> Result<()> {
    write_bytes(path, &encode(width, height, data))
}

pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let m = read(path)?;
    DepthMap::new(m.width, m.height, m.data).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_depth(path: &Path, d: &DepthMap) -> Result<()> {
    write(path, d.width(), d.height(), d.data())
}

pub fn read_inverse(path: &Path) -> Result<InverseDepthMap> {
    let m = read(path)?;
    InverseDepthMap::new(m.width, m.height, m.data).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_inverse(path: &Path, d: &InverseDepthMap) -> Result<()> {
    write(path, d.width(), d.height(), d.data())
}

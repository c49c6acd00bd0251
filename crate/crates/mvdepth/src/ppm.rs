//! Binary PPM (`P6`) images with maxval 255.

use std::path::Path;

use mvdepth_core::Image;

use crate::error::{read_bytes, write_bytes, IoError, ParseError, Result};
use crate::header::Header;

/// Values scaled to `[0, 1]` as `v / 255`.
pub fn decode(bytes: &[u8]) -> Result<Image, ParseError> {
    let mut h = Header::new(bytes);
    let magic = h.token("magic")?;
    if magic != "P6" {
        return Err(ParseError::new("magic", format!("expected P6, found {magic:?}")));
    }
    let width = h.dimension("width")?;
    let height = h.dimension("height")?;
    let tok = h.token("maxval")?;
    if tok != "255" {
        return Err(ParseError::new("maxval", format!("{tok:?}, only 255 is supported")));
    }
    let payload = h.payload("maxval")?;
    let expected = width * height * 3;
    if payload.len() < expected {
        return Err(ParseError::new(
            "payload",
            format!("truncated: {} of {expected} bytes", payload.len()),
        ));
    }
    let data = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    Image::new(width, height, 3, data).map_err(|e| ParseError::new("payload", e.to_string()))
}

/// Stores `round(clamp(v, 0, 1) * 255)`. Single-channel images are written
/// as gray.
pub fn encode(img: &Image) -> Vec<u8> {
    let (w, h) = img.dims();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v = img.get(x, y, c.min(img.channels() - 1));
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    out
}

pub fn read(path: &Path) -> Result<Image> {
    decode(&read_bytes(path)?).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write(path: &Path, img: &Image) -> Result<()> {
    write_bytes(path, &encode(img))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_images() {
        let white = decode(b"P6\n1 1\n255\n\xff\xff\xff").unwrap();
        assert_eq!(white.data(), &[1.0, 1.0, 1.0]);
        let two = decode(b"P6 2 1 255\n\0\0\0\xff\0\0").unwrap();
        assert_eq!(two.data(), &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn comments_skipped() {
        let img = decode(b"P6\n# made by hand\n1 1\n255\n\x01\x02\x03").unwrap();
        assert_eq!(img.get(0, 0, 2), 3.0 / 255.0);
    }

    #[test]
    fn rejects() {
        assert_eq!(decode(b"P5\n1 1\n255\n\0").unwrap_err().field, "magic");
        assert_eq!(decode(b"P6\n1 1\n65535\n\0\0\0").unwrap_err().field, "maxval");
        assert_eq!(decode(b"P6\n2 1\n255\n\0\0\0").unwrap_err().field, "payload");
    }
}

//! Dense row-major raster types.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Multi-channel floating point image, row-major with interleaved channels.
///
/// Pixel centers sit at integer coordinates with the origin at the top-left
/// pixel, so the sampleable domain is `[0, width-1] x [0, height-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidSample("image must be nonempty".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidSample(alloc::format!(
                "image buffer holds {} values, expected {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
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
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Per-channel mean over all pixels.
    /// Per-channel mean, accumulated as offsets from the first pixel so a
    /// constant image yields its value exactly.
    pub fn channel_means(&self) -> Vec<f64> {
        let first = &self.data[..self.channels];
        let mut sums = vec![0.0; self.channels];
        for px in self.data.chunks_exact(self.channels) {
            for ((s, v), f) in sums.iter_mut().zip(px).zip(first) {
                *s += v - f;
            }
        }
        let n = (self.width * self.height) as f64;
        sums.iter().zip(first).map(|(s, f)| f + s / n).collect()
    }

    /// Bilinear sample of channel `c` at a continuous position that must lie
    /// inside the pixel-center domain.
    #[inline]
    pub(crate) fn bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        let x0 = libm::floor(x) as usize;
        let y0 = libm::floor(y) as usize;
        let x0 = x0.min(self.width - 1);
        let y0 = y0.min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
        let bottom = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Per-pixel validity flags, row-major.
pub type ValidityMask = Vec<bool>;

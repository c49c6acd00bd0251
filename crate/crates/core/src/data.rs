//! Views, samples and depth rasters.
//!
//! Depth and inverse depth rasters use `f32` storage so they round-trip
//! through 32-bit float files unchanged. A value that is not finite or not
//! strictly positive marks a pixel without depth.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pose};
use crate::image::Image;

#[inline]
pub fn is_valid_depth(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

macro_rules! scalar_map {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<f32>,
        }

        impl $name {
            pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
                if width == 0 || height == 0 || data.len() != width * height {
                    return Err(Error::InvalidSample(format!(
                        "{} of {}x{} cannot hold {} values",
                        stringify!($name),
                        width,
                        height,
                        data.len()
                    )));
                }
                Ok(Self {
                    width,
                    height,
                    data,
                })
            }

            pub fn filled(width: usize, height: usize, value: f32) -> Self {
                Self {
                    width,
                    height,
                    data: alloc::vec![value; width * height],
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
            pub fn dims(&self) -> (usize, usize) {
                (self.width, self.height)
            }

            #[inline]
            pub fn data(&self) -> &[f32] {
                &self.data
            }

            #[inline]
            pub fn data_mut(&mut self) -> &mut [f32] {
                &mut self.data
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> f32 {
                self.data[y * self.width + x]
            }

            #[inline]
            pub fn is_valid_at(&self, i: usize) -> bool {
                is_valid_depth(self.data[i] as f64)
            }

            pub fn valid_count(&self) -> usize {
                (0..self.data.len()).filter(|&i| self.is_valid_at(i)).count()
            }

            /// Values widened to `f64`, invalid pixels mapped to `0.0`.
            pub fn to_f64(&self) -> Vec<f64> {
                self.data
                    .iter()
                    .map(|&v| if is_valid_depth(v as f64) { v as f64 } else { 0.0 })
                    .collect()
            }
        }
    };
}

scalar_map!(DepthMap);
scalar_map!(InverseDepthMap);

/// Reciprocal on valid pixels; invalid pixels become `0`.
pub fn depth_to_inverse(d: &DepthMap) -> InverseDepthMap {
    InverseDepthMap {
        width: d.width,
        height: d.height,
        data: d.data.iter().map(|&v| reciprocal_or_zero(v)).collect(),
    }
}

pub fn inverse_to_depth(inv: &InverseDepthMap) -> DepthMap {
    DepthMap {
        width: inv.width,
        height: inv.height,
        data: inv.data.iter().map(|&v| reciprocal_or_zero(v)).collect(),
    }
}

#[inline]
fn reciprocal_or_zero(v: f32) -> f32 {
    if is_valid_depth(v as f64) {
        let r = 1.0 / v;
        if is_valid_depth(r as f64) {
            return r;
        }
    }
    0.0
}

/// One calibrated image. `pose` maps this view's camera frame into the
/// keyview frame.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub image: Image,
    pub pose: Pose,
    pub intrinsics: Intrinsics,
}

/// A keyview with ground truth depth plus the other views used to estimate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    keyview: View,
    others: Vec<View>,
    gt_depth: DepthMap,
    gt_range: Option<(f64, f64)>,
}

/// Smallest image side accepted for any view (a 5x5 matching window).
pub const MIN_IMAGE_SIDE: usize = 5;

impl Sample {
    pub fn new(
        keyview: View,
        others: Vec<View>,
        gt_depth: DepthMap,
        gt_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        if !keyview.pose.is_identity(1e-12) {
            return Err(Error::InvalidSample("keyview pose must be identity".into()));
        }
        if others.is_empty() {
            return Err(Error::InvalidSample("at least one other view required".into()));
        }
        if gt_depth.dims() != keyview.image.dims() {
            return Err(Error::ResolutionMismatch {
                expected: keyview.image.dims(),
                actual: gt_depth.dims(),
            });
        }
        for v in core::iter::once(&keyview).chain(&others) {
            let (w, h) = v.image.dims();
            if w < MIN_IMAGE_SIDE || h < MIN_IMAGE_SIDE {
                return Err(Error::InvalidSample(format!(
                    "image {w}x{h} smaller than the {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} matching window"
                )));
            }
        }
        if let Some((lo, hi)) = gt_range {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::InvalidSample(format!("invalid gt_range ({lo}, {hi})")));
            }
        }
        Ok(Self {
            keyview,
            others,
            gt_depth,
            gt_range,
        })
    }

    pub fn keyview(&self) -> &View {
        &self.keyview
    }

    pub fn others(&self) -> &[View] {
        &self.others
    }

    pub fn gt_depth(&self) -> &DepthMap {
        &self.gt_depth
    }

    pub fn gt_range(&self) -> Option<(f64, f64)> {
        self.gt_range
    }

    /// Copy of the sample restricted to the other views at `indices`
    /// (zero-based into [`Sample::others`]), in the given order.
    pub fn with_views(&self, indices: &[usize]) -> Result<Self> {
        let mut others = Vec::with_capacity(indices.len());
        for &i in indices {
            let v = self.others.get(i).ok_or_else(|| {
                Error::InvalidSample(format!("view index {i} out of range ({})", self.others.len()))
            })?;
            others.push(v.clone());
        }
        Self::new(self.keyview.clone(), others, self.gt_depth.clone(), self.gt_range)
    }

    pub fn with_others(&self, others: Vec<View>) -> Result<Self> {
        Self::new(self.keyview.clone(), others, self.gt_depth.clone(), self.gt_range)
    }

    pub fn with_keyview_image(&self, image: Image) -> Result<Self> {
        let keyview = View {
            image,
            ..self.keyview.clone()
        };
        Self::new(keyview, self.others.clone(), self.gt_depth.clone(), self.gt_range)
    }

    pub fn into_parts(self) -> (View, Vec<View>, DepthMap, Option<(f64, f64)>) {
        (self.keyview, self.others, self.gt_depth, self.gt_range)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_roundtrip() {
        let d = DepthMap::new(3, 1, alloc::vec![2.0, 0.0, -1.0]).unwrap();
        let inv = depth_to_inverse(&d);
        assert_eq!(inv.data(), &[0.5, 0.0, 0.0]);
        assert_eq!(inverse_to_depth(&inv).data(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn nan_and_inf_are_invalid() {
        let d = DepthMap::new(2, 1, alloc::vec![f32::NAN, f32::INFINITY]).unwrap();
        assert_eq!(d.valid_count(), 0);
        assert_eq!(depth_to_inverse(&d).data(), &[0.0, 0.0]);
    }

    #[test]
    fn map_shape_checked() {
        assert!(DepthMap::new(2, 2, alloc::vec![1.0; 3]).is_err());
        assert!(DepthMap::new(0, 0, alloc::vec![]).is_err());
    }
}

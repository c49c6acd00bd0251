//! Rigid poses, pinhole intrinsics and plane-induced homographies.
//!
//! A pose labelled `A -> B` maps points as `x_B = R * x_A + t`. Samples store
//! every view's pose as `view -> keyview`; warping the keyview into another
//! view therefore goes through [`Pose::inverse`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::image::{Image, ValidityMask};

/// Orthonormality tolerance enforced on every constructed pose.
pub const POSE_TOLERANCE: f64 = 1e-6;

/// Source coordinates this close outside the pixel-center domain still count
/// as in bounds and are clamped onto the border. Absorbs last-ulp noise from
/// the homography product so that mathematically equal warps agree on
/// validity.
pub const WARP_BOUNDS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, rejecting rotations that are not orthonormal within
    /// [`POSE_TOLERANCE`] or have non-finite entries.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        check_rotation(&rotation, POSE_TOLERANCE)?;
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::from(t),
        }
    }

    /// Parses a row-major 3x4 `[R | t]` matrix. Rotations within `tolerance`
    /// of orthonormal are accepted and projected onto the nearest rotation so
    /// the result satisfies the tight [`POSE_TOLERANCE`].
    pub fn from_3x4_row_major(m: &[f64; 12], tolerance: f64) -> Result<Self> {
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        check_rotation(&rotation, tolerance)?;
        let rotation = if check_rotation(&rotation, POSE_TOLERANCE).is_ok() {
            rotation
        } else {
            Rotation3::from_matrix_eps(&rotation, 1e-15, 100, Rotation3::identity()).into_inner()
        };
        Self::new(rotation, translation)
    }

    pub fn to_3x4_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t[0],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t[1],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t[2],
        ]
    }

    #[inline]
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Same rotation, translation multiplied by `s`.
    pub fn with_scaled_translation(&self, s: f64) -> Self {
        Self {
            rotation: self.rotation,
            translation: self.translation * s,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self` is `A -> B`, `next` is `B -> C`; the result is `A -> C`.
    pub fn then(&self, next: &Pose) -> Self {
        Self {
            rotation: next.rotation * self.rotation,
            translation: next.rotation * self.translation + next.translation,
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.rotation - Matrix3::identity()).amax() <= tol && self.translation.amax() <= tol
    }
}

fn check_rotation(r: &Matrix3<f64>, tol: f64) -> Result<()> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPose("non-finite rotation".into()));
    }
    let ortho = (r.transpose() * r - Matrix3::identity()).amax();
    if ortho > tol {
        return Err(Error::InvalidPose(format!(
            "rotation deviates from orthonormal by {ortho:e} (tolerance {tol:e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > tol {
        return Err(Error::InvalidPose(format!("rotation determinant {det}")));
    }
    Ok(())
}

/// `A -> B` followed by `B -> C`.
pub fn compose_pose(a: &Pose, b: &Pose) -> Pose {
    a.then(b)
}

pub fn invert_pose(p: &Pose) -> Pose {
    p.inverse()
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if ![fx, fy, cx, cy].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidIntrinsics("non-finite entry".into()));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Camera-frame point at depth `z` behind pixel `(u, v)`.
    pub fn backproject(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }

    /// Pixel coordinates of a camera-frame point; `None` at or behind the
    /// camera plane.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// A 3x3 projective map between pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Maps `(u, v)`; `None` when the homogeneous scale is not positive.
    #[inline]
    pub fn apply(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let m = &self.0;
        let w = m[(2, 0)] * u + m[(2, 1)] * v + m[(2, 2)];
        if !(w > 0.0) {
            return None;
        }
        let x = (m[(0, 0)] * u + m[(0, 1)] * v + m[(0, 2)]) / w;
        let y = (m[(1, 0)] * u + m[(1, 1)] * v + m[(1, 2)]) / w;
        Some((x, y))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Homography induced by the fronto-parallel keyview plane `z = 1/inv_depth`:
/// `H = K_other (R + t n^T inv_depth) K_key^-1` with `n = (0, 0, 1)`.
///
/// `inv_depth = 0` is the plane at infinity.
pub fn plane_sweep_homography(
    k_key: &Intrinsics,
    k_other: &Intrinsics,
    pose_key_to_other: &Pose,
    inv_depth: f64,
) -> Homography {
    let mut m = *pose_key_to_other.rotation();
    let t = pose_key_to_other.translation();
    for r in 0..3 {
        m[(r, 2)] += t[r] * inv_depth;
    }
    Homography(k_other.matrix() * m * k_key.inverse_matrix())
}

/// Warps `img` into an `out_w x out_h` raster: output pixel `(u, v)` samples
/// `img` bilinearly at `H (u, v, 1)`. Samples outside the pixel-center domain
/// (beyond [`WARP_BOUNDS_EPS`]) are zero and flagged invalid.
pub fn warp_bilinear(
    img: &Image,
    h: &Homography,
    out_w: usize,
    out_h: usize,
) -> (Image, ValidityMask) {
    let channels = img.channels();
    let mut out = Image::filled(out_w, out_h, channels, 0.0);
    let mut valid = vec![false; out_w * out_h];
    warp_rows_into(img, h, out_w, 0..out_h, out.data_mut(), &mut valid);
    (out, valid)
}

pub(crate) fn warp_rows_into(
    img: &Image,
    h: &Homography,
    out_w: usize,
    rows: core::ops::Range<usize>,
    out: &mut [f64],
    valid: &mut [bool],
) {
    let channels = img.channels();
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    for (ri, v) in rows.enumerate() {
        for u in 0..out_w {
            let idx = ri * out_w + u;
            let Some((x, y)) = h.apply(u as f64, v as f64) else {
                continue;
            };
            if !(x >= -WARP_BOUNDS_EPS
                && x <= max_x + WARP_BOUNDS_EPS
                && y >= -WARP_BOUNDS_EPS
                && y <= max_y + WARP_BOUNDS_EPS)
            {
                continue;
            }
            let x = x.clamp(0.0, max_x);
            let y = y.clamp(0.0, max_y);
            valid[idx] = true;
            for c in 0..channels {
                out[idx * channels + c] = img.bilinear(x, y, c);
            }
        }
    }
}

/// Warped source positions of every output pixel; used by tests and
/// diagnostics.
pub fn homography_grid(h: &Homography, w: usize, hgt: usize) -> Vec<Option<(f64, f64)>> {
    (0..hgt)
        .flat_map(|v| (0..w).map(move |u| h.apply(u as f64, v as f64)))
        .collect()
}

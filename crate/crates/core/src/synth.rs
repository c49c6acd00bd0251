//! Deterministic raycast renderer for synthetic multi-view samples.
//!
//! Each pixel casts a ray through its center and takes the nearest
//! intersection with the scene's planes and spheres. Depth is the camera
//! frame `z` of the hit; color is value noise evaluated at the world-space
//! hit point, so every camera sees the same surface texture.
//!
//! The noise lattice is hashed with the MurmurHash3 64-bit finalizer
//! (`fmix64`, constants `0xff51afd7ed558ccd` and `0xc4ceb9fe1a85ec53`) and
//! interpolated trilinearly. Rendering only uses IEEE basic operations and
//! `sqrt`, which are correctly rounded, so output is bit-identical across
//! platforms.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Rotation3, Vector3};

use crate::augmentation::rng_from_seed;
use crate::data::{DepthMap, Sample, View};
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pose};
use crate::image::Image;
use crate::par::map_indices;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Infinite plane through `point` with unit `normal`.
    Plane { point: [f64; 3], normal: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
}

/// Multi-octave value noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Texture {
    pub seed: u64,
    /// Lattice cells per meter at the coarsest octave.
    pub scale: f64,
    pub octaves: u32,
}

impl Default for Texture {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            scale: 20.0,
            octaves: 3,
        }
    }
}

/// A camera with its world-to-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub pose: Pose,
    pub intrinsics: Intrinsics,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// Camera at `position` (world meters) with rotation `world_to_camera`.
    pub fn at(position: [f64; 3], world_to_camera: Rotation3<f64>, intrinsics: Intrinsics, width: usize, height: usize) -> Self {
        let r = world_to_camera.into_inner();
        let t = -(r * Vector3::from(position));
        Self {
            pose: Pose::new(r, t).expect("rotation is orthonormal"),
            intrinsics,
            width,
            height,
        }
    }

    /// Axis-aligned camera (looking down world +z) at `position`.
    pub fn forward(position: [f64; 3], intrinsics: Intrinsics, width: usize, height: usize) -> Self {
        Self::at(position, Rotation3::identity(), intrinsics, width, height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    pub texture: Texture,
    /// The first camera becomes the keyview.
    pub cameras: Vec<Camera>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(Error::InvalidScene("scene needs at least one primitive".into()));
        }
        if self.cameras.len() < 2 {
            return Err(Error::InvalidScene("scene needs at least two cameras".into()));
        }
        for p in &self.primitives {
            match *p {
                Primitive::Plane { normal, .. } => {
                    let n = Vector3::from(normal).norm();
                    if (n - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidScene(format!("plane normal has length {n}")));
                    }
                }
                Primitive::Sphere { radius, .. } => {
                    if !(radius > 0.0 && radius.is_finite()) {
                        return Err(Error::InvalidScene(format!("sphere radius {radius}")));
                    }
                }
            }
        }
        for (i, c) in self.cameras.iter().enumerate() {
            Intrinsics::new(c.intrinsics.fx, c.intrinsics.fy, c.intrinsics.cx, c.intrinsics.cy)
                .map_err(|e| Error::InvalidScene(format!("camera {i}: {e}")))?;
            if c.width == 0 || c.height == 0 {
                return Err(Error::InvalidScene(format!("camera {i} has an empty raster")));
            }
        }
        if !(self.texture.scale > 0.0) || self.texture.octaves == 0 {
            return Err(Error::InvalidScene("texture needs positive scale and octaves".into()));
        }
        Ok(())
    }
}

#[inline]
fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

/// Lattice value in `[0, 1)`.
#[inline]
fn lattice(ix: i64, iy: i64, iz: i64, salt: u64) -> f64 {
    let h = fmix64(salt ^ fmix64(ix as u64 ^ fmix64(iy as u64 ^ fmix64(iz as u64))));
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

fn value_noise(p: [f64; 3], salt: u64) -> f64 {
    let fl = [libm::floor(p[0]), libm::floor(p[1]), libm::floor(p[2])];
    let i = [fl[0] as i64, fl[1] as i64, fl[2] as i64];
    let t = [p[0] - fl[0], p[1] - fl[1], p[2] - fl[2]];
    let mut acc = 0.0;
    for corner in 0..8u32 {
        let dx = (corner & 1) as i64;
        let dy = ((corner >> 1) & 1) as i64;
        let dz = ((corner >> 2) & 1) as i64;
        let wx = if dx == 1 { t[0] } else { 1.0 - t[0] };
        let wy = if dy == 1 { t[1] } else { 1.0 - t[1] };
        let wz = if dz == 1 { t[2] } else { 1.0 - t[2] };
        acc += wx * wy * wz * lattice(i[0] + dx, i[1] + dy, i[2] + dz, salt);
    }
    acc
}

impl Texture {
    /// Color channel `c` at world point `p`, in `[0, 1]`.
    pub fn sample(&self, p: &Vector3<f64>, c: usize) -> f64 {
        let mut freq = self.scale;
        let mut amp = 1.0;
        let mut sum = 0.0;
        let mut norm = 0.0;
        for o in 0..self.octaves {
            let salt = fmix64(self.seed ^ ((c as u64) << 32) ^ o as u64);
            sum += amp * value_noise([p.x * freq, p.y * freq, p.z * freq], salt);
            norm += amp;
            freq *= 2.0;
            amp *= 0.5;
        }
        sum / norm
    }
}

const MIN_HIT_DISTANCE: f64 = 1e-9;

/// Ray parameter of the nearest forward hit of `origin + lambda * dir`.
fn intersect(p: &Primitive, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    match *p {
        Primitive::Plane { point, normal } => {
            let n = Vector3::from(normal);
            let denom = n.dot(dir);
            if denom == 0.0 {
                return None;
            }
            let lambda = n.dot(&(Vector3::from(point) - origin)) / denom;
            (lambda > MIN_HIT_DISTANCE).then_some(lambda)
        }
        Primitive::Sphere { center, radius } => {
            let oc = origin - Vector3::from(center);
            let a = dir.dot(dir);
            let half_b = dir.dot(&oc);
            let c = oc.dot(&oc) - radius * radius;
            let disc = half_b * half_b - a * c;
            if disc < 0.0 {
                return None;
            }
            let sq = libm::sqrt(disc);
            let near = (-half_b - sq) / a;
            if near > MIN_HIT_DISTANCE {
                return Some(near);
            }
            let far = (-half_b + sq) / a;
            (far > MIN_HIT_DISTANCE).then_some(far)
        }
    }
}

/// Renders camera `index` of the scene: RGB image and camera-frame depth.
/// Pixels whose ray misses every primitive are black with invalid depth.
pub fn render_camera(scene: &SceneSpec, index: usize) -> Result<(Image, DepthMap)> {
    scene.validate()?;
    let cam = scene
        .cameras
        .get(index)
        .ok_or_else(|| Error::InvalidScene(format!("no camera {index}")))?;
    let (w, h) = (cam.width, cam.height);
    let cam_to_world = cam.pose.inverse();
    let origin = *cam_to_world.translation();
    let rot = *cam_to_world.rotation();
    let k = cam.intrinsics;

    let rows = map_indices(h, |v| {
        let mut colors = Vec::with_capacity(w * 3);
        let mut depths = Vec::with_capacity(w);
        for u in 0..w {
            let dir_cam = Vector3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
            let dir = rot * dir_cam;
            let mut nearest: Option<f64> = None;
            for p in &scene.primitives {
                if let Some(l) = intersect(p, &origin, &dir) {
                    if nearest.is_none_or(|n| l < n) {
                        nearest = Some(l);
                    }
                }
            }
            match nearest {
                Some(lambda) => {
                    let hit = origin + dir * lambda;
                    for c in 0..3 {
                        colors.push(scene.texture.sample(&hit, c));
                    }
                    // dir_cam has unit z, so the ray parameter is the depth.
                    depths.push(lambda as f32);
                }
                None => {
                    colors.extend_from_slice(&[0.0; 3]);
                    depths.push(0.0);
                }
            }
        }
        (colors, depths)
    });

    let mut colors = Vec::with_capacity(w * h * 3);
    let mut depths = Vec::with_capacity(w * h);
    for (c, d) in rows {
        colors.extend_from_slice(&c);
        depths.extend_from_slice(&d);
    }
    Ok((Image::new(w, h, 3, colors)?, DepthMap::new(w, h, depths)?))
}

/// Renders the whole scene as a sample; the ground truth range is the span
/// of valid keyview depths.
pub fn render(scene: &SceneSpec) -> Result<Sample> {
    scene.validate()?;
    let (key_image, gt) = render_camera(scene, 0)?;
    let key_pose = scene.cameras[0].pose;
    let keyview = View {
        image: key_image,
        pose: Pose::identity(),
        intrinsics: scene.cameras[0].intrinsics,
    };
    let others = (1..scene.cameras.len())
        .map(|i| {
            let (image, _) = render_camera(scene, i)?;
            let cam = &scene.cameras[i];
            Ok(View {
                image,
                // view frame -> world -> keyview frame
                pose: cam.pose.inverse().then(&key_pose),
                intrinsics: cam.intrinsics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let range = gt
        .data()
        .iter()
        .filter(|d| d.is_finite() && **d > 0.0)
        .fold(None, |acc: Option<(f64, f64)>, &d| {
            let d = d as f64;
            Some(acc.map_or((d, d), |(lo, hi)| (lo.min(d), hi.max(d))))
        });
    Sample::new(keyview, others, gt, range)
}

/// Square pinhole intrinsics with the principal point at the raster center.
pub fn centered_intrinsics(focal: f64, width: usize, height: usize) -> Intrinsics {
    Intrinsics::new(focal, focal, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
        .expect("positive focal")
}

/// Fronto-parallel textured plane at `depth` seen by a keyview at the origin
/// and one axis-aligned camera per entry of `offsets` (world meters).
pub fn plane_scene(depth: f64, size: usize, focal: f64, offsets: &[[f64; 3]]) -> SceneSpec {
    let k = centered_intrinsics(focal, size, size);
    let mut cameras = alloc::vec![Camera::forward([0.0; 3], k, size, size)];
    cameras.extend(offsets.iter().map(|&o| Camera::forward(o, k, size, size)));
    SceneSpec {
        primitives: alloc::vec![Primitive::Plane {
            point: [0.0, 0.0, depth],
            normal: [0.0, 0.0, -1.0],
        }],
        texture: Texture::default(),
        cameras,
    }
}

/// Seeded scene: a slanted background plane 4-8 m away, one to three
/// spheres between 1.5 and 3.5 m, and `n_other` cameras scattered within
/// 0.3 m of the keyview with rotations under 2 degrees.
pub fn random_scene(seed: u64, size: usize, focal: f64, n_other: usize) -> SceneSpec {
    use rand_core::Rng;
    let mut rng = rng_from_seed(seed);
    let mut unit = move || rng.next_u32() as f64 / 4_294_967_296.0;
    let k = centered_intrinsics(focal, size, size);

    let bg_depth = 4.0 + 4.0 * unit();
    let tilt_x = (unit() - 0.5) * 0.4;
    let tilt_y = (unit() - 0.5) * 0.4;
    let normal = Vector3::new(tilt_x, tilt_y, -1.0).normalize();
    let mut primitives = alloc::vec![Primitive::Plane {
        point: [0.0, 0.0, bg_depth],
        normal: [normal.x, normal.y, normal.z],
    }];
    let n_spheres = 1 + (unit() * 3.0) as usize;
    for _ in 0..n_spheres {
        let z = 1.5 + 2.0 * unit();
        let half_fov = 0.5 * size as f64 / focal;
        primitives.push(Primitive::Sphere {
            center: [(unit() - 0.5) * half_fov * z, (unit() - 0.5) * half_fov * z, z],
            radius: 0.2 + 0.3 * unit(),
        });
    }
    let mut cameras = alloc::vec![Camera::forward([0.0; 3], k, size, size)];
    for _ in 0..n_other {
        let pos = [(unit() - 0.5) * 0.6, (unit() - 0.5) * 0.6, (unit() - 0.5) * 0.1];
        let max_angle = 2.0f64.to_radians();
        let rot = Rotation3::from_euler_angles(
            (unit() - 0.5) * max_angle,
            (unit() - 0.5) * max_angle,
            (unit() - 0.5) * max_angle,
        );
        cameras.push(Camera::at(pos, rot, k, size, size));
    }
    SceneSpec {
        primitives,
        texture: Texture {
            seed: seed ^ 0x7e47,
            ..Texture::default()
        },
        cameras,
    }
}

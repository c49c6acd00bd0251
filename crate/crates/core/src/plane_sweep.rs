//! Plane-sweep cost volumes.
//!
//! Every other view is warped onto the keyview through the homography of a
//! fronto-parallel plane for each inverse-depth hypothesis, and each keyview
//! pixel is scored against the warped image with ZNCC over a square window
//! pooled across all color channels.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Sample, View};
use crate::error::{Error, Result};
use crate::geometry::{plane_sweep_homography, warp_bilinear};
use crate::image::Image;
use crate::par::map_indices;

/// Depth range used when no ground truth range is supplied (meters).
pub const DEFAULT_DEPTH_RANGE: (f64, f64) = (0.2, 100.0);

/// Patches with per-element variance below this are treated as textureless.
pub const MIN_PATCH_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Nearest swept depth (meters).
    pub d_min: f64,
    /// Farthest swept depth (meters).
    pub d_max: f64,
    /// Number of inverse-depth hypotheses.
    pub n_hyp: usize,
    /// Half-size of the square matching window.
    pub patch_radius: usize,
    /// Temperature of the softmin turning costs into hypothesis probabilities.
    pub softmin_temp: f64,
    /// Temperature of the per-view confidence weights used by weighted fusion.
    pub weight_temp: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d_min: DEFAULT_DEPTH_RANGE.0,
            d_max: DEFAULT_DEPTH_RANGE.1,
            n_hyp: 64,
            patch_radius: 2,
            softmin_temp: 0.05,
            weight_temp: 0.25,
        }
    }
}

impl SweepConfig {
    pub fn with_range(self, d_min: f64, d_max: f64) -> Self {
        Self {
            d_min,
            d_max,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_min.is_finite() && self.d_max.is_finite() && 0.0 < self.d_min && self.d_min < self.d_max) {
            return Err(Error::InvalidConfig(format!(
                "depth range must satisfy 0 < d_min < d_max, got ({}, {})",
                self.d_min, self.d_max
            )));
        }
        if self.n_hyp < 2 {
            return Err(Error::InvalidConfig(format!("n_hyp must be >= 2, got {}", self.n_hyp)));
        }
        if self.patch_radius < 1 {
            return Err(Error::InvalidConfig("patch_radius must be >= 1".into()));
        }
        if !(self.softmin_temp > 0.0 && self.softmin_temp.is_finite())
            || !(self.weight_temp > 0.0 && self.weight_temp.is_finite())
        {
            return Err(Error::InvalidConfig("temperatures must be positive".into()));
        }
        Ok(())
    }

    /// Config with the depth range chosen by `source` for `sample`.
    pub fn for_sample(&self, sample: &Sample, source: RangeSource) -> Self {
        let (lo, hi) = source.resolve(sample.gt_range());
        self.with_range(lo, hi)
    }
}

/// Where the swept depth range comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeSource {
    /// The sample's ground truth range, or the default when it has none.
    GroundTruth,
    /// [`DEFAULT_DEPTH_RANGE`].
    Default,
    /// A fixed range in meters.
    Fixed(f64, f64),
}

impl RangeSource {
    pub fn resolve(&self, gt_range: Option<(f64, f64)>) -> (f64, f64) {
        match *self {
            RangeSource::GroundTruth => match gt_range {
                // A degenerate ground truth range cannot be swept; widen it.
                Some((lo, hi)) if lo < hi => (lo, hi),
                Some((lo, _)) => (lo / 1.05, lo * 1.05),
                None => DEFAULT_DEPTH_RANGE,
            },
            RangeSource::Default => DEFAULT_DEPTH_RANGE,
            RangeSource::Fixed(lo, hi) => (lo, hi),
        }
    }
}

/// Inverse depths uniformly spaced between `1/d_max` and `1/d_min`,
/// ascending.
pub fn build_hypotheses(cfg: &SweepConfig) -> Vec<f64> {
    let rho_min = 1.0 / cfg.d_max;
    let rho_max = 1.0 / cfg.d_min;
    let step = (rho_max - rho_min) / (cfg.n_hyp - 1) as f64;
    (0..cfg.n_hyp).map(|k| rho_min + k as f64 * step).collect()
}

/// Per-hypothesis matching costs over the keyview raster.
///
/// Layout is hypothesis-major: entry `(k, i)` lives at `k * width * height + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    hypotheses: Vec<f64>,
    costs: Vec<f64>,
    valid: Vec<bool>,
}

impl CostVolume {
    pub fn new(
        width: usize,
        height: usize,
        hypotheses: Vec<f64>,
        costs: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height * hypotheses.len();
        if hypotheses.is_empty() || costs.len() != n || valid.len() != n {
            return Err(Error::VolumeMismatch(format!(
                "{}x{}x{} volume with {} costs and {} flags",
                hypotheses.len(),
                width,
                height,
                costs.len(),
                valid.len()
            )));
        }
        if hypotheses.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::VolumeMismatch("hypotheses must be strictly increasing".into()));
        }
        for (c, v) in costs.iter().zip(&valid) {
            let ok = if *v {
                (0.0..=1.0).contains(c)
            } else {
                *c == 1.0
            };
            if !ok {
                return Err(Error::VolumeMismatch(format!(
                    "cost {c} inconsistent with validity {v}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            hypotheses,
            costs,
            valid,
        })
    }

    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        hypotheses: Vec<f64>,
        costs: Vec<f64>,
        valid: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(costs.len(), width * height * hypotheses.len());
        Self {
            width,
            height,
            hypotheses,
            costs,
            valid,
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
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn n_hyp(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn hypotheses(&self) -> &[f64] {
        &self.hypotheses
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn cost(&self, k: usize, pixel: usize) -> f64 {
        self.costs[k * self.pixels() + pixel]
    }

    #[inline]
    pub fn is_valid(&self, k: usize, pixel: usize) -> bool {
        self.valid[k * self.pixels() + pixel]
    }

    /// Same raster and hypotheses as `other`.
    pub fn same_shape(&self, other: &CostVolume) -> bool {
        self.width == other.width && self.height == other.height && self.hypotheses == other.hypotheses
    }
}

/// Sum and centered sum of squares of `n` values, accumulated in index order.
#[inline]
fn moments(n: usize, get: impl Fn(usize) -> f64) -> (f64, f64) {
    let mut sum = 0.0;
    for j in 0..n {
        sum += get(j);
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for j in 0..n {
        let d = get(j) - mean;
        ss += d * d;
    }
    (mean, ss)
}

#[inline]
fn zncc_kernel(
    n: usize,
    a: impl Fn(usize) -> f64,
    (mean_a, ss_a): (f64, f64),
    b: impl Fn(usize) -> f64,
) -> Option<f64> {
    let min_ss = MIN_PATCH_VARIANCE * n as f64;
    if !(ss_a >= min_ss) {
        return None;
    }
    let (mean_b, ss_b) = moments(n, &b);
    if !(ss_b >= min_ss) {
        return None;
    }
    let mut cross = 0.0;
    for j in 0..n {
        cross += (a(j) - mean_a) * (b(j) - mean_b);
    }
    let zncc = (cross / libm::sqrt(ss_a * ss_b)).clamp(-1.0, 1.0);
    Some((1.0 - zncc) * 0.5)
}

/// Matching cost `(1 - ZNCC) / 2` of two equally sized patches; `None` when
/// either patch is textureless (an invalid match with cost 1).
pub fn zncc_cost(patch_a: &[f64], patch_b: &[f64]) -> Option<f64> {
    assert_eq!(patch_a.len(), patch_b.len(), "patches must have equal size");
    let n = patch_a.len();
    if n == 0 {
        return None;
    }
    let stats_a = moments(n, |j| patch_a[j]);
    zncc_kernel(n, |j| patch_a[j], stats_a, |j| patch_b[j])
}

/// Row-major window accessor: element `j` of the `(2r+1)^2 * channels`
/// patch centred at `(x, y)`.
#[inline]
fn window(img: &Image, x: usize, y: usize, r: usize) -> impl Fn(usize) -> f64 + '_ {
    let side = 2 * r + 1;
    let ch = img.channels();
    let w = img.width();
    let data = img.data();
    let x0 = x - r;
    let y0 = y - r;
    move |j| {
        let c = j % ch;
        let p = j / ch;
        let dx = p % side;
        let dy = p / side;
        data[((y0 + dy) * w + x0 + dx) * ch + c]
    }
}

/// Builds the cost volume of `other` against `key`.
pub fn sweep_view(key: &View, other: &View, cfg: &SweepConfig) -> Result<CostVolume> {
    cfg.validate()?;
    let (w, h) = key.image.dims();
    if other.image.dims() != (w, h) {
        return Err(Error::ResolutionMismatch {
            expected: (w, h),
            actual: other.image.dims(),
        });
    }
    if other.image.channels() != key.image.channels() {
        return Err(Error::InvalidSample(format!(
            "channel count mismatch: {} vs {}",
            key.image.channels(),
            other.image.channels()
        )));
    }
    let r = cfg.patch_radius;
    let side = 2 * r + 1;
    if w < side || h < side {
        return Err(Error::InvalidConfig(format!(
            "{side}x{side} window does not fit a {w}x{h} image"
        )));
    }
    let n = side * side * key.image.channels();
    let pixels = w * h;

    // Keyview window statistics do not depend on the hypothesis.
    let mut key_stats = vec![None; pixels];
    for y in r..h - r {
        for x in r..w - r {
            key_stats[y * w + x] = Some(moments(n, window(&key.image, x, y, r)));
        }
    }

    let hypotheses = build_hypotheses(cfg);
    let key_to_other = other.pose.inverse();

    let planes = map_indices(hypotheses.len(), |k| {
        let hom = plane_sweep_homography(&key.intrinsics, &other.intrinsics, &key_to_other, hypotheses[k]);
        let (warped, warped_valid) = warp_bilinear(&other.image, &hom, w, h);
        let mut costs = vec![1.0; pixels];
        let mut valid = vec![false; pixels];
        for y in r..h - r {
            'px: for x in r..w - r {
                let i = y * w + x;
                let Some(stats) = key_stats[i] else { continue };
                for yy in y - r..=y + r {
                    for xx in x - r..=x + r {
                        if !warped_valid[yy * w + xx] {
                            continue 'px;
                        }
                    }
                }
                if let Some(c) = zncc_kernel(n, window(&key.image, x, y, r), stats, window(&warped, x, y, r)) {
                    costs[i] = c;
                    valid[i] = true;
                }
            }
        }
        (costs, valid)
    });

    let mut costs = Vec::with_capacity(pixels * hypotheses.len());
    let mut valid = Vec::with_capacity(pixels * hypotheses.len());
    for (c, v) in planes {
        costs.extend_from_slice(&c);
        valid.extend_from_slice(&v);
    }
    Ok(CostVolume::from_parts(w, h, hypotheses, costs, valid))
}

//! Scale augmentation and image augmentations.
//!
//! Scale augmentation keeps a histogram of the depths seen so far, with
//! logarithmically growing bins over the depth range that survives the
//! inverse-depth mask. For each new sample it picks the factor that moves the
//! sample's median depth onto the label of the least populated bin, scales
//! all translations and ground truth depths by it, and masks ground truth
//! whose inverse depth leaves `[0.009, 2.75]` 1/m.
//!
//! All randomness comes from PCG32 (XSH-RR, 64-bit state) seeded with
//! `Pcg32::new(seed, PCG_STREAM)`. Integers in `[0, n)` are drawn as
//! `(next_u32 * n) >> 32`, unit floats as `next_u32 / 2^32`.

use alloc::vec::Vec;

use rand_core::Rng;
use rand_pcg::Pcg32;

use crate::data::{is_valid_depth, DepthMap, Sample, View};
use crate::error::{Error, Result};

/// Inverse depths outside this range (1/m) are masked after scaling.
pub const INV_DEPTH_MASK: (f64, f64) = (0.009, 2.75);

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 100;

/// Stream selector of every generator created here.
pub const PCG_STREAM: u64 = 0x0a02_bdbf_7bb3_c0a7;

pub fn rng_from_seed(seed: u64) -> Pcg32 {
    Pcg32::new(seed, PCG_STREAM)
}

#[inline]
fn uniform_below(rng: &mut Pcg32, n: usize) -> usize {
    ((rng.next_u32() as u64 * n as u64) >> 32) as usize
}

#[inline]
fn uniform_unit(rng: &mut Pcg32) -> f64 {
    rng.next_u32() as f64 / 4_294_967_296.0
}

/// Counts of seen depths over log-uniform bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthHistogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
}

impl Default for DepthHistogram {
    fn default() -> Self {
        Self::new(DEFAULT_BINS)
    }
}

impl DepthHistogram {
    /// `bins` log-uniform bins spanning depths `1/2.75 .. 1/0.009` m.
    pub fn new(bins: usize) -> Self {
        assert!(bins > 0, "histogram needs at least one bin");
        let lo = 1.0 / INV_DEPTH_MASK.1;
        let hi = 1.0 / INV_DEPTH_MASK.0;
        let log_span = libm::log(hi / lo);
        let mut edges: Vec<f64> = (0..=bins)
            .map(|b| lo * libm::exp(log_span * b as f64 / bins as f64))
            .collect();
        edges[0] = lo;
        edges[bins] = hi;
        Self {
            edges,
            counts: alloc::vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn counts_mut(&mut self) -> &mut [u64] {
        &mut self.counts
    }

    /// Geometric mean of the bin's edges.
    pub fn label(&self, bin: usize) -> f64 {
        libm::sqrt(self.edges[bin] * self.edges[bin + 1])
    }

    /// Bin containing `depth` (`[edge_b, edge_b+1)`, last bin closed), or
    /// `None` outside the histogram range.
    pub fn bin_of(&self, depth: f64) -> Option<usize> {
        let bins = self.bins();
        if !is_valid_depth(depth) || depth < self.edges[0] || depth > self.edges[bins] {
            return None;
        }
        let t = libm::log(depth / self.edges[0]) / libm::log(self.edges[bins] / self.edges[0]);
        let mut b = ((t * bins as f64) as usize).min(bins - 1);
        while b > 0 && depth < self.edges[b] {
            b -= 1;
        }
        while b + 1 < bins && depth >= self.edges[b + 1] {
            b += 1;
        }
        Some(b)
    }

    pub fn add(&mut self, depth: f64) {
        if let Some(b) = self.bin_of(depth) {
            self.counts[b] += 1;
        }
    }

    /// Least populated bin, lowest index on ties.
    pub fn min_bin(&self) -> usize {
        let mut best = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            if c < self.counts[best] {
                best = b;
            }
        }
        best
    }
}

/// Adds every valid depth of `depths`; out-of-range values are ignored.
pub fn histogram_update(hist: &mut DepthHistogram, depths: &DepthMap) {
    for &d in depths.data() {
        hist.add(d as f64);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s.is_finite() {
            Ok(Self(s))
        } else {
            Err(Error::InvalidInput(alloc::format!("scale factor {s}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `label(least populated bin) / sample_median_depth`.
pub fn choose_scale(hist: &DepthHistogram, sample_median_depth: f64) -> Result<ScaleFactor> {
    if !(sample_median_depth > 0.0 && sample_median_depth.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "median depth {sample_median_depth} must be positive"
        )));
    }
    ScaleFactor::new(hist.label(hist.min_bin()) / sample_median_depth)
}

/// Lower median of the valid depths.
pub fn median_depth(depths: &DepthMap) -> Option<f64> {
    let mut v: Vec<f64> = depths
        .data()
        .iter()
        .map(|&d| d as f64)
        .filter(|&d| is_valid_depth(d))
        .collect();
    crate::metrics::lower_median(&mut v)
}

/// Depths multiplied by `s`; pixels whose scaled inverse depth leaves
/// [`INV_DEPTH_MASK`] become invalid (`0`).
pub fn scale_depth_map(depths: &DepthMap, s: ScaleFactor) -> DepthMap {
    let (lo, hi) = INV_DEPTH_MASK;
    let data = depths
        .data()
        .iter()
        .map(|&d| {
            let d = d as f64;
            if !is_valid_depth(d) {
                return 0.0;
            }
            let scaled = d * s.get();
            let inv = 1.0 / scaled;
            if inv >= lo && inv <= hi {
                scaled as f32
            } else {
                0.0
            }
        })
        .collect();
    DepthMap::new(depths.width(), depths.height(), data).expect("same shape")
}

/// Scales every other view's translation and the ground truth depth (and
/// range) by `s`, then masks out-of-range inverse depths. Rotations,
/// intrinsics and images are untouched.
pub fn apply_scale(sample: &Sample, s: ScaleFactor) -> Result<Sample> {
    let others = sample
        .others()
        .iter()
        .map(|v| View {
            pose: v.pose.with_scaled_translation(s.get()),
            ..v.clone()
        })
        .collect();
    let gt = scale_depth_map(sample.gt_depth(), s);
    let range = sample.gt_range().map(|(lo, hi)| (lo * s.get(), hi * s.get()));
    Sample::new(sample.keyview().clone(), others, gt, range)
}

/// Replaces 1-3 random rectangles of every given view with that view's mean
/// color. Rectangle sides are 10-40 % of the image dimension. Pass only the
/// other views; the keyview is never erased.
pub fn erase_regions(views: &[View], seed: u64) -> Vec<View> {
    let mut rng = rng_from_seed(seed);
    views
        .iter()
        .map(|v| {
            let mut out = v.clone();
            let mean = v.image.channel_means();
            let (w, h) = v.image.dims();
            let n_rect = 1 + uniform_below(&mut rng, 3);
            for _ in 0..n_rect {
                let rw = side_length(&mut rng, w);
                let rh = side_length(&mut rng, h);
                let x0 = uniform_below(&mut rng, w - rw + 1);
                let y0 = uniform_below(&mut rng, h - rh + 1);
                for y in y0..y0 + rh {
                    for x in x0..x0 + rw {
                        for (c, m) in mean.iter().enumerate() {
                            out.image.set(x, y, c, *m);
                        }
                    }
                }
            }
            out
        })
        .collect()
}

/// Integer side in `[ceil(0.1 n), floor(0.4 n)]`.
fn side_length(rng: &mut Pcg32, n: usize) -> usize {
    let lo = n.div_ceil(10).max(1);
    let hi = (2 * n / 5).max(lo).min(n);
    lo + uniform_below(rng, hi - lo + 1)
}

/// One shared photometric transform: `v' = clamp((v^gamma - 0.5) * contrast + 0.5 + brightness, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotometricParams {
    pub brightness: f64,
    pub contrast: f64,
    pub gamma: f64,
}

impl PhotometricParams {
    pub const IDENTITY: Self = Self {
        brightness: 0.0,
        contrast: 1.0,
        gamma: 1.0,
    };

    /// Brightness uniform in `[-0.1, 0.1]`; contrast and gamma log-uniform in
    /// `[0.8, 1.25]`. Drawn in that order.
    pub fn draw(rng: &mut Pcg32) -> Self {
        let brightness = -0.1 + 0.2 * uniform_unit(rng);
        let log_lo = libm::log(0.8);
        let log_hi = libm::log(1.25);
        let contrast = libm::exp(log_lo + (log_hi - log_lo) * uniform_unit(rng));
        let gamma = libm::exp(log_lo + (log_hi - log_lo) * uniform_unit(rng));
        Self {
            brightness,
            contrast,
            gamma,
        }
    }

    #[inline]
    pub fn apply_value(&self, v: f64) -> f64 {
        let g = if self.gamma == 1.0 { v } else { libm::pow(v.max(0.0), self.gamma) };
        (g * self.contrast + (0.5 * (1.0 - self.contrast) + self.brightness)).clamp(0.0, 1.0)
    }

    pub fn apply(&self, view: &View) -> View {
        if *self == Self::IDENTITY {
            return view.clone();
        }
        let mut out = view.clone();
        out.image.data_mut().iter_mut().for_each(|v| *v = self.apply_value(*v));
        out
    }
}

/// Applies one photometric draw from `seed` identically to all views.
pub fn photometric_augment(views: &[View], seed: u64) -> Vec<View> {
    let params = PhotometricParams::draw(&mut rng_from_seed(seed));
    views.iter().map(|v| params.apply(v)).collect()
}

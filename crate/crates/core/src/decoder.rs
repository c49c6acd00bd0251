//! Cost volume decoding.
//!
//! The decoded inverse depth is the winner-take-all hypothesis refined by a
//! parabola through its two neighbours. Uncertainty is the Laplace scale `b`
//! (in inverse-depth units, 1/m) implied by a softmin distribution over the
//! hypotheses: `b = sum_k p_k |rho_k - rho_hat|`.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{is_valid_depth, InverseDepthMap, Sample};
use crate::error::{Error, Result};
use crate::fusion::{fuse, FusionMode};
use crate::plane_sweep::{sweep_view, CostVolume, SweepConfig};

/// Inverse depth plus Laplace-scale uncertainty on the keyview raster.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthEstimate {
    width: usize,
    height: usize,
    inv_depth: Vec<f64>,
    uncertainty: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthEstimate {
    pub fn new(
        width: usize,
        height: usize,
        inv_depth: Vec<f64>,
        uncertainty: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if n == 0 || inv_depth.len() != n || uncertainty.len() != n || valid.len() != n {
            return Err(Error::InvalidSample(alloc::format!(
                "depth estimate buffers do not match {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            inv_depth,
            uncertainty,
            valid,
        })
    }

    /// Builds an estimate from stored maps: a pixel is valid where its inverse
    /// depth is finite and positive. Missing uncertainty becomes zero.
    pub fn from_maps(inv_depth: &InverseDepthMap, uncertainty: Option<&InverseDepthMap>) -> Result<Self> {
        let (w, h) = inv_depth.dims();
        if let Some(u) = uncertainty {
            if u.dims() != (w, h) {
                return Err(Error::ResolutionMismatch {
                    expected: (w, h),
                    actual: u.dims(),
                });
            }
        }
        let valid: Vec<bool> = inv_depth.data().iter().map(|&v| is_valid_depth(v as f64)).collect();
        let inv = inv_depth
            .data()
            .iter()
            .zip(&valid)
            .map(|(&v, &ok)| if ok { v as f64 } else { 0.0 })
            .collect();
        let unc = match uncertainty {
            Some(u) => u
                .data()
                .iter()
                .map(|&v| if v.is_finite() { v as f64 } else { 0.0 })
                .collect(),
            None => vec![0.0; w * h],
        };
        Self::new(w, h, inv, unc, valid)
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

    pub fn inv_depth(&self) -> &[f64] {
        &self.inv_depth
    }

    pub fn uncertainty(&self) -> &[f64] {
        &self.uncertainty
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Depth in meters; invalid pixels are `0`.
    pub fn depth(&self) -> Vec<f64> {
        self.inv_depth
            .iter()
            .zip(&self.valid)
            .map(|(&r, &ok)| if ok && r > 0.0 { 1.0 / r } else { 0.0 })
            .collect()
    }

    /// Inverse depth as a 32-bit map with invalid pixels set to `0`.
    pub fn inverse_depth_map(&self) -> InverseDepthMap {
        let data = self
            .inv_depth
            .iter()
            .zip(&self.valid)
            .map(|(&r, &ok)| if ok { r as f32 } else { 0.0 })
            .collect();
        InverseDepthMap::new(self.width, self.height, data).expect("dims checked at construction")
    }

    /// Uncertainty as a 32-bit map; invalid pixels are `0`.
    pub fn uncertainty_map_f32(&self) -> InverseDepthMap {
        let data = self
            .uncertainty
            .iter()
            .zip(&self.valid)
            .map(|(&b, &ok)| if ok { b as f32 } else { 0.0 })
            .collect();
        InverseDepthMap::new(self.width, self.height, data).expect("dims checked at construction")
    }
}

/// Winner-take-all result: the minimizing hypothesis index per pixel (`None`
/// without valid entries) and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct WtaDecode {
    pub index: Vec<Option<usize>>,
    pub min_cost: Vec<f64>,
}

/// Per-pixel argmin over valid entries; ties go to the smaller index.
pub fn wta_decode(vol: &CostVolume) -> WtaDecode {
    let pixels = vol.pixels();
    let mut index = vec![None; pixels];
    let mut min_cost = vec![1.0; pixels];
    for px in 0..pixels {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..vol.n_hyp() {
            if !vol.is_valid(k, px) {
                continue;
            }
            let c = vol.cost(k, px);
            if best.is_none_or(|(_, bc)| c < bc) {
                best = Some((k, c));
            }
        }
        if let Some((k, c)) = best {
            index[px] = Some(k);
            min_cost[px] = c;
        }
    }
    WtaDecode { index, min_cost }
}

/// Vertex offset of the parabola through three equally spaced costs,
/// clamped to `[-0.5, 0.5]`; zero without positive curvature.
#[inline]
pub fn parabola_offset(prev: f64, center: f64, next: f64) -> f64 {
    let curvature = prev - 2.0 * center + next;
    if !(curvature > 0.0) {
        return 0.0;
    }
    ((prev - next) / (2.0 * curvature)).clamp(-0.5, 0.5)
}

/// Refined inverse depth per pixel; `0` where the pixel has no valid entry.
/// The offset is zero at the ends of the hypothesis range or next to an
/// invalid entry.
pub fn subpixel_refine(vol: &CostVolume, wta: &WtaDecode) -> Vec<f64> {
    let hyps = vol.hypotheses();
    let n = hyps.len();
    let step = (hyps[n - 1] - hyps[0]) / (n - 1) as f64;
    wta.index
        .iter()
        .enumerate()
        .map(|(px, k)| {
            let Some(k) = *k else { return 0.0 };
            let delta = if k == 0 || k + 1 == n || !vol.is_valid(k - 1, px) || !vol.is_valid(k + 1, px) {
                0.0
            } else {
                parabola_offset(vol.cost(k - 1, px), vol.cost(k, px), vol.cost(k + 1, px))
            };
            hyps[k] + delta * step
        })
        .collect()
}

/// Flags pixels whose minimum sits at the edge of the valid hypothesis run:
/// the first or last hypothesis, or next to an invalid entry. Such minima are
/// typically truncated by the swept range or by the image border.
pub fn boundary_flags(vol: &CostVolume, wta: &WtaDecode) -> Vec<bool> {
    let n = vol.n_hyp();
    wta.index
        .iter()
        .enumerate()
        .map(|(px, k)| match *k {
            None => false,
            Some(k) => k == 0 || k + 1 == n || !vol.is_valid(k - 1, px) || !vol.is_valid(k + 1, px),
        })
        .collect()
}

/// Laplace scale per pixel from the softmin distribution over valid
/// hypotheses; `0` where the pixel has no valid entry.
pub fn uncertainty_map(vol: &CostVolume, inv_depth: &[f64], softmin_temp: f64) -> Vec<f64> {
    let hyps = vol.hypotheses();
    (0..vol.pixels())
        .map(|px| {
            let mut c_min = f64::INFINITY;
            for k in 0..vol.n_hyp() {
                if vol.is_valid(k, px) {
                    c_min = c_min.min(vol.cost(k, px));
                }
            }
            if !c_min.is_finite() {
                return 0.0;
            }
            let rho_hat = inv_depth[px];
            let mut mass = 0.0;
            let mut spread = 0.0;
            for k in 0..vol.n_hyp() {
                if vol.is_valid(k, px) {
                    let p = libm::exp(-(vol.cost(k, px) - c_min) / softmin_temp);
                    mass += p;
                    spread += p * libm::fabs(hyps[k] - rho_hat);
                }
            }
            spread / mass
        })
        .collect()
}

/// Decodes a (fused) cost volume. Pixels without valid entries or with a
/// boundary minimum are invalid; their uncertainty is still reported where
/// the volume has valid entries.
pub fn decode_volume(vol: &CostVolume, softmin_temp: f64) -> DepthEstimate {
    let wta = wta_decode(vol);
    let inv_depth = subpixel_refine(vol, &wta);
    let uncertainty = uncertainty_map(vol, &inv_depth, softmin_temp);
    let boundary = boundary_flags(vol, &wta);
    let valid = wta
        .index
        .iter()
        .zip(&boundary)
        .map(|(k, b)| k.is_some() && !b)
        .collect();
    DepthEstimate {
        width: vol.width(),
        height: vol.height(),
        inv_depth,
        uncertainty,
        valid,
    }
}

/// Sweeps every other view against the keyview, fuses, and decodes.
/// `cfg` must already carry the depth range to sweep.
pub fn estimate_depth(sample: &Sample, cfg: &SweepConfig, mode: FusionMode) -> Result<DepthEstimate> {
    let vols = sample
        .others()
        .iter()
        .map(|v| sweep_view(sample.keyview(), v, cfg))
        .collect::<Result<Vec<_>>>()?;
    let fused = fuse(&vols, mode, cfg.weight_temp)?;
    Ok(decode_volume(&fused, cfg.softmin_temp))
}

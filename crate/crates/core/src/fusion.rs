//! Fusion of view-wise cost volumes.
//!
//! Both modes share one kernel: per cell, a weighted mean over the views
//! whose entry is valid, summed in ascending view order. Weights are
//! rescaled by their largest valid value before summing, so uniform weights
//! reduce to exactly the plain mean.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::par::map_indices;
use crate::plane_sweep::CostVolume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionMode {
    #[default]
    Average,
    Weighted,
}

/// Per-view, per-pixel fusion weights: `weights[view][pixel]`.
pub type ViewWeights = Vec<Vec<f64>>;

fn check_shapes(vols: &[CostVolume]) -> Result<()> {
    let Some(first) = vols.first() else {
        return Err(Error::VolumeMismatch("no cost volumes to fuse".into()));
    };
    for (i, v) in vols.iter().enumerate().skip(1) {
        if !first.same_shape(v) {
            return Err(Error::VolumeMismatch(format!(
                "volume {i} differs in shape or hypotheses from volume 0"
            )));
        }
    }
    Ok(())
}

/// Mean over valid entries; cells without any valid entry stay invalid.
pub fn fuse_average(vols: &[CostVolume]) -> Result<CostVolume> {
    check_shapes(vols)?;
    let pixels = vols[0].pixels();
    Ok(fuse_with(vols, |_, _| 1.0, pixels))
}

/// Closed-form per-pixel view confidence: `valid_fraction * exp(-min_cost / temp)`,
/// normalized over views. Pixels where no view has a valid entry get uniform
/// weights.
pub fn confidence_weights(vols: &[CostVolume], weight_temp: f64) -> Result<ViewWeights> {
    check_shapes(vols)?;
    let n_views = vols.len();
    let pixels = vols[0].pixels();
    let n_hyp = vols[0].n_hyp();
    let mut weights = vec![vec![0.0; pixels]; n_views];
    for px in 0..pixels {
        let mut total = 0.0;
        for (v, vol) in vols.iter().enumerate() {
            let mut n_valid = 0usize;
            let mut min_cost = f64::INFINITY;
            for k in 0..n_hyp {
                if vol.is_valid(k, px) {
                    n_valid += 1;
                    min_cost = min_cost.min(vol.cost(k, px));
                }
            }
            let w = if n_valid == 0 {
                0.0
            } else {
                (n_valid as f64 / n_hyp as f64) * libm::exp(-min_cost / weight_temp)
            };
            weights[v][px] = w;
            total += w;
        }
        for wv in weights.iter_mut() {
            wv[px] = if total > 0.0 {
                wv[px] / total
            } else {
                1.0 / n_views as f64
            };
        }
    }
    Ok(weights)
}

/// Weighted mean over valid entries, renormalizing the weights over the
/// valid subset of each cell. A cell whose valid views all carry zero weight
/// is invalid.
pub fn fuse_weighted(vols: &[CostVolume], weights: &[Vec<f64>]) -> Result<CostVolume> {
    check_shapes(vols)?;
    let pixels = vols[0].pixels();
    if weights.len() != vols.len() || weights.iter().any(|w| w.len() != pixels) {
        return Err(Error::VolumeMismatch(format!(
            "expected {} weight maps of {} pixels",
            vols.len(),
            pixels
        )));
    }
    Ok(fuse_with(vols, |v, px| weights[v][px], pixels))
}

fn fuse_with<W>(vols: &[CostVolume], weight: W, pixels: usize) -> CostVolume
where
    W: Fn(usize, usize) -> f64 + Sync + Send,
{
    let first = &vols[0];
    let n_hyp = first.n_hyp();
    let planes = map_indices(n_hyp, |k| {
        let mut costs = vec![1.0; pixels];
        let mut valid = vec![false; pixels];
        for px in 0..pixels {
            let mut w_max = 0.0f64;
            for (v, vol) in vols.iter().enumerate() {
                if vol.is_valid(k, px) {
                    w_max = w_max.max(weight(v, px));
                }
            }
            if !(w_max > 0.0) {
                continue;
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for (v, vol) in vols.iter().enumerate() {
                if vol.is_valid(k, px) {
                    let w = weight(v, px) / w_max;
                    num += w * vol.cost(k, px);
                    den += w;
                }
            }
            costs[px] = (num / den).clamp(0.0, 1.0);
            valid[px] = true;
        }
        (costs, valid)
    });
    let mut costs = Vec::with_capacity(pixels * n_hyp);
    let mut valid = Vec::with_capacity(pixels * n_hyp);
    for (c, v) in planes {
        costs.extend_from_slice(&c);
        valid.extend_from_slice(&v);
    }
    CostVolume::from_parts(
        first.width(),
        first.height(),
        first.hypotheses().to_vec(),
        costs,
        valid,
    )
}

/// Fuses according to `mode`.
pub fn fuse(vols: &[CostVolume], mode: FusionMode, weight_temp: f64) -> Result<CostVolume> {
    match mode {
        FusionMode::Average => fuse_average(vols),
        FusionMode::Weighted => {
            let w = confidence_weights(vols, weight_temp)?;
            fuse_weighted(vols, &w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vol(costs: Vec<f64>, valid: Vec<bool>) -> CostVolume {
        let n = costs.len();
        let hyp: Vec<f64> = (0..n).map(|k| 0.1 * (k + 1) as f64).collect();
        CostVolume::new(1, 1, hyp, costs, valid).unwrap()
    }

    #[test]
    fn single_volume_unchanged() {
        let a = vol(vec![0.2, 0.7, 1.0], vec![true, true, false]);
        assert_eq!(fuse_average(core::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn mean_and_masking() {
        let a = vol(vec![0.2, 0.2], vec![true, true]);
        let b = vol(vec![0.4, 1.0], vec![true, false]);
        let f = fuse_average(&[a, b]).unwrap();
        assert_relative_eq!(f.cost(0, 0), 0.3, epsilon = 1e-15);
        assert_eq!(f.cost(1, 0), 0.2);
        assert!(f.is_valid(1, 0));
    }

    #[test]
    fn all_invalid_cell_stays_invalid() {
        let a = vol(vec![1.0], vec![false]);
        let f = fuse_average(&[a.clone(), a]).unwrap();
        assert!(!f.is_valid(0, 0));
        assert_eq!(f.cost(0, 0), 1.0);
    }

    #[test]
    fn weights_closed_form() {
        let a = vol(vec![0.0, 0.5], vec![true, true]);
        let b = vol(vec![1.0, 1.0], vec![true, true]);
        let w = confidence_weights(&[a, b], 0.25).unwrap();
        assert_relative_eq!(w[0][0] / w[1][0], libm::exp(4.0), max_relative = 1e-12);
        assert_relative_eq!(w[0][0] + w[1][0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identical_volumes_get_uniform_weights() {
        let a = vol(vec![0.3, 1.0], vec![true, false]);
        let w = confidence_weights(&[a.clone(), a.clone(), a], 0.25).unwrap();
        for wv in &w {
            assert_relative_eq!(wv[0], 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn one_hot_selects_view() {
        let a = vol(vec![0.2, 0.6, 1.0], vec![true, true, false]);
        let b = vol(vec![0.9, 1.0, 0.1], vec![true, false, true]);
        let f = fuse_weighted(&[a.clone(), b], &[vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(f, a);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let a = vol(vec![0.2, 0.6], vec![true, true]);
        let b = vol(vec![0.2], vec![true]);
        assert!(fuse_average(&[a.clone(), b]).is_err());
        assert!(fuse_average(&[]).is_err());
        assert!(fuse_weighted(core::slice::from_ref(&a), &[vec![1.0, 2.0]]).is_err());
    }
}

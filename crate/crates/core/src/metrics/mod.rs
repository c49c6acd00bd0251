//! Depth and uncertainty evaluation.
//!
//! Per-sample evaluation runs in a fixed order: upsample the prediction to
//! the ground truth raster, align (optional), clip to the evaluation range,
//! then compute the absolute relative error and the inlier ratio over pixels
//! where both prediction and ground truth are valid. Test-set numbers are
//! unweighted means over samples.
//!
//! Depth slices use `0.0` (or any non-finite / non-positive value) for
//! pixels without depth.

pub mod sparsification;

pub use sparsification::{sparsification, SparsificationResult, SPARSIFICATION_STEPS};

use alloc::vec::Vec;

use crate::data::{is_valid_depth, DepthMap, Sample};
use crate::decoder::DepthEstimate;
use crate::error::{Error, Result};

/// Evaluation clip range in meters.
pub const CLIP_RANGE: (f64, f64) = (0.1, 100.0);
/// Ratio threshold of the inlier metric.
pub const INLIER_THRESHOLD: f64 = 1.03;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Alignment {
    #[default]
    None,
    /// Scale by `median(gt) / median(pred)` over jointly valid pixels.
    Median,
    /// Scale by a caller-supplied factor.
    Scalar(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub alignment: Alignment,
    pub clip: (f64, f64),
    pub inlier_threshold: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            alignment: Alignment::None,
            clip: CLIP_RANGE,
            inlier_threshold: INLIER_THRESHOLD,
        }
    }
}

impl EvalSettings {
    pub fn with_alignment(alignment: Alignment) -> Self {
        Self {
            alignment,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip.0 > 0.0 && self.clip.0 < self.clip.1) {
            return Err(Error::InvalidInput(alloc::format!("clip range {:?}", self.clip)));
        }
        if !(self.inlier_threshold > 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "inlier threshold {} must exceed 1",
                self.inlier_threshold
            )));
        }
        if let Alignment::Scalar(s) = self.alignment {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput(alloc::format!("alignment scale {s}")));
            }
        }
        Ok(())
    }
}

#[inline]
fn jointly_valid(pred: f64, gt: f64) -> bool {
    is_valid_depth(pred) && is_valid_depth(gt)
}

/// Resamples `pred` to `full_w x full_h`. Output pixel `x` reads source
/// position `x * w_in / w_out` (pixel centres on integer coordinates),
/// clamped to the source domain. Inverse depth and uncertainty are
/// interpolated bilinearly over valid neighbours only; validity is taken from
/// the nearest source pixel.
pub fn upsample_prediction(pred: &DepthEstimate, full_w: usize, full_h: usize) -> DepthEstimate {
    let (w, h) = pred.dims();
    if (w, h) == (full_w, full_h) {
        return pred.clone();
    }
    let sx = w as f64 / full_w as f64;
    let sy = h as f64 / full_h as f64;
    let n = full_w * full_h;
    let mut inv = Vec::with_capacity(n);
    let mut unc = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for y in 0..full_h {
        let fy = (y as f64 * sy).clamp(0.0, (h - 1) as f64);
        let y0 = libm::floor(fy) as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        let yn = (libm::round(fy) as usize).min(h - 1);
        for x in 0..full_w {
            let fx = (x as f64 * sx).clamp(0.0, (w - 1) as f64);
            let x0 = libm::floor(fx) as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            let xn = (libm::round(fx) as usize).min(w - 1);
            if !pred.valid()[yn * w + xn] {
                inv.push(0.0);
                unc.push(0.0);
                valid.push(false);
                continue;
            }
            let taps = [
                (y0 * w + x0, (1.0 - tx) * (1.0 - ty)),
                (y0 * w + x1, tx * (1.0 - ty)),
                (y1 * w + x0, (1.0 - tx) * ty),
                (y1 * w + x1, tx * ty),
            ];
            let (mut si, mut su, mut sw) = (0.0, 0.0, 0.0);
            for (i, wt) in taps {
                if wt > 0.0 && pred.valid()[i] {
                    si += wt * pred.inv_depth()[i];
                    su += wt * pred.uncertainty()[i];
                    sw += wt;
                }
            }
            inv.push(si / sw);
            unc.push(su / sw);
            valid.push(true);
        }
    }
    DepthEstimate::new(full_w, full_h, inv, unc, valid).expect("sizes match by construction")
}

/// Clamps valid depths into `settings.clip`; invalid pixels are unchanged.
pub fn clip_depth(depth: &[f64], settings: &EvalSettings) -> Vec<f64> {
    let (lo, hi) = settings.clip;
    depth
        .iter()
        .map(|&d| if is_valid_depth(d) { d.clamp(lo, hi) } else { d })
        .collect()
}

/// Median of the values; the lower middle element for even counts.
pub fn lower_median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    Some(*m)
}

/// Scales `pred` by `median(gt) / median(pred)` over jointly valid pixels.
pub fn align_median(pred: &[f64], gt: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_len(pred, gt)?;
    let (mut p, mut g): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .zip(gt)
        .filter(|(&p, &g)| jointly_valid(p, g))
        .map(|(&p, &g)| (p, g))
        .unzip();
    let med_pred = lower_median(&mut p).ok_or(Error::NoValidPixels)?;
    let med_gt = lower_median(&mut g).ok_or(Error::NoValidPixels)?;
    if !(med_pred > 0.0) {
        return Err(Error::NonPositiveMedian(med_pred));
    }
    let s = med_gt / med_pred;
    Ok((scale_depth(pred, s), s))
}

fn scale_depth(depth: &[f64], s: f64) -> Vec<f64> {
    depth
        .iter()
        .map(|&d| if is_valid_depth(d) { d * s } else { d })
        .collect()
}

fn check_len(pred: &[f64], gt: &[f64]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "prediction has {} pixels, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    Ok(())
}

/// Absolute relative error in percent over jointly valid pixels.
pub fn abs_rel(pred: &[f64], gt: &[f64]) -> Result<f64> {
    check_len(pred, gt)?;
    let mut sum = 0.0;
    let mut m = 0usize;
    for (&d, &g) in pred.iter().zip(gt) {
        if jointly_valid(d, g) {
            sum += libm::fabs(d - g) / g;
            m += 1;
        }
    }
    if m == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok(100.0 * sum / m as f64)
}

/// Percentage of jointly valid pixels with `max(d/g, g/d) < threshold`
/// (strict).
pub fn inlier_ratio(pred: &[f64], gt: &[f64], threshold: f64) -> Result<f64> {
    check_len(pred, gt)?;
    let mut inliers = 0usize;
    let mut m = 0usize;
    for (&d, &g) in pred.iter().zip(gt) {
        if jointly_valid(d, g) {
            m += 1;
            // Multiplied-out form of the ratio test, exact at the boundary.
            if d < threshold * g && g < threshold * d {
                inliers += 1;
            }
        }
    }
    if m == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok(100.0 * inliers as f64 / m as f64)
}

/// Metrics of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMetrics {
    /// Absolute relative error (%).
    pub rel: f64,
    /// Inlier ratio (%).
    pub tau: f64,
    /// Number of jointly valid pixels.
    pub valid_pixels: usize,
    /// Area under the sparsification error curve, when at least
    /// [`SPARSIFICATION_STEPS`] pixels are available.
    pub ause: Option<f64>,
    /// Scale applied by the alignment step.
    pub scale: f64,
}

/// Evaluates a prediction against the sample's ground truth.
pub fn evaluate_sample(pred: &DepthEstimate, sample: &Sample, settings: &EvalSettings) -> Result<SampleMetrics> {
    evaluate_depth(pred, sample.gt_depth(), settings)
}

/// Same as [`evaluate_sample`] with an explicit ground truth map.
pub fn evaluate_depth(pred: &DepthEstimate, gt: &DepthMap, settings: &EvalSettings) -> Result<SampleMetrics> {
    let p = run_pipeline(pred, gt, settings)?;
    let rel = abs_rel(&p.depth, &p.gt)?;
    let tau = inlier_ratio(&p.depth, &p.gt, settings.inlier_threshold)?;
    let (errors, uncert) = p.error_pairs();
    let valid_pixels = errors.len();
    let ause = if valid_pixels >= SPARSIFICATION_STEPS {
        Some(sparsification(&errors, &uncert)?.ause)
    } else {
        None
    };
    Ok(SampleMetrics {
        rel,
        tau,
        valid_pixels,
        ause,
        scale: p.scale,
    })
}

/// Per-pixel relative errors and uncertainties over jointly valid pixels
/// after the evaluation pipeline, in pixel order.
pub fn error_uncertainty_pairs(
    pred: &DepthEstimate,
    gt: &DepthMap,
    settings: &EvalSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(run_pipeline(pred, gt, settings)?.error_pairs())
}

struct Pipeline {
    depth: Vec<f64>,
    gt: Vec<f64>,
    uncertainty: Vec<f64>,
    scale: f64,
}

impl Pipeline {
    fn error_pairs(&self) -> (Vec<f64>, Vec<f64>) {
        self.depth
            .iter()
            .zip(&self.gt)
            .zip(&self.uncertainty)
            .filter(|((&d, &g), _)| jointly_valid(d, g))
            .map(|((&d, &g), &u)| (libm::fabs(d - g) / g, u))
            .unzip()
    }
}

/// Upsample, align, clip.
fn run_pipeline(pred: &DepthEstimate, gt: &DepthMap, settings: &EvalSettings) -> Result<Pipeline> {
    settings.validate()?;
    let (w, h) = gt.dims();
    if pred.width() > w || pred.height() > h {
        return Err(Error::ResolutionMismatch {
            expected: (w, h),
            actual: pred.dims(),
        });
    }
    let up = upsample_prediction(pred, w, h);
    let gt = gt.to_f64();
    let depth = up.depth();
    let (aligned, scale) = match settings.alignment {
        Alignment::None => (depth, 1.0),
        Alignment::Median => align_median(&depth, &gt)?,
        Alignment::Scalar(s) => (scale_depth(&depth, s), s),
    };
    Ok(Pipeline {
        depth: clip_depth(&aligned, settings),
        gt,
        uncertainty: up.uncertainty().to_vec(),
        scale,
    })
}

/// Test-set summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub per_sample: Vec<SampleMetrics>,
    pub mean_rel: f64,
    pub mean_tau: f64,
    /// Mean over the samples that have an AUSE value.
    pub mean_ause: Option<f64>,
}

/// Unweighted means over samples, independent of their pixel counts.
pub fn aggregate_testset(samples: &[SampleMetrics]) -> Result<EvalResult> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let n = samples.len() as f64;
    let mean_rel = samples.iter().map(|s| s.rel).sum::<f64>() / n;
    let mean_tau = samples.iter().map(|s| s.tau).sum::<f64>() / n;
    let ause: Vec<f64> = samples.iter().filter_map(|s| s.ause).collect();
    let mean_ause = (!ause.is_empty()).then(|| ause.iter().sum::<f64>() / ause.len() as f64);
    Ok(EvalResult {
        per_sample: samples.to_vec(),
        mean_rel,
        mean_tau,
        mean_ause,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn clip_bounds() {
        let s = EvalSettings::default();
        assert_eq!(clip_depth(&[0.05, 150.0, 5.0, 0.0], &s), vec![0.1, 100.0, 5.0, 0.0]);
    }

    #[test]
    fn hand_case() {
        let gt = [1.0, 2.0, 4.0, 5.0];
        let pred = [1.1, 2.0, 3.0, 5.0];
        assert_relative_eq!(abs_rel(&pred, &gt).unwrap(), 8.75, epsilon = 1e-12);
        assert_eq!(inlier_ratio(&pred, &gt, INLIER_THRESHOLD).unwrap(), 50.0);
    }

    #[test]
    fn constant_ratio() {
        let gt = [1.0, 2.5, 7.0];
        let pred: Vec<f64> = gt.iter().map(|g| 1.02 * g).collect();
        assert_relative_eq!(abs_rel(&pred, &gt).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(abs_rel(&gt, &gt).unwrap(), 0.0);
        assert_eq!(inlier_ratio(&gt, &gt, INLIER_THRESHOLD).unwrap(), 100.0);
    }

    #[test]
    fn inlier_boundary_is_exclusive() {
        let gt: Vec<f64> = (1..200).map(|i| 0.37 * i as f64).collect();
        let pred: Vec<f64> = gt.iter().map(|g| 1.03 * g).collect();
        assert_eq!(inlier_ratio(&pred, &gt, INLIER_THRESHOLD).unwrap(), 0.0);
    }

    #[test]
    fn no_valid_pixels() {
        assert_eq!(abs_rel(&[0.0, 1.0], &[1.0, 0.0]), Err(Error::NoValidPixels));
        assert_eq!(inlier_ratio(&[], &[], 1.03), Err(Error::NoValidPixels));
        assert!(align_median(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn median_alignment() {
        let gt = [1.0, 2.0, 3.0, 4.0];
        let pred: Vec<f64> = gt.iter().map(|g| g / 2.0).collect();
        let (aligned, s) = align_median(&pred, &gt).unwrap();
        assert_eq!(s, 2.0);
        assert_eq!(aligned, gt.to_vec());
        assert_eq!(align_median(&gt, &gt).unwrap().1, 1.0);
    }

    #[test]
    fn lower_median_even() {
        assert_eq!(lower_median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&mut [5.0]), Some(5.0));
        assert_eq!(lower_median(&mut []), None);
    }

    fn estimate(w: usize, h: usize, inv: Vec<f64>) -> DepthEstimate {
        let valid = inv.iter().map(|&v| v > 0.0).collect();
        DepthEstimate::new(w, h, inv, vec![0.0; w * h], valid).unwrap()
    }

    #[test]
    fn upsample_same_size_and_constant() {
        let e = estimate(3, 2, vec![0.5; 6]);
        assert_eq!(upsample_prediction(&e, 3, 2), e);
        let up = upsample_prediction(&e, 6, 4);
        assert!(up.inv_depth().iter().all(|&v| v == 0.5));
        assert!(up.valid().iter().all(|&v| v));
    }

    #[test]
    fn upsample_ramp_midpoints() {
        let e = estimate(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let up = upsample_prediction(&e, 8, 2);
        assert_eq!(&up.inv_depth()[..8], &[1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.0]);
    }

    #[test]
    fn upsample_skips_invalid_neighbours() {
        let e = estimate(2, 1, vec![1.0, 0.0]);
        let up = upsample_prediction(&e, 4, 1);
        assert_eq!(up.valid(), &[true, false, false, false]);
        assert_eq!(up.inv_depth()[0], 1.0);
    }

    #[test]
    fn aggregation_is_unweighted() {
        let a = SampleMetrics { rel: 2.0, tau: 90.0, valid_pixels: 10, ause: Some(0.1), scale: 1.0 };
        let b = SampleMetrics { rel: 4.0, tau: 80.0, valid_pixels: 100, ause: None, scale: 1.0 };
        let r = aggregate_testset(&[a.clone(), b]).unwrap();
        assert_eq!(r.mean_rel, 3.0);
        assert_eq!(r.mean_tau, 85.0);
        assert_eq!(r.mean_ause, Some(0.1));
        let single = aggregate_testset(core::slice::from_ref(&a)).unwrap();
        assert_eq!((single.mean_rel, single.mean_tau), (a.rel, a.tau));
        assert!(aggregate_testset(&[]).is_err());
    }
}

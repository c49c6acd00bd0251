//! Sparsification curves and AUSE.
//!
//! For removal fractions `f = 0.00, 0.01, ..., 0.99`, the `floor(f * m)`
//! pixels ranked highest are dropped and the mean error of the rest is
//! recorded. The oracle ranking uses the true errors, the uncertainty
//! ranking the predicted uncertainties; ties go to the lower pixel index
//! first. Each curve is normalized by its value at `f = 0`, the error curve
//! is their difference, and AUSE is its trapezoidal integral over
//! `[0, 0.99]`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of removal fractions (step 0.01, starting at 0).
pub const SPARSIFICATION_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SparsificationResult {
    /// Removal fractions `i / 100`.
    pub fractions: Vec<f64>,
    pub oracle: Vec<f64>,
    pub uncertainty: Vec<f64>,
    /// `uncertainty - oracle`, pointwise.
    pub error: Vec<f64>,
    pub ause: f64,
}

/// Remaining mean error after removing the top-ranked pixels, for every
/// removal fraction, unnormalized.
fn remaining_means(errors: &[f64], ranking_key: &[f64]) -> Vec<f64> {
    let m = errors.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ranking_key[b].total_cmp(&ranking_key[a]).then(a.cmp(&b)));
    // suffix[r] = sum of errors of order[r..]
    let mut suffix = alloc::vec![0.0; m + 1];
    for r in (0..m).rev() {
        suffix[r] = suffix[r + 1] + errors[order[r]];
    }
    (0..SPARSIFICATION_STEPS)
        .map(|i| {
            let removed = i * m / SPARSIFICATION_STEPS;
            suffix[removed] / (m - removed) as f64
        })
        .collect()
}

pub fn sparsification(errors: &[f64], uncertainties: &[f64]) -> Result<SparsificationResult> {
    if errors.len() != uncertainties.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} errors vs {} uncertainties",
            errors.len(),
            uncertainties.len()
        )));
    }
    if errors.len() < SPARSIFICATION_STEPS {
        return Err(Error::InvalidInput(alloc::format!(
            "sparsification needs at least {SPARSIFICATION_STEPS} pixels, got {}",
            errors.len()
        )));
    }
    if errors.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("errors must be finite and non-negative".into()));
    }
    let fractions: Vec<f64> = (0..SPARSIFICATION_STEPS)
        .map(|i| i as f64 / SPARSIFICATION_STEPS as f64)
        .collect();
    let mut oracle = remaining_means(errors, errors);
    let mut uncertainty = remaining_means(errors, uncertainties);
    let base_oracle = oracle[0];
    let base_uncert = uncertainty[0];
    if !(base_oracle > 0.0) || !(base_uncert > 0.0) {
        let zeros = alloc::vec![0.0; SPARSIFICATION_STEPS];
        return Ok(SparsificationResult {
            fractions,
            oracle: zeros.clone(),
            uncertainty: zeros.clone(),
            error: zeros,
            ause: 0.0,
        });
    }
    oracle.iter_mut().for_each(|v| *v /= base_oracle);
    uncertainty.iter_mut().for_each(|v| *v /= base_uncert);
    let error: Vec<f64> = uncertainty.iter().zip(&oracle).map(|(u, o)| u - o).collect();
    let step = 1.0 / SPARSIFICATION_STEPS as f64;
    let ause = error.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
    Ok(SparsificationResult {
        fractions,
        oracle,
        uncertainty,
        error,
        ause,
    })
}

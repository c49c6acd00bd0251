//! Quasi-optimal source view selection.
//!
//! Each other view is first evaluated alone with the keyview. Views are then
//! added in ascending order of that pairwise error (ties by view id) and the
//! prefix with the lowest error is reported, together with the full
//! error-over-set-size curve.
//!
//! View ids are 1-based (`1..=k`), the keyview being view 0.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::data::Sample;
use crate::decoder::DepthEstimate;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_sample, EvalSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// `(view id, rel %)` for every single-view run, in view id order.
    pub pairwise: Vec<(usize, f64)>,
    /// View ids sorted by pairwise rel.
    pub order: Vec<usize>,
    /// rel of the prefix of `order` of size `j + 1`.
    pub curve: Vec<f64>,
    /// Size of the best prefix (smallest on ties).
    pub best_size: usize,
}

impl SelectionResult {
    pub fn best_views(&self) -> &[usize] {
        &self.order[..self.best_size]
    }

    pub fn best_rel(&self) -> f64 {
        self.curve[self.best_size - 1]
    }
}

/// Runs `estimator` on the sub-sample made of the given view ids (kept in
/// ascending id order) and returns its rel.
fn subset_rel<E>(sample: &Sample, ids: &[usize], estimator: &mut E, settings: &EvalSettings) -> Result<f64>
where
    E: FnMut(&Sample) -> Result<DepthEstimate>,
{
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let wrap = |e: Error| Error::Subset {
        subset: sorted.clone(),
        source: Box::new(e),
    };
    let indices: Vec<usize> = sorted.iter().map(|id| id - 1).collect();
    let sub = sample.with_views(&indices).map_err(wrap)?;
    let pred = estimator(&sub).map_err(wrap)?;
    let metrics = evaluate_sample(&pred, &sub, settings).map_err(wrap)?;
    Ok(metrics.rel)
}

/// rel of every `(keyview, view i)` pair.
pub fn pairwise_errors<E>(sample: &Sample, estimator: &mut E, settings: &EvalSettings) -> Result<Vec<(usize, f64)>>
where
    E: FnMut(&Sample) -> Result<DepthEstimate>,
{
    (1..=sample.others().len())
        .map(|id| Ok((id, subset_rel(sample, &[id], estimator, settings)?)))
        .collect()
}

/// Stable order of view ids by ascending rel, ties by id.
pub fn order_by_error(pairwise: &[(usize, f64)]) -> Vec<usize> {
    let mut sorted = pairwise.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    sorted.into_iter().map(|(id, _)| id).collect()
}

/// Index of the first minimum plus one.
fn best_prefix(curve: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in curve.iter().enumerate() {
        if v.total_cmp(&curve[best]).is_lt() {
            best = j;
        }
    }
    best + 1
}

pub fn grow_selection<E>(sample: &Sample, estimator: &mut E, settings: &EvalSettings) -> Result<SelectionResult>
where
    E: FnMut(&Sample) -> Result<DepthEstimate>,
{
    let pairwise = pairwise_errors(sample, estimator, settings)?;
    let order = order_by_error(&pairwise);
    let mut curve = Vec::with_capacity(order.len());
    for size in 1..=order.len() {
        // The single-view prefix was already evaluated.
        let rel = if size == 1 {
            pairwise[order[0] - 1].1
        } else {
            subset_rel(sample, &order[..size], estimator, settings)?
        };
        curve.push(rel);
    }
    let best_size = best_prefix(&curve);
    Ok(SelectionResult {
        pairwise,
        order,
        curve,
        best_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn order_sorts_with_id_tiebreak() {
        assert_eq!(order_by_error(&[(1, 9.0), (2, 5.0)]), vec![2, 1]);
        assert_eq!(order_by_error(&[(1, 3.0), (2, 1.0), (3, 3.0), (4, 1.0)]), vec![2, 4, 1, 3]);
    }

    #[test]
    fn best_prefix_prefers_smaller_sets() {
        assert_eq!(best_prefix(&[3.0, 2.0, 2.0, 5.0]), 2);
        assert_eq!(best_prefix(&[1.0]), 1);
        assert_eq!(best_prefix(&[4.0, 3.0, 1.0]), 3);
    }
}

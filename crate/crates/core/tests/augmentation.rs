mod common;

use approx::assert_relative_eq;
use common::Draw;
use mvdepth_core::augmentation::{
    apply_scale, choose_scale, erase_regions, histogram_update, median_depth, photometric_augment, DepthHistogram,
    ScaleFactor,
};
use mvdepth_core::synth::{plane_scene, render};
use mvdepth_core::{DepthMap, Image, Pose, View};

#[test]
fn log_uniform_depths_fill_bins_evenly() {
    let mut d = Draw::new(31);
    let mut h = DepthHistogram::default();
    let (lo, hi) = (h.edges()[0], h.edges()[100]);
    let depths: Vec<f32> = (0..10_000).map(|_| (lo * (hi / lo).powf(d.unit())) as f32).collect();
    histogram_update(&mut h, &DepthMap::new(100, 100, depths).unwrap());
    assert_eq!(h.counts().iter().sum::<u64>(), 10_000);
    let sigma = (10_000.0f64 * 0.01 * 0.99).sqrt();
    for &c in h.counts() {
        assert!((c as f64 - 100.0).abs() <= 3.0 * sigma, "count {c}");
    }
}

#[test]
fn chosen_scale_lands_median_in_emptiest_bin() {
    let mut d = Draw::new(32);
    for _ in 0..1000 {
        let mut h = DepthHistogram::default();
        for c in h.counts_mut() {
            *c = d.below(6) as u64;
        }
        let median = 10f64.powf(d.range(-2.0, 3.0));
        let s = choose_scale(&h, median).unwrap();
        let target = (0..100).min_by_key(|&b| (h.counts()[b], b)).unwrap();
        assert_eq!(h.bin_of(s.get() * median), Some(target));
    }
}

#[test]
fn greedy_fill_flattens_median_histogram() {
    let mut d = Draw::new(33);
    let mut seen = DepthHistogram::default();
    let mut medians = DepthHistogram::default();
    let base = render(&plane_scene(1.0, 8, 8.0, &[[0.1, 0.0, 0.0]])).unwrap();
    for _ in 0..1000 {
        let m = d.range(0.5, 30.0);
        let depth: Vec<f32> = (0..64).map(|_| (m * d.range(0.997, 1.003)) as f32).collect();
        let (key, others, _, _) = base.clone().into_parts();
        let sample = mvdepth_core::Sample::new(key, others, DepthMap::new(8, 8, depth).unwrap(), None).unwrap();
        let med = median_depth(sample.gt_depth()).unwrap();
        let s = choose_scale(&medians, med).unwrap();
        let scaled = apply_scale(&sample, s).unwrap();
        histogram_update(&mut seen, scaled.gt_depth());
        medians.add(median_depth(scaled.gt_depth()).unwrap());
    }
    let max = *medians.counts().iter().max().unwrap();
    let min = *medians.counts().iter().min().unwrap();
    assert!(max - min <= 1, "{min}..{max}");
    assert!(seen.counts().iter().all(|&c| c > 0));
}

#[test]
fn scaling_by_327() {
    let sample = render(&plane_scene(2.0, 16, 16.0, &[[0.1, 0.0, 0.0]])).unwrap();
    let scaled = apply_scale(&sample, ScaleFactor::new(3.27).unwrap()).unwrap();
    assert_relative_eq!(scaled.others()[0].pose.translation().norm(), 0.327, epsilon = 1e-12);
    assert_eq!(scaled.others()[0].pose.rotation(), sample.others()[0].pose.rotation());
    for (&a, &b) in scaled.gt_depth().data().iter().zip(sample.gt_depth().data()) {
        assert_relative_eq!(a as f64, 6.54, max_relative = 1e-6);
        assert_relative_eq!(1.0 / a as f64, (1.0 / b as f64) / 3.27, max_relative = 1e-6);
    }
    assert_eq!(scaled.keyview(), sample.keyview());
}

#[test]
fn mask_keeps_only_bounded_inverse_depths() {
    let mut d = Draw::new(34);
    let base = render(&plane_scene(1.0, 10, 10.0, &[[0.1, 0.0, 0.0]])).unwrap();
    for _ in 0..1000 {
        let depth: Vec<f32> = (0..100).map(|_| 10f64.powf(d.range(-1.0, 2.5)) as f32).collect();
        let (key, others, _, _) = base.clone().into_parts();
        let sample = mvdepth_core::Sample::new(key, others, DepthMap::new(10, 10, depth).unwrap(), None).unwrap();
        let s = 10f64.powf(d.range(-1.0, 1.0));
        let scaled = apply_scale(&sample, ScaleFactor::new(s).unwrap()).unwrap();
        for (&a, &b) in scaled.gt_depth().data().iter().zip(sample.gt_depth().data()) {
            let inv = 1.0 / (b as f64 * s);
            if (0.009..=2.75).contains(&inv) {
                assert_eq!(a, (b as f64 * s) as f32);
            } else {
                assert_eq!(a, 0.0);
            }
        }
    }
    let one = render(&plane_scene(1.0, 8, 8.0, &[[0.1, 0.0, 0.0]])).unwrap();
    let far = apply_scale(&one, ScaleFactor::new(1000.0).unwrap()).unwrap();
    assert_eq!(far.gt_depth().valid_count(), 0);
}

fn gradient_view(w: usize, h: usize) -> View {
    let k = mvdepth_core::synth::centered_intrinsics(10.0, w, h);
    View {
        image: Image::from_fn(w, h, 3, |x, y, c| ((x * 7 + y * 3 + c * 11) % 17) as f64 / 16.0),
        pose: Pose::from_translation([0.1, 0.0, 0.0]),
        intrinsics: k,
    }
}

#[test]
fn erased_fraction_stays_in_bounds() {
    let view = gradient_view(40, 30);
    let means = view.image.channel_means();
    for seed in 0..1000 {
        let out = erase_regions(std::slice::from_ref(&view), seed);
        let mut erased = 0;
        for y in 0..30 {
            for x in 0..40 {
                let changed = (0..3).any(|c| out[0].image.get(x, y, c) != view.image.get(x, y, c));
                let is_mean = (0..3).all(|c| out[0].image.get(x, y, c) == means[c]);
                assert!(!changed || is_mean);
                erased += is_mean as usize;
            }
        }
        let f = erased as f64 / 1200.0;
        assert!((0.01..=0.48).contains(&f), "seed {seed}: {f}");
        assert_eq!(out, erase_regions(std::slice::from_ref(&view), seed));
    }
    let flat = View { image: Image::filled(20, 20, 3, 0.3), ..gradient_view(20, 20) };
    assert_eq!(erase_regions(std::slice::from_ref(&flat), 5)[0], flat);
}

#[test]
fn photometric_draw_is_shared_and_clamped() {
    let views = vec![gradient_view(12, 9), gradient_view(12, 9)];
    for seed in 0..200 {
        let out = photometric_augment(&views, seed);
        assert_eq!(out[0], out[1]);
        assert!(out[0].image.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

mod common;

use approx::assert_relative_eq;
use common::Draw;
use mvdepth_core::decoder::{boundary_flags, decode_volume, parabola_offset, subpixel_refine, wta_decode};
use mvdepth_core::fusion::{confidence_weights, fuse_average, fuse_weighted};
use mvdepth_core::metrics::evaluate_sample;
use mvdepth_core::plane_sweep::{build_hypotheses, sweep_view, zncc_cost};
use mvdepth_core::synth::{plane_scene, random_scene, render};
use mvdepth_core::{estimate_depth, CostVolume, EvalSettings, FusionMode, Image, RangeSource, SweepConfig, View};

fn zncc_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if saa / n < 1e-12 || sbb / n < 1e-12 {
        return None;
    }
    Some((1.0 - sab / (saa * sbb).sqrt()) / 2.0)
}

#[test]
fn zncc_matches_direct_formula() {
    let mut d = Draw::new(5);
    for _ in 0..2000 {
        let a: Vec<f64> = (0..25).map(|_| d.unit()).collect();
        let b: Vec<f64> = if d.below(4) == 0 {
            a.iter().map(|v| 0.3 * v + 0.2).collect()
        } else {
            (0..25).map(|_| d.unit()).collect()
        };
        match (zncc_cost(&a, &b), zncc_oracle(&a, &b)) {
            (Some(x), Some(y)) => assert_relative_eq!(x, y, epsilon = 1e-12),
            (x, y) => assert_eq!(x.is_some(), y.is_some()),
        }
    }
    assert_eq!(zncc_cost(&[0.4; 25], &[0.1; 25]), None);
}

#[test]
fn sweep_minimum_sits_on_true_plane() {
    let cfg = SweepConfig { n_hyp: 64, ..SweepConfig::default() }.with_range(1.0, 4.0);
    let hyps = build_hypotheses(&cfg);
    let k_true = 31;
    let depth = 1.0 / hyps[k_true];
    let sample = render(&plane_scene(depth, 64, 64.0, &[[0.2, 0.0, 0.0]])).unwrap();
    let vol = sweep_view(sample.keyview(), &sample.others()[0], &cfg).unwrap();
    let wta = wta_decode(&vol);
    // pixels whose true correspondence is visible in the other view
    let observed: Vec<usize> = (0..vol.pixels()).filter(|&px| vol.is_valid(k_true, px)).collect();
    let hits = observed.iter().filter(|&&px| wta.index[px] == Some(k_true)).count();
    assert!(observed.len() > 64 * 40);
    assert!(hits as f64 >= 0.99 * observed.len() as f64, "{hits}/{}", observed.len());
}

#[test]
fn hypotheses_behind_surface_are_flagged() {
    // the plane is at 1 m; every hypothesis lies beyond it
    let sample = render(&plane_scene(1.0, 48, 48.0, &[[0.1, 0.0, 0.0]])).unwrap();
    let cfg = SweepConfig { n_hyp: 32, ..SweepConfig::default() }.with_range(1.2, 4.0);
    let vol = sweep_view(sample.keyview(), &sample.others()[0], &cfg).unwrap();
    let wta = wta_decode(&vol);
    let observed: Vec<usize> = (0..vol.pixels()).filter(|&px| vol.is_valid(31, px)).collect();
    let at_edge = observed.iter().filter(|&&px| wta.index[px] == Some(31)).count();
    assert!(at_edge as f64 >= 0.95 * observed.len() as f64, "{at_edge}/{}", observed.len());
    let decided = wta.index.iter().flatten().count();
    let flagged = boundary_flags(&vol, &wta).iter().filter(|&&b| b).count();
    assert!(flagged as f64 >= 0.95 * decided as f64);
    let est = decode_volume(&vol, cfg.softmin_temp);
    assert!((est.valid_count() as f64) < 0.05 * decided as f64);
}

#[test]
fn plane_scene_end_to_end() {
    let sample = render(&plane_scene(2.0, 128, 128.0, &[[0.2, 0.0, 0.0]])).unwrap();
    let cfg = SweepConfig::default().with_range(1.0, 4.0);
    let est = estimate_depth(&sample, &cfg, FusionMode::Average).unwrap();
    let m = evaluate_sample(&est, &sample, &EvalSettings::default()).unwrap();
    assert!(m.rel < 1.0 && m.tau > 95.0, "{m:?}");
}

#[test]
fn zero_baseline_is_uncertain() {
    let good = render(&plane_scene(2.0, 48, 48.0, &[[0.2, 0.0, 0.0]])).unwrap();
    let cfg = SweepConfig::default().with_range(1.0, 4.0);
    let reference = estimate_depth(&good, &cfg, FusionMode::Average).unwrap();
    let mut b: Vec<f64> = reference.uncertainty().iter().zip(reference.valid()).filter(|(_, &v)| v).map(|(u, _)| *u).collect();
    b.sort_by(f64::total_cmp);
    let median = b[b.len() / 2];

    let key = good.keyview().clone();
    let same = View { pose: key.pose, ..key.clone() };
    let degenerate = good.with_others(vec![same.clone(), same]).unwrap();
    let est = estimate_depth(&degenerate, &cfg, FusionMode::Weighted).unwrap();
    let reported: Vec<f64> = est.uncertainty().iter().copied().filter(|&u| u > 0.0).collect();
    assert!(reported.len() > 30 * 30);
    let high = reported.iter().filter(|&&u| u > median).count();
    assert!(high as f64 >= 0.9 * reported.len() as f64, "{high}/{}", reported.len());
}

#[test]
fn black_view_is_dropped_and_weighting_helps() {
    let sample = render(&random_scene(4, 64, 64.0, 3)).unwrap();
    let cfg = SweepConfig::default().for_sample(&sample, RangeSource::GroundTruth);
    let mut others = sample.others().to_vec();
    let (w, h) = others[1].image.dims();
    others[1].image = Image::filled(w, h, 3, 0.0);
    let corrupted = sample.with_others(others).unwrap();
    let without = sample.with_views(&[0, 2]).unwrap();
    for mode in [FusionMode::Average, FusionMode::Weighted] {
        assert_eq!(
            estimate_depth(&corrupted, &cfg, mode).unwrap(),
            estimate_depth(&without, &cfg, mode).unwrap()
        );
    }
    let rel = |mode| {
        let est = estimate_depth(&corrupted, &cfg, mode).unwrap();
        evaluate_sample(&est, &corrupted, &EvalSettings::default()).unwrap().rel
    };
    assert!(rel(FusionMode::Weighted) <= rel(FusionMode::Average));
}

fn random_volume(d: &mut Draw, pixels: usize, n_hyp: usize) -> CostVolume {
    let hyps: Vec<f64> = (0..n_hyp).map(|k| 0.1 + 0.05 * k as f64).collect();
    let valid: Vec<bool> = (0..pixels * n_hyp).map(|_| d.below(5) != 0).collect();
    let costs = valid.iter().map(|&v| if v { d.unit() } else { 1.0 }).collect();
    CostVolume::new(pixels, 1, hyps, costs, valid).unwrap()
}

#[test]
fn fusion_matches_direct_loops() {
    let mut d = Draw::new(8);
    for _ in 0..50 {
        let vols: Vec<CostVolume> = (0..3).map(|_| random_volume(&mut d, 20, 9)).collect();
        let avg = fuse_average(&vols).unwrap();
        let weights = confidence_weights(&vols, 0.25).unwrap();
        let weighted = fuse_weighted(&vols, &weights).unwrap();
        for k in 0..9 {
            for px in 0..20 {
                let live: Vec<usize> = (0..3).filter(|&v| vols[v].is_valid(k, px)).collect();
                assert_eq!(avg.is_valid(k, px), !live.is_empty());
                if live.is_empty() {
                    continue;
                }
                let mean = live.iter().map(|&v| vols[v].cost(k, px)).sum::<f64>() / live.len() as f64;
                assert_relative_eq!(avg.cost(k, px), mean, epsilon = 1e-14);
                let wsum: f64 = live.iter().map(|&v| weights[v][px]).sum();
                let wmean = live.iter().map(|&v| weights[v][px] * vols[v].cost(k, px)).sum::<f64>() / wsum;
                assert_relative_eq!(weighted.cost(k, px), wmean, epsilon = 1e-12);
            }
        }
        let uniform = vec![vec![0.5; 20]; 3];
        assert_eq!(fuse_weighted(&vols, &uniform).unwrap(), avg);
    }
}

#[test]
fn wta_and_refinement_match_linear_scan() {
    let mut d = Draw::new(9);
    for _ in 0..50 {
        let vol = random_volume(&mut d, 30, 12);
        let wta = wta_decode(&vol);
        let refined = subpixel_refine(&vol, &wta);
        for px in 0..30 {
            let mut best: Option<usize> = None;
            for k in 0..12 {
                if vol.is_valid(k, px) && best.is_none_or(|b| vol.cost(k, px) < vol.cost(b, px)) {
                    best = Some(k);
                }
            }
            assert_eq!(wta.index[px], best);
            let Some(k) = best else { continue };
            let inner = k > 0 && k < 11 && vol.is_valid(k - 1, px) && vol.is_valid(k + 1, px);
            let delta = if inner {
                let (a, b, c) = (vol.cost(k - 1, px), vol.cost(k, px), vol.cost(k + 1, px));
                // vertex of the interpolating quadratic, by Lagrange form
                let denom = a - 2.0 * b + c;
                if denom > 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 }
            } else {
                0.0
            };
            assert_relative_eq!(refined[px], vol.hypotheses()[k] + delta * 0.05, epsilon = 1e-12);
        }
    }
    assert_relative_eq!(parabola_offset(0.5, 0.1, 0.3), 1.0 / 6.0, epsilon = 1e-15);
}

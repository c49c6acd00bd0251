//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use mvdepth_core::augmentation::{
    choose_scale, histogram_update, median_depth, rng_from_seed, scale_depth_map, DepthHistogram,
};
use mvdepth_core::metrics::{aggregate_testset, error_uncertainty_pairs, evaluate_sample, sparsification};
use mvdepth_core::synth::{random_scene, render};
use mvdepth_core::view_selection::grow_selection;
use mvdepth_core::{estimate_depth, DepthEstimate, DepthMap, EvalSettings, FusionMode, Sample, SweepConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::{
    AlignArg, AugstatsArgs, Cli, Command, EstimateArgs, EvalArgs, SparsifyArgs, SweepArgs,
    SynthArgs, TrackArg, ViewselectArgs,
};
use crate::manifest::{self, Manifest, ManifestDoc};
use crate::report::{self, RunReport, SampleFailure, SampleRecord, SampleTiming, Settings, SettingsEcho, Timing};
use crate::{pfm, write_text};

/// Whether every sample was processed.
pub type Outcome = bool;

pub fn run(cli: Cli) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("building the thread pool")?;
    let seed = cli.seed;
    pool.install(|| match cli.command {
        Command::Estimate(a) => estimate(&a, seed),
        Command::Eval(a) => eval(&a, seed),
        Command::Viewselect(a) => viewselect(&a, seed),
        Command::Sparsify(a) => sparsify(&a, seed),
        Command::Augstats(a) => augstats(&a, seed),
        Command::Synth(a) => synth(&a, seed),
    })
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn sweep_config(s: &SweepArgs) -> Result<SweepConfig> {
    let cfg = SweepConfig {
        n_hyp: s.hyps,
        patch_radius: s.patch,
        ..SweepConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn settings(command: &str, manifest: Option<&Path>, range: &str, align: &str, fusion: &str, cfg: &SweepConfig, seed: u64) -> Settings {
    Settings {
        command: command.into(),
        manifest: manifest.map(|p| p.display().to_string()),
        range: range.into(),
        alignment: align.into(),
        fusion: fusion.into(),
        hyps: cfg.n_hyp,
        patch: cfg.patch_radius,
        softmin_temp: cfg.softmin_temp,
        weight_temp: cfg.weight_temp,
        seed,
    }
}

fn eval_settings(align: AlignArg) -> Result<EvalSettings> {
    let s = EvalSettings::with_alignment(align.0);
    s.validate()?;
    Ok(s)
}

/// Runs `f` for every sample in parallel; results stay in manifest order.
fn for_each_sample<T, F>(m: &Manifest, f: F) -> Vec<(String, Result<T>)>
where
    T: Send,
    F: Fn(usize, &str) -> Result<T> + Sync,
{
    (0..m.len())
        .into_par_iter()
        .map(|i| {
            let id = m.ids()[i].clone();
            let r = f(i, &id);
            (id, r)
        })
        .collect()
}

/// Splits results into successes and failures, reporting failures on stderr.
fn partition<T>(results: Vec<(String, Result<T>)>) -> (Vec<(String, T)>, Vec<SampleFailure>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) => {
                let error = format!("{e:#}");
                eprintln!("sample {id}: {error}");
                failed.push(SampleFailure { id, error });
            }
        }
    }
    (ok, failed)
}

fn load(m: &Manifest, i: usize) -> Result<Sample> {
    Ok(m.load_sample(i)?)
}

pub fn invdepth_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_invdepth.pfm"))
}

pub fn uncert_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_uncert.pfm"))
}

#[derive(Serialize)]
struct IndexEntry {
    id: String,
    invdepth: String,
    uncert: String,
    range: [f64; 2],
    valid_pixels: usize,
}

#[derive(Serialize)]
struct Index {
    settings: SettingsEcho,
    samples: Vec<IndexEntry>,
    errors: Vec<SampleFailure>,
}

fn estimate(a: &EstimateArgs, seed: u64) -> Result<Outcome> {
    let m = Manifest::load(&a.io.manifest)?;
    let base = sweep_config(&a.sweep)?;
    let mode = FusionMode::from(a.sweep.fusion);
    create_dir(&a.io.out)?;
    let results = for_each_sample(&m, |i, id| {
        let sample = load(&m, i)?;
        let cfg = base.for_sample(&sample, a.sweep.range.0);
        let start = Instant::now();
        let est = estimate_depth(&sample, &cfg, mode)?;
        let runtime_s = start.elapsed().as_secs_f64();
        pfm::write_inverse(&invdepth_path(&a.io.out, id), &est.inverse_depth_map())?;
        pfm::write_inverse(&uncert_path(&a.io.out, id), &est.uncertainty_map_f32())?;
        let entry = IndexEntry {
            id: id.to_string(),
            invdepth: format!("{id}_invdepth.pfm"),
            uncert: format!("{id}_uncert.pfm"),
            range: [cfg.d_min, cfg.d_max],
            valid_pixels: est.valid_count(),
        };
        Ok((entry, runtime_s))
    });
    let (ok, errors) = partition(results);
    let timing = Timing::new(
        ok.iter()
            .map(|(id, (_, t))| SampleTiming {
                id: id.clone(),
                runtime_s: *t,
            })
            .collect(),
    );
    let index = Index {
        settings: settings(
            "estimate",
            Some(&a.io.manifest),
            &a.sweep.range.to_string(),
            "none",
            &a.sweep.fusion.to_string(),
            &base,
            seed,
        )
        .into(),
        samples: ok.into_iter().map(|(_, (e, _))| e).collect(),
        errors,
    };
    report::write_json(&a.io.out.join("index.json"), &index)?;
    report::write_json(&a.io.out.join("timing.json"), &timing)?;
    Ok(index.errors.is_empty())
}

/// Prediction stored under `dir`; the uncertainty map is optional.
fn load_prediction(dir: &Path, id: &str) -> Result<(DepthEstimate, bool)> {
    let inv = pfm::read_inverse(&invdepth_path(dir, id))?;
    let up = uncert_path(dir, id);
    let unc = if up.exists() { Some(pfm::read_inverse(&up)?) } else { None };
    Ok((DepthEstimate::from_maps(&inv, unc.as_ref())?, unc.is_some()))
}

fn eval(a: &EvalArgs, seed: u64) -> Result<Outcome> {
    let m = Manifest::load(&a.io.manifest)?;
    let es = eval_settings(a.align)?;
    create_dir(&a.io.out)?;
    let results = for_each_sample(&m, |i, id| {
        let sample = load(&m, i)?;
        let (pred, has_unc) = load_prediction(&a.pred, id)?;
        let mut metrics = evaluate_sample(&pred, &sample, &es)?;
        let mut curve = None;
        if has_unc {
            if metrics.ause.is_some() {
                let (e, u) = error_uncertainty_pairs(&pred, sample.gt_depth(), &es)?;
                curve = Some(sparsification(&e, &u)?);
            }
        } else {
            metrics.ause = None;
        }
        Ok((metrics, curve))
    });
    let (ok, errors) = partition(results);
    let per: Vec<_> = ok.iter().map(|(_, (mt, _))| mt.clone()).collect();
    let records: Vec<SampleRecord> = ok.iter().map(|(id, (mt, _))| SampleRecord::new(id, mt)).collect();
    let curves: Vec<(&str, _)> = ok
        .iter()
        .filter_map(|(id, (_, c))| c.as_ref().map(|c| (id.as_str(), c)))
        .collect();
    let run = RunReport {
        settings: settings(
            "eval",
            Some(&a.io.manifest),
            &a.range.to_string(),
            &a.align.to_string(),
            "",
            &SweepConfig::default(),
            seed,
        )
        .into(),
        testset: aggregate_testset(&per).ok().map(|r| (&r).into()),
        per_sample: records,
        errors,
    };
    report::write_json(&a.io.out.join("report.json"), &run)?;
    write_text(&a.io.out.join("per_sample.csv"), &report::per_sample_csv(&run.per_sample))?;
    write_text(&a.io.out.join("sparsification.csv"), &report::sparsification_csv(&curves, true))?;
    Ok(run.errors.is_empty())
}

fn viewselect(a: &ViewselectArgs, seed: u64) -> Result<Outcome> {
    let m = Manifest::load(&a.io.manifest)?;
    let base = sweep_config(&a.sweep)?;
    let mode = FusionMode::from(a.sweep.fusion);
    let es = eval_settings(a.align)?;
    create_dir(&a.io.out)?;
    let results = for_each_sample(&m, |i, id| {
        let sample = load(&m, i)?;
        let cfg = base.for_sample(&sample, a.sweep.range.0);
        let mut estimator = |s: &Sample| estimate_depth(s, &cfg, mode);
        let sel = grow_selection(&sample, &mut estimator, &es)?;
        write_text(&a.io.out.join(format!("{id}_viewselect.csv")), &report::selection_csv(&sel.curve))?;
        let zero_based: Vec<usize> = sel.best_views().iter().map(|v| v - 1).collect();
        let best = sample.with_views(&zero_based)?;
        let metrics = evaluate_sample(&estimate_depth(&best, &cfg, mode)?, &best, &es)?;
        let mut record = SampleRecord::new(id, &metrics);
        record.best_view_set = Some(sel.best_views().to_vec());
        Ok((metrics, record))
    });
    let (ok, errors) = partition(results);
    let per: Vec<_> = ok.iter().map(|(_, (mt, _))| mt.clone()).collect();
    let run = RunReport {
        settings: settings(
            "viewselect",
            Some(&a.io.manifest),
            &a.sweep.range.to_string(),
            &a.align.to_string(),
            &a.sweep.fusion.to_string(),
            &base,
            seed,
        )
        .into(),
        testset: aggregate_testset(&per).ok().map(|r| (&r).into()),
        per_sample: ok.into_iter().map(|(_, (_, r))| r).collect(),
        errors,
    };
    report::write_json(&a.io.out.join("viewselect.json"), &run)?;
    Ok(run.errors.is_empty())
}

#[derive(Serialize)]
struct SparsifyRecord {
    id: String,
    pixels: usize,
    ause: f64,
}

#[derive(Serialize)]
struct SparsifyReport {
    settings: SettingsEcho,
    per_sample: Vec<SparsifyRecord>,
    mean_ause: Option<f64>,
    errors: Vec<SampleFailure>,
}

fn sparsify(a: &SparsifyArgs, seed: u64) -> Result<Outcome> {
    let m = Manifest::load(&a.io.manifest)?;
    let es = eval_settings(a.align)?;
    create_dir(&a.io.out)?;
    let results = for_each_sample(&m, |i, id| {
        let sample = load(&m, i)?;
        let (pred, has_unc) = load_prediction(&a.pred, id)?;
        if !has_unc {
            bail!("missing {}", uncert_path(&a.pred, id).display());
        }
        let (e, u) = error_uncertainty_pairs(&pred, sample.gt_depth(), &es)?;
        let curve = sparsification(&e, &u)?;
        write_text(
            &a.io.out.join(format!("{id}_sparsification.csv")),
            &report::sparsification_csv(&[(id, &curve)], false),
        )?;
        Ok(SparsifyRecord {
            id: id.to_string(),
            pixels: e.len(),
            ause: curve.ause,
        })
    });
    let (ok, errors) = partition(results);
    let per_sample: Vec<SparsifyRecord> = ok.into_iter().map(|(_, r)| r).collect();
    let mean_ause =
        (!per_sample.is_empty()).then(|| per_sample.iter().map(|r| r.ause).sum::<f64>() / per_sample.len() as f64);
    let rep = SparsifyReport {
        settings: settings(
            "sparsify",
            Some(&a.io.manifest),
            "",
            &a.align.to_string(),
            "",
            &SweepConfig::default(),
            seed,
        )
        .into(),
        per_sample,
        mean_ause,
        errors,
    };
    report::write_json(&a.io.out.join("sparsify.json"), &rep)?;
    Ok(rep.errors.is_empty())
}

#[derive(Serialize)]
struct AugstatsReport {
    iterations: usize,
    bins: usize,
    seed: u64,
    track: String,
    source: String,
    depth_count_range: [u64; 2],
    median_count_range: [u64; 2],
}

/// Synthetic ground truth: 16x16 depths spread by up to +-30 % around a
/// log-uniform median in 0.5-50 m.
fn synthetic_depths(rng: &mut rand_pcg::Pcg32) -> DepthMap {
    use rand_core::Rng;
    let mut unit = || rng.next_u32() as f64 / 4_294_967_296.0;
    let median = 0.5 * 100f64.powf(unit());
    let data = (0..256).map(|_| (median * (0.6 * unit() - 0.3).exp()) as f32).collect();
    DepthMap::new(16, 16, data).expect("fixed shape")
}

fn augstats(a: &AugstatsArgs, seed: u64) -> Result<Outcome> {
    use rand_core::Rng;
    if a.bins == 0 {
        bail!("--bins must be positive");
    }
    let pool: Vec<Sample> = match &a.manifest {
        Some(p) => {
            let m = Manifest::load(p)?;
            (0..m.len()).map(|i| load(&m, i)).collect::<Result<_>>()?
        }
        None => Vec::new(),
    };
    if a.manifest.is_some() && pool.is_empty() {
        bail!("manifest has no samples");
    }
    create_dir(&a.out)?;
    let mut rng = rng_from_seed(seed);
    let mut depths = DepthHistogram::new(a.bins);
    let mut medians = DepthHistogram::new(a.bins);
    for _ in 0..a.iterations {
        let gt = if pool.is_empty() {
            synthetic_depths(&mut rng)
        } else {
            let i = ((rng.next_u32() as u64 * pool.len() as u64) >> 32) as usize;
            pool[i].gt_depth().clone()
        };
        let Some(med) = median_depth(&gt) else { continue };
        let driver = match a.track {
            TrackArg::Depths => &depths,
            TrackArg::Medians => &medians,
        };
        let s = choose_scale(driver, med)?;
        let scaled = scale_depth_map(&gt, s);
        histogram_update(&mut depths, &scaled);
        // the factor targets the median before masking
        medians.add(s.get() * med);
    }
    let labels: Vec<f64> = (0..a.bins).map(|b| depths.label(b)).collect();
    write_text(&a.out.join("augstats.csv"), &report::histogram_csv(&labels, depths.counts()))?;
    write_text(&a.out.join("augstats_medians.csv"), &report::histogram_csv(&labels, medians.counts()))?;
    let span = |h: &DepthHistogram| {
        [
            *h.counts().iter().min().unwrap_or(&0),
            *h.counts().iter().max().unwrap_or(&0),
        ]
    };
    report::write_json(
        &a.out.join("augstats.json"),
        &AugstatsReport {
            iterations: a.iterations,
            bins: a.bins,
            seed,
            track: format!("{:?}", a.track).to_lowercase(),
            source: a.manifest.as_ref().map_or("synthetic".into(), |p| p.display().to_string()),
            depth_count_range: span(&depths),
            median_count_range: span(&medians),
        },
    )?;
    Ok(true)
}

fn synth(a: &SynthArgs, seed: u64) -> Result<Outcome> {
    if a.views == 0 || a.samples == 0 {
        bail!("--samples and --views must be positive");
    }
    create_dir(&a.out)?;
    let focal = a.focal.unwrap_or(a.size as f64);
    let entries = (0..a.samples)
        .into_par_iter()
        .map(|i| {
            let id = format!("synth_{i:04}");
            let scene_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let sample = render(&random_scene(scene_seed, a.size, focal, a.views))?;
            Ok(manifest::write_sample(&a.out, &id, &sample)?)
        })
        .collect::<Result<Vec<_>>>()?;
    manifest::write_doc(&a.out.join("manifest.json"), &ManifestDoc { samples: entries })?;
    Ok(true)
}


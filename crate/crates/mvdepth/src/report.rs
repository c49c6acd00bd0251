//! Run reports: JSON documents plus CSV sidecars.
//!
//! Reports hold only deterministic content. Wall-clock runtimes go to a
//! separate `timing.json` so that reports from runs with different thread
//! counts compare byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use mvdepth_core::metrics::{EvalResult, SampleMetrics, SparsificationResult};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{write_bytes, Result};

/// Every setting that influences a command's output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub command: String,
    pub manifest: Option<String>,
    pub range: String,
    pub alignment: String,
    pub fusion: String,
    pub hyps: usize,
    pub patch: usize,
    pub softmin_temp: f64,
    pub weight_temp: f64,
    pub seed: u64,
}

impl Settings {
    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("settings serialize");
        Sha256::digest(&json).iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingsEcho {
    #[serde(flatten)]
    pub settings: Settings,
    pub config_hash: String,
}

impl From<Settings> for SettingsEcho {
    fn from(settings: Settings) -> Self {
        let config_hash = settings.hash();
        Self { settings, config_hash }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub id: String,
    pub rel: f64,
    pub tau: f64,
    pub ause: Option<f64>,
    pub valid_pixels: usize,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_view_set: Option<Vec<usize>>,
}

impl SampleRecord {
    pub fn new(id: &str, m: &SampleMetrics) -> Self {
        Self {
            id: id.to_string(),
            rel: m.rel,
            tau: m.tau,
            ause: m.ause,
            valid_pixels: m.valid_pixels,
            scale: m.scale,
            best_view_set: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestsetSummary {
    pub samples: usize,
    pub mean_rel: f64,
    pub mean_tau: f64,
    pub mean_ause: Option<f64>,
}

impl From<&EvalResult> for TestsetSummary {
    fn from(r: &EvalResult) -> Self {
        Self {
            samples: r.per_sample.len(),
            mean_rel: r.mean_rel,
            mean_tau: r.mean_tau,
            mean_ause: r.mean_ause,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub settings: SettingsEcho,
    pub per_sample: Vec<SampleRecord>,
    /// Absent when no sample succeeded.
    pub testset: Option<TestsetSummary>,
    pub errors: Vec<SampleFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleTiming {
    pub id: String,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub per_sample: Vec<SampleTiming>,
    pub mean_runtime_s: Option<f64>,
}

impl Timing {
    pub fn new(per_sample: Vec<SampleTiming>) -> Self {
        let mean_runtime_s = (!per_sample.is_empty())
            .then(|| per_sample.iter().map(|t| t.runtime_s).sum::<f64>() / per_sample.len() as f64);
        Self {
            per_sample,
            mean_runtime_s,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value).expect("report serializes");
    json.push(b'\n');
    write_bytes(path, &json)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `id,rel,tau,ause,valid_pixels,scale`
pub fn per_sample_csv(records: &[SampleRecord]) -> String {
    let mut s = String::from("id,rel,tau,ause,valid_pixels,scale\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.id, r.rel, r.tau, opt(r.ause), r.valid_pixels, r.scale);
    }
    s
}

/// `fraction,oracle,uncert,error`, optionally prefixed by an id column.
pub fn sparsification_csv(curves: &[(&str, &SparsificationResult)], with_id: bool) -> String {
    let mut s = String::from(if with_id {
        "id,fraction,oracle,uncert,error\n"
    } else {
        "fraction,oracle,uncert,error\n"
    });
    for (id, c) in curves {
        for i in 0..c.fractions.len() {
            if with_id {
                let _ = write!(s, "{id},");
            }
            let _ = writeln!(s, "{},{},{},{}", c.fractions[i], c.oracle[i], c.uncertainty[i], c.error[i]);
        }
    }
    s
}

/// `size,rel`
pub fn selection_csv(curve: &[f64]) -> String {
    let mut s = String::from("size,rel\n");
    for (i, rel) in curve.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, rel);
    }
    s
}

/// `bin_label,count`
pub fn histogram_csv(labels: &[f64], counts: &[u64]) -> String {
    let mut s = String::from("bin_label,count\n");
    for (l, c) in labels.iter().zip(counts) {
        let _ = writeln!(s, "{l},{c}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> Settings {
        Settings {
            command: "eval".into(),
            manifest: Some("m.json".into()),
            range: "gt".into(),
            alignment: "none".into(),
            fusion: "average".into(),
            hyps: 64,
            patch: 2,
            softmin_temp: 0.05,
            weight_temp: 0.25,
            seed: 0,
        }
    }

    #[test]
    fn hash_tracks_settings() {
        let a = settings();
        let mut b = settings();
        assert_eq!(a.hash(), settings().hash());
        assert_eq!(a.hash().len(), 64);
        b.hyps = 32;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(selection_csv(&[2.5, 1.0]), "size,rel\n1,2.5\n2,1\n");
        assert_eq!(histogram_csv(&[0.5], &[3]), "bin_label,count\n0.5,3\n");
    }
}

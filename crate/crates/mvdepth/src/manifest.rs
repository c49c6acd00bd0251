//! JSON manifests listing samples by file path.
//!
//! ```json
//! {
//!   "samples": [{
//!     "id": "scene0",
//!     "key_image": "scene0/key.ppm",
//!     "key_depth": "scene0/key_depth.pfm",
//!     "key_intrinsics": [fx, fy, cx, cy],
//!     "gt_range": [0.2, 100.0],
//!     "views": [{
//!       "image": "scene0/view1.ppm",
//!       "pose_3x4_row_major": [r00, r01, r02, t0, r10, r11, r12, t1, r20, r21, r22, t2],
//!       "intrinsics": [fx, fy, cx, cy]
//!     }]
//!   }]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. Poses map view camera
//! coordinates into the keyview camera frame. `key_intrinsics` defaults to
//! the first view's intrinsics; `id` defaults to `sample_NNNN`.

use std::path::{Path, PathBuf};

use mvdepth_core::{Intrinsics, Pose, Sample, View};
use serde::{Deserialize, Serialize};

use crate::error::{read_bytes, write_bytes, IoError, Result};
use crate::{pfm, ppm};

/// Rotation blocks may deviate from orthonormal by this much.
pub const POSE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub image: PathBuf,
    pub pose_3x4_row_major: [f64; 12],
    pub intrinsics: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub key_image: PathBuf,
    pub key_depth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_intrinsics: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_range: Option<[f64; 2]>,
    pub views: Vec<ViewEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDoc {
    pub samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    path: PathBuf,
    root: PathBuf,
    doc: ManifestDoc,
    ids: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_bytes(path)?;
        let doc: ManifestDoc = serde_json::from_slice(&bytes).map_err(|e| IoError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_doc(path, root, doc)
    }

    /// Validates ids (unique, usable as file name prefixes).
    pub fn from_doc(path: &Path, root: PathBuf, doc: ManifestDoc) -> Result<Self> {
        let bad = |message: String| IoError::Manifest {
            path: path.to_path_buf(),
            message,
        };
        let mut ids = Vec::with_capacity(doc.samples.len());
        for (i, s) in doc.samples.iter().enumerate() {
            let id = s.id.clone().unwrap_or_else(|| format!("sample_{i:04}"));
            if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) {
                return Err(bad(format!("sample {i}: id {id:?} is not a plain file name")));
            }
            if ids.contains(&id) {
                return Err(bad(format!("duplicate sample id {id:?}")));
            }
            ids.push(id);
        }
        Ok(Self {
            path: path.to_path_buf(),
            root,
            doc,
            ids,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.doc.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc.samples.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn entry(&self, index: usize) -> &SampleEntry {
        &self.doc.samples[index]
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    /// Reads and validates sample `index`.
    pub fn load_sample(&self, index: usize) -> Result<Sample> {
        let e = self.doc.samples.get(index).ok_or_else(|| IoError::Manifest {
            path: self.path.clone(),
            message: format!("sample index {index} out of range ({})", self.len()),
        })?;
        let bad = |message: String| IoError::Manifest {
            path: self.path.clone(),
            message: format!("sample {}: {message}", self.ids[index]),
        };
        let key_k = e
            .key_intrinsics
            .or_else(|| e.views.first().map(|v| v.intrinsics))
            .ok_or_else(|| bad("no views".into()))?;
        let keyview = View {
            image: ppm::read(&self.resolve(&e.key_image))?,
            pose: Pose::identity(),
            intrinsics: intrinsics(&key_k).map_err(|m| bad(format!("key_intrinsics: {m}")))?,
        };
        let gt = pfm::read_depth(&self.resolve(&e.key_depth))?;
        let mut others = Vec::with_capacity(e.views.len());
        for (i, v) in e.views.iter().enumerate() {
            let pose = Pose::from_3x4_row_major(&v.pose_3x4_row_major, POSE_TOLERANCE)
                .map_err(|err| bad(format!("view {}: {err}", i + 1)))?;
            let k = intrinsics(&v.intrinsics).map_err(|m| bad(format!("view {}: {m}", i + 1)))?;
            let image = ppm::read(&self.resolve(&v.image))?;
            if image.dims() != keyview.image.dims() {
                return Err(bad(format!(
                    "view {} is {:?}, keyview is {:?}",
                    i + 1,
                    image.dims(),
                    keyview.image.dims()
                )));
            }
            others.push(View {
                image,
                pose,
                intrinsics: k,
            });
        }
        let range = e.gt_range.map(|[lo, hi]| (lo, hi));
        Sample::new(keyview, others, gt, range).map_err(|err| bad(err.to_string()))
    }
}

fn intrinsics(k: &[f64; 4]) -> std::result::Result<Intrinsics, String> {
    Intrinsics::new(k[0], k[1], k[2], k[3]).map_err(|e| e.to_string())
}

pub fn write_doc(path: &Path, doc: &ManifestDoc) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(doc).expect("manifest serializes");
    json.push(b'\n');
    write_bytes(path, &json)
}

/// Writes `sample` as image and depth files under `dir/<id>/` and returns its
/// manifest entry with paths relative to `dir`.
pub fn write_sample(dir: &Path, id: &str, sample: &Sample) -> Result<SampleEntry> {
    let sub = dir.join(id);
    std::fs::create_dir_all(&sub).map_err(|source| IoError::Write {
        path: sub.clone(),
        source,
    })?;
    let rel = PathBuf::from(id);
    ppm::write(&sub.join("key.ppm"), &sample.keyview().image)?;
    pfm::write_depth(&sub.join("key_depth.pfm"), sample.gt_depth())?;
    let k = &sample.keyview().intrinsics;
    let mut views = Vec::new();
    for (i, v) in sample.others().iter().enumerate() {
        let name = format!("view{}.ppm", i + 1);
        ppm::write(&sub.join(&name), &v.image)?;
        views.push(ViewEntry {
            image: rel.join(name),
            pose_3x4_row_major: v.pose.to_3x4_row_major(),
            intrinsics: [v.intrinsics.fx, v.intrinsics.fy, v.intrinsics.cx, v.intrinsics.cy],
        });
    }
    Ok(SampleEntry {
        id: Some(id.to_string()),
        key_image: rel.join("key.ppm"),
        key_depth: rel.join("key_depth.pfm"),
        key_intrinsics: Some([k.fx, k.fy, k.cx, k.cy]),
        gt_range: sample.gt_range().map(|(lo, hi)| [lo, hi]),
        views,
    })
}

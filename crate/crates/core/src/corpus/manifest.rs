//! Manifest, annotation and summary files (JSON).
//!
//! Relative paths inside a manifest resolve against the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::features::{read_feature_file, write_feature_file};
use super::{AnnotatedVideo, FeatureKind, Segment, Summary, DEFAULT_SNIPPET_SECONDS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub videos: Vec<ManifestVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestVideo {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default = "default_snippet_seconds")]
    pub snippet_seconds: f64,
    pub n_snippets: usize,
    pub features: BTreeMap<String, FeatureEntry>,
    #[serde(default)]
    pub shots: Vec<(usize, usize)>,
    pub annotation: PathBuf,
}

fn default_snippet_seconds() -> f64 {
    DEFAULT_SNIPPET_SECONDS
}

/// Either a bare path (dense features) or a path with an explicit kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureEntry {
    Path(PathBuf),
    Typed { path: PathBuf, kind: FeatureKind },
}

impl FeatureEntry {
    pub fn path(&self) -> &Path {
        match self {
            FeatureEntry::Path(p) | FeatureEntry::Typed { path: p, .. } => p,
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureEntry::Path(_) => FeatureKind::Dense,
            FeatureEntry::Typed { kind, .. } => *kind,
        }
    }
}

/// Summary file: `{video_id, budget_snippets, snippet_indices}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub video_id: String,
    pub budget_snippets: usize,
    pub snippet_indices: Vec<usize>,
}

impl SummaryFile {
    pub fn new(summary: &Summary, budget_snippets: usize) -> Self {
        SummaryFile {
            video_id: summary.video_id.clone(),
            budget_snippets,
            snippet_indices: summary.snippet_indices.clone(),
        }
    }

    pub fn summary(&self) -> Summary {
        Summary::new(self.video_id.clone(), self.snippet_indices.clone())
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<AnnotatedVideo>> {
    let manifest: Manifest = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest.videos.iter().map(|entry| load_video(base, entry)).collect()
}

fn load_video(base: &Path, entry: &ManifestVideo) -> Result<AnnotatedVideo> {
    let mut features = BTreeMap::new();
    for (name, fe) in &entry.features {
        let fpath = resolve(base, fe.path());
        if !fpath.is_file() {
            return Err(Error::MissingFeature {
                video: entry.id.clone(),
                feature: format!("{name} ({})", fpath.display()),
            });
        }
        features.insert(name.clone(), read_feature_file(&fpath, name, fe.kind())?);
    }
    let segments: Vec<Segment> = read_json(&resolve(base, &entry.annotation))?;
    let video = AnnotatedVideo::new(
        entry.id.clone(),
        entry.snippet_seconds,
        entry.n_snippets,
        features,
        entry.shots.clone(),
        segments,
    )?;
    Ok(match &entry.domain {
        Some(d) => video.with_domain(d.clone()),
        None => video,
    })
}

/// Writes feature files, annotations and a manifest named `manifest.json`
/// into `dir`; returns the manifest path.
pub fn save_manifest(videos: &[AnnotatedVideo], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(videos.len());
    for v in videos {
        let mut features = BTreeMap::new();
        for (name, fm) in &v.features {
            let file = PathBuf::from(format!("{}__{}.bin", v.id, name));
            write_feature_file(&dir.join(&file), fm)?;
            features.insert(
                name.clone(),
                FeatureEntry::Typed {
                    path: file,
                    kind: fm.kind,
                },
            );
        }
        let annotation = PathBuf::from(format!("{}.annotation.json", v.id));
        write_json(&dir.join(&annotation), &v.segments)?;
        entries.push(ManifestVideo {
            id: v.id.clone(),
            domain: v.domain.clone(),
            snippet_seconds: v.snippet_seconds,
            n_snippets: v.n_snippets,
            features,
            shots: v.shots.clone(),
            annotation,
        });
    }
    let path = dir.join("manifest.json");
    write_json(&path, &Manifest { videos: entries })?;
    Ok(path)
}

pub fn save_summary(path: &Path, summary: &Summary, budget_snippets: usize) -> Result<()> {
    write_json(path, &SummaryFile::new(summary, budget_snippets))
}

pub fn load_summary(path: &Path) -> Result<SummaryFile> {
    read_json(path)
}

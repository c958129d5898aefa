use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::tasks::{TaskInstance, TaskKind};

/// One JSONL line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub domain: String,
    pub task_type: TaskKind,
    pub level: u8,
    pub d: usize,
    pub k: usize,
    pub prompt: String,
    pub answer: String,
    pub theorem_name: String,
    pub seed: u64,
    /// Everything needed to grade the record again.
    pub task: TaskInstance,
}

impl DatasetRecord {
    pub fn new(task: &TaskInstance, index: usize, prompt: String) -> Self {
        let spec = task.spec();
        DatasetRecord {
            id: format!("{}-{}-L{}-{:03}", task.domain(), task.kind(), spec.level, index),
            domain: task.domain().to_string(),
            task_type: task.kind(),
            level: spec.level,
            d: spec.d,
            k: spec.k,
            prompt,
            answer: task.answer_text(),
            theorem_name: task.theorem_name().to_string(),
            seed: task.seed(),
            task: task.clone(),
        }
    }
}

pub fn config_key(domain: &str, kind: TaskKind, level: u8) -> String {
    format!("{domain}/{kind}/L{level}")
}

/// Run facts the records alone do not carry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub global_seed: u64,
    pub tool_versions: BTreeMap<String, String>,
    pub domains: Vec<String>,
    pub shortfall: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub global_seed: u64,
    pub tool_versions: BTreeMap<String, String>,
    pub domains: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub shortfall: BTreeMap<String, usize>,
    pub records: usize,
    pub dataset_sha256: String,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
    /// Hash of every other field, so it is stable across reruns.
    pub content_hash: String,
}

impl Manifest {
    fn compute_hash(&self) -> String {
        let mut bare = self.clone();
        bare.timestamp = 0;
        bare.content_hash.clear();
        let bytes = serde_json::to_vec(&bare).expect("manifest serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serializing record {id}: {source}")]
    Json {
        id: String,
        #[source]
        source: serde_json::Error,
    },
}

/// `data.jsonl` → `data.manifest.json`, next to it.
pub fn manifest_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.manifest.json"))
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

/// Writes one record per line to `path` and the manifest beside it.
pub fn emit_jsonl(records: &[DatasetRecord], path: &Path, meta: ManifestMeta) -> Result<Manifest, EmitError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| EmitError::Io { path: p, source }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let mut hasher = Sha256::new();
    let mut w = BufWriter::new(File::create(path).map_err(io(path))?);
    let mut counts = BTreeMap::new();
    for r in records {
        let mut line = serde_json::to_vec(r).map_err(|source| EmitError::Json {
            id: r.id.clone(),
            source,
        })?;
        line.push(b'\n');
        hasher.update(&line);
        w.write_all(&line).map_err(io(path))?;
        *counts.entry(config_key(&r.domain, r.task_type, r.level)).or_insert(0) += 1;
    }
    w.flush().map_err(io(path))?;
    let mut manifest = Manifest {
        global_seed: meta.global_seed,
        tool_versions: meta.tool_versions,
        domains: meta.domains,
        counts,
        shortfall: meta.shortfall,
        records: records.len(),
        dataset_sha256: hex::encode(hasher.finalize()),
        timestamp: timestamp(),
        content_hash: String::new(),
    };
    manifest.content_hash = manifest.compute_hash();
    let mpath = manifest_path(path);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&mpath, text).map_err(io(&mpath))?;
    Ok(manifest)
}

/// Reads a dataset written by [`emit_jsonl`].
pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, EmitError> {
    let text = std::fs::read_to_string(path).map_err(|source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| EmitError::Json {
                id: format!("line {}", i + 1),
                source,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/none.jsonl");
        let m = emit_jsonl(&[], &path, ManifestMeta::default()).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"");
        assert_eq!(m.records, 0);
        assert!(m.counts.is_empty());
        let written: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/none.manifest.json")).unwrap()).unwrap();
        assert_eq!(written, m);
        assert_eq!(m.dataset_sha256, hex::encode(Sha256::digest(b"")));
    }

    #[test]
    fn hash_ignores_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let a = emit_jsonl(&[], &dir.path().join("a.jsonl"), ManifestMeta::default()).unwrap();
        let mut b = a.clone();
        b.timestamp += 1000;
        assert_eq!(a.compute_hash(), b.compute_hash());
        b.global_seed = 1;
        assert_ne!(a.compute_hash(), b.compute_hash());
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_jsonl(&[], &blocker.join("x.jsonl"), ManifestMeta::default()).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}

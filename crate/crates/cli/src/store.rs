//! Append-only, content-addressed directory of trace documents.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use navslice::rewrite::Trace;
use navslice::webapp::resolve_builtins;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::docs::SearchStats;
use crate::error::AppError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub theory_hash: String,
    pub property: String,
    pub verdict: String,
    pub created_at: String,
    pub stats: SearchStats,
}

pub struct TraceStore {
    root: PathBuf,
    append: Mutex<()>,
}

/// Content hash of a trace document as it is written to disk.
pub fn trace_id(json: &str) -> String {
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn well_formed(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

impl TraceStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, AppError> {
        let root = root.into();
        fs::create_dir_all(root.join("traces"))?;
        Ok(TraceStore { root, append: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.root.join("traces").join(format!("{id}.json"))
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.jsonl")
    }

    pub fn entries(&self) -> Result<Vec<IndexEntry>, AppError> {
        let text = match fs::read_to_string(self.index_path()) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| AppError::Internal(format!("corrupt index: {e}"))))
            .collect()
    }

    pub fn entry(&self, id: &str) -> Result<IndexEntry, AppError> {
        if !well_formed(id) {
            return Err(AppError::NotFound(format!("trace {id}")));
        }
        self.entries()?.into_iter().find(|e| e.id == id).ok_or_else(|| AppError::NotFound(format!("trace {id}")))
    }

    /// Stored traces for the same theory and property.
    pub fn find(&self, theory_hash: &str, property: &str) -> Result<Vec<IndexEntry>, AppError> {
        Ok(self.entries()?.into_iter().filter(|e| e.theory_hash == theory_hash && e.property == property).collect())
    }

    /// Stores a trace unless an identical document is already present.
    pub fn put(&self, trace: &Trace, verdict: &str, stats: SearchStats) -> Result<IndexEntry, AppError> {
        let json = trace.to_json();
        let id = trace_id(&json);
        let _guard = self.append.lock().expect("store lock");
        if let Some(e) = self.entries()?.into_iter().find(|e| e.id == id) {
            return Ok(e);
        }
        let tmp = self.root.join("traces").join(format!(".{id}.tmp"));
        fs::write(&tmp, &json)?;
        fs::rename(&tmp, self.path(&id))?;
        let entry = IndexEntry {
            id,
            theory_hash: trace.theory.hash(),
            property: trace.property.clone().unwrap_or_default(),
            verdict: verdict.into(),
            created_at: chrono::Utc::now().to_rfc3339(),
            stats,
        };
        let mut line = serde_json::to_string(&entry).expect("entry serialises");
        line.push('\n');
        OpenOptions::new().create(true).append(true).open(self.index_path())?.write_all(line.as_bytes())?;
        Ok(entry)
    }

    pub fn load(&self, id: &str) -> Result<Trace, AppError> {
        self.entry(id)?;
        load_trace_file(&self.path(id))
    }
}

pub fn load_trace_file(path: &Path) -> Result<Trace, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::Load(format!("{}: {e}", path.display())))?;
    Trace::from_json(&text, resolve_builtins).map_err(|e| AppError::Load(format!("{}: {e}", path.display())))
}

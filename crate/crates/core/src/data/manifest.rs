//! Dataset manifest: maps recording files to subjects and diagnoses.
//!
//! Signal files carry no diagnosis, so ingestion needs a sidecar JSON
//! document:
//!
//! ```json
//! {
//!   "subjects": [
//!     { "file": "s01.edf", "label": "SZ" },
//!     { "file": "h01.edf", "label": "HC", "id": "control-01" }
//!   ]
//! }
//! ```
//!
//! `id` is optional and defaults to the file stem. Paths are interpreted
//! relative to the manifest's own directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Label;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub file: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl SubjectEntry {
    /// The subject identifier: the explicit `id`, else the file stem.
    pub fn subject_id(&self) -> String {
        match &self.id {
            Some(id) => id.clone(),
            None => Path::new(&self.file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.file.clone()),
        }
    }

    /// The entry's path resolved against the manifest directory.
    pub fn resolved_path(&self, manifest_dir: &Path) -> PathBuf {
        let p = Path::new(&self.file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_dir.join(p)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub subjects: Vec<SubjectEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subjects.is_empty() {
            return Err(Error::config("manifest lists no subjects".to_string()));
        }
        let mut files = HashSet::new();
        let mut ids = HashSet::new();
        for entry in &self.subjects {
            if entry.file.is_empty() {
                return Err(Error::config("manifest entry with empty file".to_string()));
            }
            if !files.insert(entry.file.as_str()) {
                return Err(Error::config(format!(
                    "manifest lists '{}' twice",
                    entry.file
                )));
            }
            let id = entry.subject_id();
            if !ids.insert(id.clone()) {
                return Err(Error::config(format!(
                    "manifest has two subjects with id '{id}'"
                )));
            }
        }
        Ok(())
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let sz = self
            .subjects
            .iter()
            .filter(|s| s.label == Label::Sz)
            .count();
        (sz, self.subjects.len() - sz)
    }
}

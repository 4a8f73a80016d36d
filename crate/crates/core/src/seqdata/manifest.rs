use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{validate_id, ProteinSequence, SeqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Image or sequence path, relative to the manifest's directory.
    pub path: String,
    pub label: Option<String>,
    pub split: Split,
}

/// Binds sequence ids to files, labels and split assignments.
///
/// `max_len` is the longest sequence in the rendered dataset; one-hot
/// featurization uses it so that train and test rows share a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub seed: u64,
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
}

impl DatasetManifest {
    /// Builds a manifest from sequences; `path_of` names each entry's file.
    /// Classes are the sorted distinct labels.
    pub fn from_sequences<F>(seqs: &[ProteinSequence], seed: u64, mut path_of: F) -> Result<Self, SeqError>
    where
        F: FnMut(&ProteinSequence) -> String,
    {
        let classes: BTreeSet<String> = seqs.iter().filter_map(|s| s.label().map(str::to_string)).collect();
        let m = Self {
            seed,
            classes: classes.into_iter().collect(),
            entries: seqs
                .iter()
                .map(|s| ManifestEntry {
                    id: s.id().to_string(),
                    path: path_of(s),
                    label: s.label().map(str::to_string),
                    split: Split::Unassigned,
                })
                .collect(),
            max_len: seqs.iter().map(ProteinSequence::len).max(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SeqError> {
        let bad = |msg: String| Err(SeqError::Manifest(msg));
        let mut classes = HashSet::new();
        for c in &self.classes {
            if c.trim().is_empty() {
                return bad("empty class name".into());
            }
            if !classes.insert(c.as_str()) {
                return bad(format!("class {c:?} listed twice"));
            }
        }
        let mut ids = HashSet::new();
        for e in &self.entries {
            validate_id(&e.id)?;
            if !ids.insert(e.id.as_str()) {
                return Err(SeqError::DuplicateId(e.id.clone()));
            }
            if let Some(l) = &e.label {
                if !classes.contains(l.as_str()) {
                    return bad(format!("entry {:?} has label {l:?} not in classes", e.id));
                }
            }
        }
        let assigned = self.entries.iter().filter(|e| e.split != Split::Unassigned).count();
        if assigned != 0 && assigned != self.entries.len() {
            return bad("split assignment is partial: some entries are unassigned".into());
        }
        Ok(())
    }

    pub fn from_json(text: &[u8]) -> Result<Self, SeqError> {
        let m: Self = serde_json::from_slice(text).map_err(|e| SeqError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn entries_in(&self, split: Option<Split>) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| split.is_none_or(|s| e.split == s))
    }
}

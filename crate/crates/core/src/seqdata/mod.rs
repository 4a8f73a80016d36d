//! Protein sequence datasets: parsing, labels, manifests, splits and
//! synthetic data.

mod fasta;
mod labels;
mod manifest;
mod split;
mod synth;

pub use fasta::{parse_fasta, write_fasta};
pub use labels::parse_labels_csv;
pub use manifest::{DatasetManifest, ManifestEntry, Split};
pub use split::{stratified_split, test_count, SplitSpec};
pub use synth::{synth_dataset, SynthConfig};

use std::fmt;

use thiserror::Error;

/// The 20 canonical amino acids in alphabetical one-letter order.
pub const ALPHABET: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

/// Position of `residue` in [`ALPHABET`], or `None` for anything else.
/// Lowercase letters are not accepted here; callers uppercase first.
pub fn residue_rank(residue: u8) -> Option<usize> {
    match residue {
        b'A' => Some(0),
        b'C' => Some(1),
        b'D' => Some(2),
        b'E' => Some(3),
        b'F' => Some(4),
        b'G' => Some(5),
        b'H' => Some(6),
        b'I' => Some(7),
        b'K' => Some(8),
        b'L' => Some(9),
        b'M' => Some(10),
        b'N' => Some(11),
        b'P' => Some(12),
        b'Q' => Some(13),
        b'R' => Some(14),
        b'S' => Some(15),
        b'T' => Some(16),
        b'V' => Some(17),
        b'W' => Some(18),
        b'Y' => Some(19),
        _ => None,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqError {
    #[error("line {line}: sequence data before the first '>' header")]
    DataBeforeHeader { line: usize },
    #[error("line {line}: header has no identifier")]
    EmptyHeader { line: usize },
    #[error("invalid identifier {0:?}: must be nonempty without whitespace or path separators")]
    InvalidId(String),
    #[error("duplicate identifier {0:?}")]
    DuplicateId(String),
    #[error("sequence {id:?}: invalid residue {residue:?} at position {position}")]
    InvalidResidue { id: String, position: usize, residue: char },
    #[error("sequence {0:?} has no residues")]
    EmptySequence(String),
    #[error("line {line}: input is not valid UTF-8")]
    NotUtf8 { line: usize },
    #[error("labels CSV is missing the {0:?} column")]
    MissingColumn(&'static str),
    #[error("labels CSV: duplicate id {0:?}")]
    DuplicateLabel(String),
    #[error("labels CSV: empty label for id {0:?}")]
    EmptyLabel(String),
    #[error("labels CSV: empty id on record {0}")]
    EmptyLabelId(usize),
    #[error("labels CSV: {0}")]
    Csv(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("entry {0:?} has no label")]
    Unlabeled(String),
    #[error("class {class:?} has {size} member(s); stratified splitting needs at least 2")]
    ClassTooSmall { class: String, size: usize },
    #[error("test fraction {fraction} leaves class {class:?} without training items")]
    EmptyTrain { class: String, fraction: f64 },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("dataset has {0} entries; splitting needs at least 2")]
    TooFewEntries(usize),
    #[error("synthetic dataset: {0}")]
    InvalidSynth(String),
    #[error("could not draw {0} distinct class motifs after 100 attempts")]
    MotifCollision(usize),
}

/// A validated protein sequence.
///
/// Residues are uppercase letters from [`ALPHABET`]; the id is safe to use
/// as a file stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinSequence {
    id: String,
    residues: String,
    label: Option<String>,
}

impl ProteinSequence {
    pub fn new(id: impl Into<String>, residues: impl Into<String>) -> Result<Self, SeqError> {
        let id = id.into();
        validate_id(&id)?;
        let residues = residues.into().to_ascii_uppercase();
        if residues.is_empty() {
            return Err(SeqError::EmptySequence(id));
        }
        if let Some((i, c)) = residues
            .char_indices()
            .find(|&(_, c)| !c.is_ascii() || residue_rank(c as u8).is_none())
        {
            return Err(SeqError::InvalidResidue {
                position: residues[..i].chars().count() + 1,
                residue: c,
                id,
            });
        }
        Ok(Self {
            id,
            residues,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &str {
        &self.residues
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.residues.as_bytes()
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn set_label(&mut self, label: Option<String>) {
        self.label = label;
    }
}

impl fmt::Display for ProteinSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.id, self.residues)
    }
}

pub(crate) fn validate_id(id: &str) -> Result<(), SeqError> {
    let bad = id.is_empty()
        || id == "."
        || id == ".."
        || id
            .chars()
            .any(|c| c.is_whitespace() || c == '/' || c == '\\' || c == '\0');
    if bad {
        Err(SeqError::InvalidId(id.to_string()))
    } else {
        Ok(())
    }
}

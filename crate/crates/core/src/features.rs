//! Fixed-length numeric encodings of sequences and images.
//!
//! Feature matrices persist in two forms:
//!
//! * CSV with header `id,label,f0,...,f{N-1}` (empty label when unknown).
//! * A compact binary file, all integers little-endian:
//!
//! ```text
//! magic    "DNCF"
//! version  u16 = 1
//! mode     u8   0 = one-hot, 1 = pixels, 2 = fcgr, 3 = raw
//! params   3 x u32   one-hot: max_len,0,0  pixels: width,height,downsample
//!                    fcgr: resolution,0,0  raw: dim,0,0
//! rows     u32
//! dim      u32
//! classes  u32, then per class: u16 byte length + UTF-8 name
//! per row  u16 byte length + UTF-8 id, u32 class index (0xFFFFFFFF if
//!          unlabeled), dim x f32
//! ```

use std::collections::BTreeSet;
use std::io::{self, Write};

use thiserror::Error;

use crate::binio::{put_string, put_u32, Reader};
use crate::cgr::FcgrGrid;
use crate::raster::{RasterImage, BACKGROUND};
use crate::seqdata::{residue_rank, ProteinSequence, ALPHABET};

const MAGIC: &[u8; 4] = b"DNCF";
const VERSION: u16 = 1;
const NO_LABEL: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sequence {id:?} has {len} residues, more than max_len {max_len}")]
    SequenceTooLong { id: String, len: usize, max_len: usize },
    #[error("downsample factor {factor} does not divide image size {width}x{height}")]
    BadDownsample { factor: usize, width: usize, height: usize },
    #[error("feature schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("row {0:?} contains a non-finite value")]
    NonFinite(String),
    #[error("invalid label: {0}")]
    Label(String),
    #[error("feature file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSchema {
    Ohe {
        max_len: usize,
    },
    Pixels {
        width: usize,
        height: usize,
        downsample: usize,
    },
    Fcgr {
        resolution: usize,
    },
    Raw {
        dim: usize,
    },
}

impl FeatureSchema {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Ohe { max_len } => 20 * max_len,
            Self::Pixels {
                width,
                height,
                downsample,
            } => (width / downsample.max(1)) * (height / downsample.max(1)),
            Self::Fcgr { resolution } => resolution * resolution,
            Self::Raw { dim } => dim,
        }
    }

    pub(crate) fn code(&self) -> (u8, [usize; 3]) {
        match *self {
            Self::Ohe { max_len } => (0, [max_len, 0, 0]),
            Self::Pixels {
                width,
                height,
                downsample,
            } => (1, [width, height, downsample]),
            Self::Fcgr { resolution } => (2, [resolution, 0, 0]),
            Self::Raw { dim } => (3, [dim, 0, 0]),
        }
    }

    pub(crate) fn from_code(mode: u8, p: [usize; 3]) -> Result<Self, String> {
        match mode {
            0 => Ok(Self::Ohe { max_len: p[0] }),
            1 if p[2] > 0 && p[0].is_multiple_of(p[2]) && p[1].is_multiple_of(p[2]) => Ok(Self::Pixels {
                width: p[0],
                height: p[1],
                downsample: p[2],
            }),
            1 => Err("pixel schema with a non-dividing downsample factor".into()),
            2 => Ok(Self::Fcgr { resolution: p[0] }),
            3 => Ok(Self::Raw { dim: p[0] }),
            m => Err(format!("unknown feature mode {m}")),
        }
    }
}

impl std::fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Ohe { max_len } => write!(f, "ohe(max_len={max_len})"),
            Self::Pixels {
                width,
                height,
                downsample,
            } => write!(f, "pixels({width}x{height}/{downsample})"),
            Self::Fcgr { resolution } => write!(f, "fcgr({resolution})"),
            Self::Raw { dim } => write!(f, "raw({dim})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub source_id: String,
    pub schema: FeatureSchema,
}

impl FeatureVector {
    pub fn with_source(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }
}

/// One-hot encoding: residue `i` sets index `20 * i + rank(residue)`;
/// positions past the end of the sequence stay zero.
pub fn ohe_encode(seq: &ProteinSequence, max_len: usize) -> Result<FeatureVector, FeatureError> {
    if seq.len() > max_len {
        return Err(FeatureError::SequenceTooLong {
            id: seq.id().to_string(),
            len: seq.len(),
            max_len,
        });
    }
    let mut values = vec![0.0; 20 * max_len];
    for (i, &r) in seq.as_bytes().iter().enumerate() {
        let rank = residue_rank(r).expect("validated sequence");
        values[20 * i + rank] = 1.0;
    }
    Ok(FeatureVector {
        values,
        source_id: seq.id().to_string(),
        schema: FeatureSchema::Ohe { max_len },
    })
}

/// Inverse of [`ohe_encode`]: reads residues until the first all-zero
/// position. Returns `None` if a position is not a valid one-hot block.
pub fn ohe_decode(values: &[f64]) -> Option<String> {
    let mut out = String::new();
    for block in values.chunks(20) {
        let hot: Vec<usize> = block
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        match hot[..] {
            [] => break,
            [i] if block[i] == 1.0 && block.len() == 20 => out.push(ALPHABET[i] as char),
            _ => return None,
        }
    }
    Some(out)
}

/// Mean ink coverage (ink = 1, background = 0) over `downsample`-sized
/// square blocks, flattened row-major.
pub fn pixels_features(image: &RasterImage, downsample: usize) -> Result<FeatureVector, FeatureError> {
    let (w, h) = (image.width(), image.height());
    if downsample == 0 || w % downsample != 0 || h % downsample != 0 {
        return Err(FeatureError::BadDownsample {
            factor: downsample,
            width: w,
            height: h,
        });
    }
    let (bw, bh) = (w / downsample, h / downsample);
    let mut counts = vec![0u32; bw * bh];
    for (row, line) in image.pixels().chunks(w).enumerate() {
        let base = (row / downsample) * bw;
        for (col, &p) in line.iter().enumerate() {
            if p != BACKGROUND {
                counts[base + col / downsample] += 1;
            }
        }
    }
    let area = (downsample * downsample) as f64;
    Ok(FeatureVector {
        values: counts.into_iter().map(|c| c as f64 / area).collect(),
        source_id: String::new(),
        schema: FeatureSchema::Pixels {
            width: w,
            height: h,
            downsample,
        },
    })
}

/// Grid counts divided by the number of walk points. An empty walk gives
/// all zeros.
pub fn fcgr_features(grid: &FcgrGrid) -> FeatureVector {
    let total = grid.total();
    let values = grid
        .counts()
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    FeatureVector {
        values,
        source_id: String::new(),
        schema: FeatureSchema::Fcgr {
            resolution: grid.resolution(),
        },
    }
}

/// Rows of one schema with aligned class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    schema: FeatureSchema,
    class_names: Vec<String>,
    ids: Vec<String>,
    labels: Vec<Option<usize>>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(schema: FeatureSchema, class_names: Vec<String>) -> Self {
        Self {
            schema,
            class_names,
            ids: Vec::new(),
            labels: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, v: FeatureVector, label: Option<usize>) -> Result<(), FeatureError> {
        if v.schema != self.schema || v.values.len() != self.schema.dim() {
            return Err(FeatureError::SchemaMismatch {
                expected: self.schema.to_string(),
                found: v.schema.to_string(),
            });
        }
        if let Some(l) = label {
            if l >= self.class_names.len() {
                return Err(FeatureError::Label(format!("class index {l} out of range")));
            }
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite(v.source_id));
        }
        self.ids.push(v.source_id);
        self.labels.push(label);
        self.data.extend_from_slice(&v.values);
        Ok(())
    }

    pub fn schema(&self) -> FeatureSchema {
        self.schema
    }

    pub fn dim(&self) -> usize {
        self.schema.dim()
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(|i| self.row(i))
    }

    /// All rows flattened row-major.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn write_csv<W: Write>(&self, sink: &mut W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..self.dim()).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = vec![
                id.clone(),
                self.labels[i].map(|l| self.class_names[l].clone()).unwrap_or_default(),
            ];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()
    }

    /// Reads the CSV form. The schema is `Raw`; classes are the sorted
    /// distinct labels.
    pub fn read_csv(input: &[u8]) -> Result<Self, FeatureError> {
        let fmt = |e: String| FeatureError::Format(e);
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers().map_err(|e| fmt(e.to_string()))?.clone();
        if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
            return Err(fmt("header must start with id,label".into()));
        }
        for (i, h) in header.iter().skip(2).enumerate() {
            if h != format!("f{i}") {
                return Err(fmt(format!("unexpected column {h:?}")));
            }
        }
        let dim = header.len() - 2;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| fmt(e.to_string()))?;
            let values = rec
                .iter()
                .skip(2)
                .map(|v| v.trim().parse::<f64>().map_err(|e| fmt(format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let label = Some(rec[1].trim().to_string()).filter(|l| !l.is_empty());
            rows.push((rec[0].to_string(), label, values));
        }
        let classes: Vec<String> = rows
            .iter()
            .filter_map(|(_, l, _)| l.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut m = Self::new(FeatureSchema::Raw { dim }, classes);
        for (id, label, values) in rows {
            let idx = label.map(|l| m.class_names.iter().position(|c| *c == l).expect("collected above"));
            m.push(
                FeatureVector {
                    values,
                    source_id: id,
                    schema: FeatureSchema::Raw { dim },
                },
                idx,
            )?;
        }
        Ok(m)
    }

    pub fn to_binary(&self) -> Result<Vec<u8>, FeatureError> {
        let fmt = FeatureError::Format;
        let mut out = Vec::with_capacity(32 + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let (mode, params) = self.schema.code();
        out.push(mode);
        for p in params {
            put_u32(&mut out, p).map_err(fmt)?;
        }
        put_u32(&mut out, self.n_rows()).map_err(fmt)?;
        put_u32(&mut out, self.dim()).map_err(fmt)?;
        put_u32(&mut out, self.class_names.len()).map_err(fmt)?;
        for c in &self.class_names {
            put_string(&mut out, c).map_err(fmt)?;
        }
        for i in 0..self.n_rows() {
            put_string(&mut out, &self.ids[i]).map_err(fmt)?;
            let label = self.labels[i].map_or(NO_LABEL, |l| l as u32);
            out.extend_from_slice(&label.to_le_bytes());
            for &v in self.row(i) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_binary(data: &[u8]) -> Result<Self, FeatureError> {
        let fmt = FeatureError::Format;
        let mut r = Reader::new(data);
        if r.take(4).map_err(fmt)? != MAGIC {
            return Err(fmt("bad magic".into()));
        }
        let version = r.u16().map_err(fmt)?;
        if version != VERSION {
            return Err(fmt(format!("unsupported version {version}")));
        }
        let mode = r.u8().map_err(fmt)?;
        let mut params = [0usize; 3];
        for p in &mut params {
            *p = r.u32().map_err(fmt)? as usize;
        }
        let schema = FeatureSchema::from_code(mode, params).map_err(fmt)?;
        let n_rows = r.u32().map_err(fmt)? as usize;
        let dim = r.u32().map_err(fmt)? as usize;
        if dim != schema.dim() {
            return Err(fmt(format!("dim {dim} does not match schema {schema}")));
        }
        let n_classes = r.u32().map_err(fmt)? as usize;
        r.expect_items(n_classes, 2).map_err(fmt)?;
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            classes.push(r.string().map_err(fmt)?);
        }
        r.expect_items(n_rows, 6 + 4 * dim).map_err(fmt)?;
        let mut m = Self::new(schema, classes);
        m.data.reserve(n_rows * dim);
        for _ in 0..n_rows {
            let id = r.string().map_err(fmt)?;
            let label = match r.u32().map_err(fmt)? {
                NO_LABEL => None,
                l => Some(l as usize),
            };
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(f64::from(r.f32().map_err(fmt)?));
            }
            m.push(
                FeatureVector {
                    values,
                    source_id: id,
                    schema,
                },
                label,
            )?;
        }
        r.finish().map_err(fmt)?;
        Ok(m)
    }
}

//! Reference classifiers and the prediction interchange format.
//!
//! Predictions are exchanged as a JSON array of
//! `{"id": str, "true": str|null, "pred": str, "proba": [real]}`. The
//! probability vector is indexed by class in sorted name order unless a
//! class list is supplied explicitly.
//!
//! Trained models persist in a little-endian binary file:
//!
//! ```text
//! magic     "DNCM"
//! version   u16 = 1
//! kind      u8   0 = k-NN, 1 = logistic regression
//! schema    u8 mode + 3 x u32 params (as in feature files)
//! classes   u32, then per class: u16 byte length + UTF-8 name
//! train     f64 training wall time in seconds
//! k-NN      u32 k, u8 metric (0 euclidean, 1 manhattan), u32 rows, u32 dim,
//!           rows x dim f64, rows x u32 class index
//! logreg    f64 learning rate, u32 epochs, u32 batch size, u64 seed, u32 dim,
//!           classes x (dim + 1) f64 weights, bias last in each row
//! ```

mod knn;
mod logreg;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio::{put_string, put_u32, Reader};
use crate::features::{FeatureMatrix, FeatureSchema};

pub use knn::{knn_fit, knn_predict, KnnModel};
pub use logreg::{
    logreg_predict, logreg_train, logreg_train_with_history, nll_and_gradient, LogRegConfig, LogRegModel,
};

const MAGIC: &[u8; 4] = b"DNCM";
const VERSION: u16 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("training row {0:?} has no label")]
    Unlabeled(String),
    #[error("feature schema mismatch: model expects {expected}, got {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("k = {k} must be between 1 and the number of training rows ({n})")]
    InvalidK { k: usize, n: usize },
    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("class {0:?} is not known to the model")]
    UnknownClass(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch} (non-finite loss); try a lower learning rate")]
    Diverged { epoch: usize },
    #[error("predictions: {0}")]
    Predictions(String),
    #[error("model file: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    /// Squared Euclidean or Manhattan distance; both preserve neighbour order.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Self::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub id: String,
    #[serde(rename = "true")]
    pub true_label: Option<String>,
    pub pred: String,
    pub proba: Vec<f64>,
}

/// Predictions with the class order their probability vectors use.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    class_names: Vec<String>,
    items: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(class_names: Vec<String>, items: Vec<Prediction>) -> Result<Self, ClassifyError> {
        let set = Self { class_names, items };
        set.validate()?;
        Ok(set)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn items(&self) -> &[Prediction] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Builds predictions for `rows` from per-row probability vectors over
    /// `class_names`; the predicted class is the argmax. True labels are
    /// carried over by name.
    pub fn from_probas(
        class_names: &[String],
        rows: &FeatureMatrix,
        probas: Vec<Vec<f64>>,
    ) -> Result<Self, ClassifyError> {
        let items = probas
            .into_iter()
            .enumerate()
            .map(|(i, proba)| Prediction {
                id: rows.ids()[i].clone(),
                true_label: rows.labels()[i].map(|l| rows.class_names()[l].clone()),
                pred: class_names[argmax(&proba)].clone(),
                proba,
            })
            .collect();
        Self::new(class_names.to_vec(), items)
    }

    fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: String| Err(ClassifyError::Predictions(m));
        let distinct: BTreeSet<&String> = self.class_names.iter().collect();
        if distinct.len() != self.class_names.len() {
            return bad("duplicate class names".into());
        }
        for p in &self.items {
            if p.proba.len() != self.class_names.len() {
                return bad(format!(
                    "item {:?} has {} probabilities for {} classes",
                    p.id,
                    p.proba.len(),
                    self.class_names.len()
                ));
            }
            if p.proba.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return bad(format!("item {:?} has a negative or non-finite probability", p.id));
            }
            let sum: f64 = p.proba.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("probabilities of item {:?} sum to {sum}", p.id));
            }
            for label in std::iter::once(&p.pred).chain(&p.true_label) {
                if self.class_index(label).is_none() {
                    return bad(format!("item {:?} uses unknown class {label:?}", p.id));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.items).expect("predictions serialize");
        s.push('\n');
        s
    }

    /// Parses the JSON array. Without `classes`, the class order is the
    /// sorted set of names appearing as true or predicted labels.
    pub fn from_json(text: &[u8], classes: Option<Vec<String>>) -> Result<Self, ClassifyError> {
        let items: Vec<Prediction> =
            serde_json::from_slice(text).map_err(|e| ClassifyError::Predictions(e.to_string()))?;
        let class_names = match classes {
            Some(c) => c,
            None => items
                .iter()
                .flat_map(|p| std::iter::once(&p.pred).chain(&p.true_label))
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        Self::new(class_names, items)
    }
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_schema(expected: FeatureSchema, rows: &FeatureMatrix) -> Result<(), ClassifyError> {
    if rows.schema() != expected {
        return Err(ClassifyError::SchemaMismatch {
            expected: expected.to_string(),
            found: rows.schema().to_string(),
        });
    }
    Ok(())
}

/// Class indices of all rows, failing on unlabeled ones.
pub(crate) fn required_labels(train: &FeatureMatrix) -> Result<Vec<usize>, ClassifyError> {
    train
        .labels()
        .iter()
        .zip(train.ids())
        .map(|(l, id)| l.ok_or_else(|| ClassifyError::Unlabeled(id.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    LogReg(LogRegModel),
}

/// A trained model plus its recorded training wall time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub train_time_s: f64,
}

impl Model {
    pub fn schema(&self) -> FeatureSchema {
        match self {
            Self::Knn(m) => m.schema(),
            Self::LogReg(m) => m.schema(),
        }
    }

    pub fn class_names(&self) -> &[String] {
        match self {
            Self::Knn(m) => m.class_names(),
            Self::LogReg(m) => m.class_names(),
        }
    }

    /// Class probabilities for one feature row.
    pub fn predict_proba_row(&self, row: &[f64]) -> Vec<f64> {
        match self {
            Self::Knn(m) => m.predict_proba_row(row),
            Self::LogReg(m) => m.predict_proba_row(row),
        }
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<PredictionSet, ClassifyError> {
        match self {
            Self::Knn(m) => knn_predict(m, rows),
            Self::LogReg(m) => logreg_predict(m, rows),
        }
    }
}

impl ModelFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>, ClassifyError> {
        let err = ClassifyError::Model;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match self.model {
            Model::Knn(_) => 0,
            Model::LogReg(_) => 1,
        });
        let (mode, params) = self.model.schema().code();
        out.push(mode);
        for p in params {
            put_u32(&mut out, p).map_err(err)?;
        }
        put_u32(&mut out, self.model.class_names().len()).map_err(err)?;
        for c in self.model.class_names() {
            put_string(&mut out, c).map_err(err)?;
        }
        out.extend_from_slice(&self.train_time_s.to_le_bytes());
        match &self.model {
            Model::Knn(m) => m.write_body(&mut out).map_err(err)?,
            Model::LogReg(m) => m.write_body(&mut out).map_err(err)?,
        }
        Ok(out)
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ClassifyError> {
        let err = ClassifyError::Model;
        let mut r = Reader::new(data);
        if r.take(4).map_err(err)? != MAGIC {
            return Err(err("bad magic".into()));
        }
        let version = r.u16().map_err(err)?;
        if version != VERSION {
            return Err(err(format!("unsupported version {version}")));
        }
        let kind = r.u8().map_err(err)?;
        let mode = r.u8().map_err(err)?;
        let mut params = [0usize; 3];
        for p in &mut params {
            *p = r.u32().map_err(err)? as usize;
        }
        let schema = FeatureSchema::from_code(mode, params).map_err(err)?;
        let n_classes = r.u32().map_err(err)? as usize;
        r.expect_items(n_classes, 2).map_err(err)?;
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            classes.push(r.string().map_err(err)?);
        }
        if classes.iter().collect::<BTreeSet<_>>().len() != classes.len() {
            return Err(err("duplicate class names".into()));
        }
        let train_time_s = r.f64().map_err(err)?;
        if !(train_time_s.is_finite() && train_time_s >= 0.0) {
            return Err(err("training time must be a nonnegative number".into()));
        }
        let model = match kind {
            0 => Model::Knn(KnnModel::read_body(&mut r, schema, classes).map_err(err)?),
            1 => Model::LogReg(LogRegModel::read_body(&mut r, schema, classes).map_err(err)?),
            k => return Err(err(format!("unknown model kind {k}"))),
        };
        r.finish().map_err(err)?;
        Ok(Self { model, train_time_s })
    }
}

use crate::binio::{put_u32, Reader};
use crate::features::{FeatureMatrix, FeatureSchema};

use super::{check_schema, required_labels, ClassifyError, Metric, PredictionSet};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    metric: Metric,
    schema: FeatureSchema,
    class_names: Vec<String>,
    rows: Vec<f64>,
    labels: Vec<usize>,
}

pub fn knn_fit(train: &FeatureMatrix, k: usize, metric: Metric) -> Result<KnnModel, ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrain);
    }
    if k == 0 || k > train.n_rows() {
        return Err(ClassifyError::InvalidK { k, n: train.n_rows() });
    }
    let labels = required_labels(train)?;
    Ok(KnnModel {
        k,
        metric,
        schema: train.schema(),
        class_names: train.class_names().to_vec(),
        rows: train.data().to_vec(),
        labels,
    })
}

pub fn knn_predict(model: &KnnModel, rows: &FeatureMatrix) -> Result<PredictionSet, ClassifyError> {
    check_schema(model.schema, rows)?;
    let probas = rows.rows().map(|r| model.predict_proba_row(r)).collect();
    PredictionSet::from_probas(&model.class_names, rows, probas)
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn schema(&self) -> FeatureSchema {
        self.schema
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.schema.dim();
        &self.rows[i * d..(i + 1) * d]
    }

    /// Training-row indices of the `k` nearest rows, nearest first; equal
    /// distances are ordered by row index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = (0..self.n_rows())
            .map(|i| (self.metric.distance(query, self.row(i)), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < scored.len() {
            scored.select_nth_unstable_by(self.k - 1, cmp);
            scored.truncate(self.k);
        }
        scored.sort_unstable_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    /// Vote fractions over classes.
    pub fn predict_proba_row(&self, query: &[f64]) -> Vec<f64> {
        let mut votes = vec![0usize; self.class_names.len()];
        for i in self.neighbors(query) {
            votes[self.labels[i]] += 1;
        }
        votes.into_iter().map(|v| v as f64 / self.k as f64).collect()
    }

    pub(super) fn write_body(&self, out: &mut Vec<u8>) -> Result<(), String> {
        put_u32(out, self.k)?;
        out.push(match self.metric {
            Metric::Euclidean => 0,
            Metric::Manhattan => 1,
        });
        put_u32(out, self.n_rows())?;
        put_u32(out, self.schema.dim())?;
        for v in &self.rows {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &l in &self.labels {
            put_u32(out, l)?;
        }
        Ok(())
    }

    pub(super) fn read_body(
        r: &mut Reader<'_>,
        schema: FeatureSchema,
        class_names: Vec<String>,
    ) -> Result<Self, String> {
        let k = r.u32()? as usize;
        let metric = match r.u8()? {
            0 => Metric::Euclidean,
            1 => Metric::Manhattan,
            m => return Err(format!("unknown metric {m}")),
        };
        let n = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if dim != schema.dim() {
            return Err(format!("dim {dim} does not match schema {schema}"));
        }
        if n == 0 || k == 0 || k > n {
            return Err(format!("k = {k} is invalid for {n} training rows"));
        }
        let cells = n.checked_mul(dim).ok_or("row count overflows")?;
        r.expect_items(cells, 8)?;
        let mut rows = Vec::with_capacity(cells);
        for _ in 0..cells {
            let v = r.f64()?;
            if !v.is_finite() {
                return Err("non-finite training value".into());
            }
            rows.push(v);
        }
        r.expect_items(n, 4)?;
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let l = r.u32()? as usize;
            if l >= class_names.len() {
                return Err(format!("class index {l} out of range"));
            }
            labels.push(l);
        }
        Ok(Self {
            k,
            metric,
            schema,
            class_names,
            rows,
            labels,
        })
    }
}

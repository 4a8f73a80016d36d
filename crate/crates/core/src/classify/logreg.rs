use crate::binio::{put_u32, Reader};
use crate::features::{FeatureMatrix, FeatureSchema};
use crate::rng::SplitMix64;

use super::{check_schema, required_labels, ClassifyError, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch batch shuffle.
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            epochs: 10,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl LogRegConfig {
    fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ClassifyError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(ClassifyError::InvalidConfig("batch size must be at least 1".into()));
        }
        if u32::try_from(self.epochs).is_err() || u32::try_from(self.batch_size).is_err() {
            return Err(ClassifyError::InvalidConfig(
                "epochs and batch size must fit in 32 bits".into(),
            ));
        }
        Ok(())
    }
}

/// Multinomial logistic regression. `weights` holds one row of `dim + 1`
/// values per class, bias last.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    config: LogRegConfig,
    schema: FeatureSchema,
    class_names: Vec<String>,
    weights: Vec<f64>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn logits(weights: &[f64], n_classes: usize, x: &[f64]) -> Vec<f64> {
    let stride = x.len() + 1;
    (0..n_classes)
        .map(|c| {
            let w = &weights[c * stride..(c + 1) * stride];
            w[..x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[x.len()]
        })
        .collect()
}

/// Mean negative log-likelihood of `labels` under softmax(W x + b) over the
/// rows in `rows` (flattened, `dim` columns), and its gradient with respect
/// to `weights`.
pub fn nll_and_gradient(
    weights: &[f64],
    n_classes: usize,
    dim: usize,
    rows: &[f64],
    labels: &[usize],
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; weights.len()];
    let loss = accumulate(
        weights,
        n_classes,
        dim,
        rows,
        labels,
        labels.len(),
        0..labels.len(),
        Some(&mut grad),
    );
    (loss, grad)
}

/// Sums loss (and optionally gradient) over `idx` and divides by `n`.
#[allow(clippy::too_many_arguments)]
fn accumulate(
    weights: &[f64],
    n_classes: usize,
    dim: usize,
    rows: &[f64],
    labels: &[usize],
    n: usize,
    idx: impl Iterator<Item = usize>,
    mut grad: Option<&mut Vec<f64>>,
) -> f64 {
    let stride = dim + 1;
    let mut loss = 0.0;
    for i in idx {
        let x = &rows[i * dim..(i + 1) * dim];
        let z = logits(weights, n_classes, x);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[labels[i]];
        if let Some(g) = grad.as_deref_mut() {
            for c in 0..n_classes {
                let p = (z[c] - lse).exp();
                let delta = p - if c == labels[i] { 1.0 } else { 0.0 };
                let row = &mut g[c * stride..(c + 1) * stride];
                for (gw, xv) in row[..dim].iter_mut().zip(x) {
                    *gw += delta * xv;
                }
                row[dim] += delta;
            }
        }
    }
    let scale = 1.0 / n as f64;
    if let Some(g) = grad {
        for v in g.iter_mut() {
            *v *= scale;
        }
    }
    loss * scale
}

pub fn logreg_train(train: &FeatureMatrix, config: &LogRegConfig) -> Result<LogRegModel, ClassifyError> {
    logreg_train_with_history(train, config).map(|(m, _)| m)
}

/// Trains and also returns the mean training NLL after each epoch.
pub fn logreg_train_with_history(
    train: &FeatureMatrix,
    config: &LogRegConfig,
) -> Result<(LogRegModel, Vec<f64>), ClassifyError> {
    config.validate()?;
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrain);
    }
    let n_classes = train.class_names().len();
    if n_classes < 2 {
        return Err(ClassifyError::TooFewClasses(n_classes));
    }
    let labels = required_labels(train)?;
    let dim = train.dim();
    let rows = train.data();
    let n = labels.len();
    let mut weights = vec![0.0; n_classes * (dim + 1)];
    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0; weights.len()];

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = accumulate(
                &weights,
                n_classes,
                dim,
                rows,
                &labels,
                batch.len(),
                batch.iter().copied(),
                Some(&mut grad),
            );
            if !loss.is_finite() {
                return Err(ClassifyError::Diverged { epoch });
            }
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
        let loss = accumulate(&weights, n_classes, dim, rows, &labels, n, 0..n, None);
        if !loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(ClassifyError::Diverged { epoch });
        }
        history.push(loss);
    }

    let model = LogRegModel {
        config: *config,
        schema: train.schema(),
        class_names: train.class_names().to_vec(),
        weights,
    };
    Ok((model, history))
}

pub fn logreg_predict(model: &LogRegModel, rows: &FeatureMatrix) -> Result<PredictionSet, ClassifyError> {
    check_schema(model.schema, rows)?;
    let probas = rows.rows().map(|r| model.predict_proba_row(r)).collect();
    PredictionSet::from_probas(&model.class_names, rows, probas)
}

impl LogRegModel {
    pub fn config(&self) -> &LogRegConfig {
        &self.config
    }

    pub fn schema(&self) -> FeatureSchema {
        self.schema
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> Vec<f64> {
        let mut z = logits(&self.weights, self.class_names.len(), x);
        softmax_in_place(&mut z);
        z
    }

    pub(super) fn write_body(&self, out: &mut Vec<u8>) -> Result<(), String> {
        out.extend_from_slice(&self.config.learning_rate.to_le_bytes());
        put_u32(out, self.config.epochs)?;
        put_u32(out, self.config.batch_size)?;
        out.extend_from_slice(&self.config.seed.to_le_bytes());
        put_u32(out, self.schema.dim())?;
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        Ok(())
    }

    pub(super) fn read_body(
        r: &mut Reader<'_>,
        schema: FeatureSchema,
        class_names: Vec<String>,
    ) -> Result<Self, String> {
        let config = LogRegConfig {
            learning_rate: r.f64()?,
            epochs: r.u32()? as usize,
            batch_size: r.u32()? as usize,
            seed: r.u64()?,
        };
        config.validate().map_err(|e| e.to_string())?;
        let dim = r.u32()? as usize;
        if dim != schema.dim() {
            return Err(format!("dim {dim} does not match schema {schema}"));
        }
        if class_names.len() < 2 {
            return Err("need at least 2 classes".into());
        }
        let count = class_names.len().checked_mul(dim + 1).ok_or("weight count overflows")?;
        r.expect_items(count, 8)?;
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let w = r.f64()?;
            if !w.is_finite() {
                return Err("non-finite weight".into());
            }
            weights.push(w);
        }
        Ok(Self {
            config,
            schema,
            class_names,
            weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn matrix(points: &[(Vec<f64>, usize)], classes: usize) -> FeatureMatrix {
        let dim = points.first().map_or(0, |p| p.0.len());
        let names = (0..classes).map(|c| format!("c{c}")).collect();
        let mut m = FeatureMatrix::new(FeatureSchema::Raw { dim }, names);
        for (i, (x, l)) in points.iter().enumerate() {
            let v = FeatureVector {
                values: x.clone(),
                source_id: format!("p{i}"),
                schema: FeatureSchema::Raw { dim },
            };
            m.push(v, Some(*l)).unwrap();
        }
        m
    }

    fn separable(seed: u64, n: usize) -> FeatureMatrix {
        let mut rng = SplitMix64::new(seed);
        let pts: Vec<(Vec<f64>, usize)> = (0..n)
            .map(|i| {
                let c = i % 2;
                let offset = if c == 0 { -2.0 } else { 2.0 };
                (vec![offset + rng.next_f64() - 0.5, rng.next_f64() * 4.0 - 2.0], c)
            })
            .collect();
        matrix(&pts, 2)
    }

    #[test]
    fn zero_epochs_give_uniform_probabilities() {
        let train = matrix(&[(vec![1.0, 2.0], 0), (vec![3.0, 4.0], 2)], 3);
        let cfg = LogRegConfig {
            epochs: 0,
            ..Default::default()
        };
        let model = logreg_train(&train, &cfg).unwrap();
        assert!(model.weights().iter().all(|&w| w == 0.0));
        let p = logreg_predict(&model, &train).unwrap();
        for item in p.items() {
            assert!(item.proba.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
            assert_eq!(item.pred, "c0");
        }
    }

    #[test]
    fn single_point_is_fit() {
        let train = matrix(&[(vec![1.0, -1.0], 1)], 2);
        let cfg = LogRegConfig {
            learning_rate: 0.5,
            epochs: 100,
            batch_size: 1,
            seed: 0,
        };
        let model = logreg_train(&train, &cfg).unwrap();
        assert!(model.predict_proba_row(&[1.0, -1.0])[1] > 0.99);
    }

    #[test]
    fn separable_set_reaches_full_training_accuracy() {
        let train = separable(5, 60);
        let cfg = LogRegConfig {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 16,
            seed: 1,
        };
        let model = logreg_train(&train, &cfg).unwrap();
        let p = logreg_predict(&model, &train).unwrap();
        assert!(p.items().iter().all(|i| Some(&i.pred) == i.true_label.as_ref()));
    }

    #[test]
    fn full_batch_loss_is_monotone() {
        let train = separable(9, 40);
        let cfg = LogRegConfig {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 40,
            seed: 2,
        };
        let (_, history) = logreg_train_with_history(&train, &cfg).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0]), "{history:?}");
    }

    #[test]
    fn training_is_bit_reproducible() {
        let train = separable(4, 50);
        let cfg = LogRegConfig {
            learning_rate: 0.05,
            epochs: 20,
            batch_size: 7,
            seed: 99,
        };
        let a = logreg_train(&train, &cfg).unwrap();
        let b = logreg_train(&train, &cfg).unwrap();
        let bits = |m: &LogRegModel| m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn divergence_is_reported() {
        let train = matrix(&[(vec![1e200, -1e200], 0), (vec![-1e200, 1e200], 1)], 2);
        let cfg = LogRegConfig {
            learning_rate: 1e10,
            epochs: 3,
            batch_size: 2,
            seed: 0,
        };
        assert!(matches!(
            logreg_train(&train, &cfg),
            Err(ClassifyError::Diverged { .. })
        ));
    }

    #[test]
    fn config_and_data_errors() {
        let train = separable(1, 4);
        let bad = LogRegConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(matches!(
            logreg_train(&train, &bad),
            Err(ClassifyError::InvalidConfig(_))
        ));
        let one_class = matrix(&[(vec![0.0], 0)], 1);
        assert_eq!(
            logreg_train(&one_class, &Default::default()),
            Err(ClassifyError::TooFewClasses(1))
        );
    }
}

//! Evaluation suite computed from a [`PredictionSet`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::PredictionSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("item {0:?} has no true label")]
    MissingTruth(String),
    #[error("ROC AUC needs at least 2 distinct true classes, found {0}")]
    TooFewClasses(usize),
    #[error("training time must be a nonnegative number, got {0}")]
    InvalidTrainTime(f64),
}

/// `(i, j)` counts items of true class `i` predicted as `j`.
pub fn confusion_matrix(preds: &PredictionSet) -> Result<Vec<Vec<u64>>, MetricsError> {
    let (truth, pred) = indices(preds)?;
    let n = preds.class_names().len();
    let mut m = vec![vec![0u64; n]; n];
    for (&t, &p) in truth.iter().zip(&pred) {
        m[t][p] += 1;
    }
    Ok(m)
}

fn indices(preds: &PredictionSet) -> Result<(Vec<usize>, Vec<usize>), MetricsError> {
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut truth = Vec::with_capacity(preds.len());
    let mut pred = Vec::with_capacity(preds.len());
    for item in preds.items() {
        let t = item
            .true_label
            .as_deref()
            .ok_or_else(|| MetricsError::MissingTruth(item.id.clone()))?;
        truth.push(preds.class_index(t).expect("validated prediction set"));
        pred.push(preds.class_index(&item.pred).expect("validated prediction set"));
    }
    Ok((truth, pred))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// One-vs-rest AUC; absent when the class has no positives or no
    /// negatives.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    pub rows: Vec<ClassRow>,
    pub roc_auc_ovr_macro: f64,
    /// Aggregation used for the top-level `roc_auc_ovr`.
    pub roc_auc_average: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub roc_auc_ovr: f64,
    pub train_time_s: f64,
    pub per_class: PerClass,
}

/// Threshold metrics only; AUC fields are filled by [`evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub rows: Vec<ClassRow>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `Σ weight · num / den` over `terms`, divided by `total`; terms with a
/// zero denominator count as 0. Evaluated in exact rational arithmetic and
/// rounded once when the result fits, so e.g. a macro F1 of 11/15 is the
/// double nearest to 11/15. Falls back to floating point otherwise.
fn weighted_mean(terms: &[(u64, u64, u64)], total: u64) -> f64 {
    fn gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    let exact = || -> Option<f64> {
        let (mut num, mut den) = (0u128, 1u128);
        for &(w, n, d) in terms.iter().filter(|t| t.2 != 0) {
            let (tn, td) = (u128::from(w) * u128::from(n), u128::from(d));
            let g = gcd(den, td);
            num = num.checked_mul(td / g)?.checked_add(tn.checked_mul(den / g)?)?;
            den = den.checked_mul(td / g)?;
            let g = gcd(num, den);
            (num, den) = (num / g, den / g);
        }
        den = den.checked_mul(u128::from(total))?;
        let g = gcd(num, den);
        (num, den) = (num / g, den / g);
        // Both operands convert exactly, so the division rounds once.
        const LIMIT: u128 = 1 << 53;
        (num <= LIMIT && den <= LIMIT).then(|| num as f64 / den as f64)
    };
    exact().unwrap_or_else(|| terms.iter().map(|&(w, n, d)| w as f64 * ratio(n, d)).sum::<f64>() / total as f64)
}

pub fn classification_metrics(preds: &PredictionSet) -> Result<ClassificationMetrics, MetricsError> {
    let cm = confusion_matrix(preds)?;
    let n_classes = cm.len();
    let total: u64 = cm.iter().flatten().sum();
    let trace: u64 = (0..n_classes).map(|i| cm[i][i]).sum();

    let mut rows = Vec::with_capacity(n_classes);
    let (mut prec_terms, mut f1_weighted_terms, mut f1_macro_terms) = (vec![], vec![], vec![]);
    for c in 0..n_classes {
        let tp = cm[c][c];
        let support: u64 = cm[c].iter().sum();
        let predicted: u64 = cm.iter().map(|r| r[c]).sum();
        // The harmonic mean of precision and recall, from counts.
        let (f1_num, f1_den) = (2 * tp, support + predicted);
        prec_terms.push((support, tp, predicted));
        f1_weighted_terms.push((support, f1_num, f1_den));
        f1_macro_terms.push((1, f1_num, f1_den));
        rows.push(ClassRow {
            class: preds.class_names()[c].clone(),
            precision: ratio(tp, predicted),
            recall: ratio(tp, support),
            f1: ratio(f1_num, f1_den),
            support,
            auc: None,
        });
    }

    Ok(ClassificationMetrics {
        accuracy: ratio(trace, total),
        precision_weighted: weighted_mean(&prec_terms, total),
        // Support-weighted recall telescopes to trace / total.
        recall_weighted: ratio(trace, total),
        f1_weighted: weighted_mean(&f1_weighted_terms, total),
        f1_macro: weighted_mean(&f1_macro_terms, n_classes as u64),
        rows,
    })
}

/// Midranks (1-based) of `scores`, ties sharing the mean of their ranks.
fn midranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Binary AUC via the Mann-Whitney rank statistic. `None` when either class
/// is empty.
pub fn binary_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Per-class one-vs-rest AUCs, `None` for classes without positives or
/// negatives.
pub fn per_class_auc(preds: &PredictionSet) -> Result<Vec<Option<f64>>, MetricsError> {
    let (truth, _) = indices(preds)?;
    let n_classes = preds.class_names().len();
    let distinct = (0..n_classes).filter(|c| truth.contains(c)).count();
    if distinct < 2 {
        return Err(MetricsError::TooFewClasses(distinct));
    }
    Ok((0..n_classes)
        .map(|c| {
            let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            let scores: Vec<f64> = preds.items().iter().map(|i| i.proba[c]).collect();
            binary_auc(&positive, &scores)
        })
        .collect())
}

/// Support-weighted one-vs-rest AUC.
pub fn roc_auc_ovr(preds: &PredictionSet) -> Result<f64, MetricsError> {
    let aucs = per_class_auc(preds)?;
    Ok(weighted_auc(preds, &aucs))
}

fn weighted_auc(preds: &PredictionSet, aucs: &[Option<f64>]) -> f64 {
    let mut support = vec![0u64; aucs.len()];
    for item in preds.items() {
        if let Some(t) = item.true_label.as_deref().and_then(|t| preds.class_index(t)) {
            support[t] += 1;
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (a, &s) in aucs.iter().zip(&support) {
        if let Some(a) = a {
            num += s as f64 * a;
            den += s as f64;
        }
    }
    num / den
}

/// Full report. AUC needs at least two distinct true classes.
pub fn evaluate(preds: &PredictionSet, train_time_s: f64) -> Result<EvalReport, MetricsError> {
    if !(train_time_s.is_finite() && train_time_s >= 0.0) {
        return Err(MetricsError::InvalidTrainTime(train_time_s));
    }
    let mut m = classification_metrics(preds)?;
    let aucs = per_class_auc(preds)?;
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    let macro_auc = defined.iter().sum::<f64>() / defined.len() as f64;
    let weighted = weighted_auc(preds, &aucs);
    for (row, auc) in m.rows.iter_mut().zip(aucs) {
        row.auc = auc;
    }
    Ok(EvalReport {
        accuracy: m.accuracy,
        precision_weighted: m.precision_weighted,
        recall_weighted: m.recall_weighted,
        f1_weighted: m.f1_weighted,
        f1_macro: m.f1_macro,
        roc_auc_ovr: weighted,
        train_time_s,
        per_class: PerClass {
            rows: m.rows,
            roc_auc_ovr_macro: macro_auc,
            roc_auc_average: "weighted".to_string(),
        },
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(text)
    }
}

/// Results table with one line per named report.
pub fn render_table(reports: &[(&str, &EvalReport)]) -> String {
    let headers = [
        "Model",
        "Acc.",
        "Prec.",
        "Recall",
        "F1 (Weig.)",
        "F1 (Macro)",
        "ROC AUC",
        "Train Time (sec.)",
    ];
    let mut lines: Vec<Vec<String>> = vec![headers.iter().map(|h| h.to_string()).collect()];
    for (name, r) in reports {
        let mut line = vec![name.to_string()];
        line.extend(
            [
                r.accuracy,
                r.precision_weighted,
                r.recall_weighted,
                r.f1_weighted,
                r.f1_macro,
                r.roc_auc_ovr,
            ]
            .iter()
            .map(|v| format!("{v:.3}")),
        );
        line.push(format!("{:.3}", r.train_time_s));
        lines.push(line);
    }
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
            );
        }
    }
    out
}

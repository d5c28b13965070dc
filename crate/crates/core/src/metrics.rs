//! Classification error, rank-based AUC and confusion matrices.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Execution, ROW_CHUNK};
use crate::math::sigmoid;
use crate::model::Scorer;

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Average ranks over tie groups, O(n log n).
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let n_neg = scores.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the positive rank sum; tie groups share rank (first + last) / 2.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let shared = (i + 1 + j + 1) as u128;
        let positives = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        rank_sum_x2 += shared * positives;
        i = j + 1;
    }
    let u_x2 = rank_sum_x2 - u128::from(n_pos) * u128::from(n_pos + 1);
    Ok(u_x2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn error(&self) -> f64 {
        (self.fn_ + self.fp) as f64 / self.total() as f64
    }
}

/// Tallies predictions `proba >= threshold` against labels.
pub fn confusion(probas: &[f64], labels: &[u8], threshold: f64) -> Result<Confusion> {
    if probas.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: probas.len(),
        });
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!(
            "threshold {threshold} must lie in (0, 1)"
        )));
    }
    let mut c = Confusion::default();
    for (&p, &y) in probas.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (false, true) => c.fn_ += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub classification_error: f64,
    pub auc: f64,
    pub confusion: Confusion,
    pub threshold: f64,
}

/// Confusion counts, error and AUC of `probas` at `threshold`.
pub fn confusion_and_error(probas: &[f64], labels: &[u8], threshold: f64) -> Result<EvalReport> {
    let confusion = confusion(probas, labels, threshold)?;
    Ok(EvalReport {
        n: probas.len(),
        classification_error: confusion.error(),
        auc: auc(probas, labels)?,
        confusion,
        threshold,
    })
}

/// Logits of `model` on every row, in row order.
pub fn scores<M: Scorer + Sync>(model: &M, data: &Dataset) -> Vec<f64> {
    map_chunks(Execution::default(), data.n_rows(), ROW_CHUNK, |range| {
        range.map(|i| model.score(data.row(i))).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

pub fn probabilities<M: Scorer + Sync>(model: &M, data: &Dataset) -> Vec<f64> {
    scores(model, data).into_iter().map(sigmoid).collect()
}

pub fn evaluate<M: Scorer + Sync>(model: &M, data: &Dataset, threshold: f64) -> Result<EvalReport> {
    if model.num_features() != data.n_features() {
        return Err(Error::LengthMismatch {
            expected: model.num_features(),
            got: data.n_features(),
        });
    }
    confusion_and_error(&probabilities(model, data), data.labels(), threshold)
}

/// Plain-text performance and confusion tables, one block per model.
pub fn render_tables(rows: &[(String, EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(13);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>20}  {:>8}",
        "Model/Metrics", "Classification error", "AUC"
    );
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>19.1}%  {:>7.1}%",
            name,
            100.0 * r.classification_error,
            100.0 * r.auc
        );
    }
    for (name, r) in rows {
        let c = &r.confusion;
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<21}  {:>18}  {:>22}",
            name, "Predicted: Default", "Predicted: Not default"
        );
        let _ = writeln!(
            out,
            "{:<21}  {:>18}  {:>22}",
            "Actual: Default", c.tp, c.fn_
        );
        let _ = writeln!(
            out,
            "{:<21}  {:>18}  {:>22}",
            "Actual: Not default", c.fp, c.tn
        );
    }
    out
}

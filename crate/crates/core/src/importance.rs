//! Sensitivity-based global feature importance:
//! `λ_j = (100 / C) · sqrt(mean_i (∂ logit(x_i) / ∂x_j)^2)`, with `C`
//! chosen so that the scores sum to 100.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::{sum_vec_chunks, Execution, ROW_CHUNK};
use crate::model::InputGradient;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub features: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature ordinals sorted by descending score.
    pub ordering: Vec<usize>,
}

impl ImportanceReport {
    /// `feature,importance` rows in feature order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,importance\n");
        for (name, s) in self.features.iter().zip(&self.scores) {
            let _ = writeln!(out, "{name},{s}");
        }
        out
    }
}

/// Root-mean-square input gradients over the rows of `data`, normalized to sum 100.
pub fn feature_importance<M: InputGradient>(model: &M, data: &Dataset) -> Result<ImportanceReport> {
    let p = model.num_features();
    if p != data.n_features() {
        return Err(Error::LengthMismatch {
            expected: p,
            got: data.n_features(),
        });
    }
    let sums = sum_vec_chunks(
        Execution::default(),
        data.n_rows(),
        ROW_CHUNK,
        p,
        |range, acc| {
            let mut grad = vec![0.0; p];
            for i in range {
                model.input_gradient(data.row(i), &mut grad);
                for (a, g) in acc.iter_mut().zip(&grad) {
                    *a += g * g;
                }
            }
        },
    );
    let n = data.n_rows() as f64;
    let rms: Vec<f64> = sums.iter().map(|s| (s / n).sqrt()).collect();
    let total: f64 = rms.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::DegenerateImportance);
    }
    let scores: Vec<f64> = rms.iter().map(|r| r / total * 100.0).collect();
    let mut ordering: Vec<usize> = (0..p).collect();
    ordering.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(ImportanceReport {
        features: data.feature_names(),
        scores,
        ordering,
    })
}

/// Smallest prefix of the descending ordering whose scores reach `100 · mass`.
pub fn top_k_cumulative(report: &ImportanceReport, mass: f64) -> Result<Vec<usize>> {
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::Config(format!("mass {mass} must lie in (0, 1]")));
    }
    let target = 100.0 * mass - 1e-9;
    let mut acc = 0.0;
    let mut picked = Vec::new();
    for &j in &report.ordering {
        picked.push(j);
        acc += report.scores[j];
        if acc >= target {
            break;
        }
    }
    Ok(picked)
}

//! Datasets, seeded splitting and train-fitted min-max normalization.

mod csv_table;
pub mod recipe;
pub mod snapshot;

pub use csv_table::{load_csv, RawTable};
pub use recipe::{preprocess, preprocess_gmsc, preprocess_taiwan, Recipe, RecipeSpec};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nam::FeatureMeta;

/// Row-major numeric feature matrix with binary labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
    meta: Vec<FeatureMeta>,
}

impl Dataset {
    /// Validates shape, finiteness and labels. Feature domains default to `[0, 1]`.
    pub fn new(features: Vec<f64>, labels: Vec<u8>, names: Vec<String>) -> Result<Self> {
        let meta = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| FeatureMeta::unit(name, i))
            .collect();
        Self::with_meta(features, labels, meta)
    }

    pub fn with_meta(features: Vec<f64>, labels: Vec<u8>, meta: Vec<FeatureMeta>) -> Result<Self> {
        let p = meta.len();
        if p == 0 {
            return Err(Error::Data("dataset has no feature columns".into()));
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if features.len() != n * p {
            return Err(Error::LengthMismatch {
                expected: n * p,
                got: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value in row {}, column `{}`",
                pos / p,
                meta[pos % p].name
            )));
        }
        if let Some(row) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Data(format!("label in row {row} is not 0/1")));
        }
        let positives = labels.iter().filter(|&&y| y == 1).count();
        if positives == 0 || positives == n {
            return Err(Error::Data("both classes must be present".into()));
        }
        Ok(Self {
            n,
            p,
            features,
            labels,
            meta,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn meta(&self) -> &[FeatureMeta] {
        &self.meta
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.meta.iter().map(|m| m.name.clone()).collect()
    }

    pub fn raw_features(&self) -> &[f64] {
        &self.features
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn base_rate(&self) -> f64 {
        self.positives() as f64 / self.n as f64
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.p);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::with_meta(features, labels, self.meta.clone())
    }
}

/// Seeded shuffle, then the first `round(n * train_fraction)` rows go to train.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(data.n_rows(), train_fraction, seed)?;
    Ok((data.subset(&train_idx)?, data.subset(&test_idx)?))
}

pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Data(format!(
            "split of {n} rows at fraction {train_fraction} leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Per-feature min-max statistics in raw units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Features with zero range on the training set; they map to constant 0.
    pub constant: Vec<bool>,
}

impl Normalization {
    /// Fits on `train`. Features within one group share the group's min and max.
    pub fn fit(train: &Dataset, groups: &[Vec<usize>]) -> Result<Self> {
        let p = train.n_features();
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for row in train.rows() {
            for j in 0..p {
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        for (g, group) in groups.iter().enumerate() {
            if let Some(&bad) = group.iter().find(|&&j| j >= p) {
                return Err(Error::FeatureIndex {
                    index: bad,
                    features: p,
                });
            }
            if groups[..g]
                .iter()
                .any(|other| other.iter().any(|j| group.contains(j)))
            {
                return Err(Error::Config(
                    "a feature belongs to more than one pair-domain group".into(),
                ));
            }
            let lo = group.iter().map(|&j| min[j]).fold(f64::INFINITY, f64::min);
            let hi = group
                .iter()
                .map(|&j| max[j])
                .fold(f64::NEG_INFINITY, f64::max);
            for &j in group {
                min[j] = lo;
                max[j] = hi;
            }
        }
        let constant = (0..p).map(|j| max[j] <= min[j]).collect();
        Ok(Self {
            names: train.feature_names(),
            min,
            max,
            constant,
        })
    }

    pub fn num_features(&self) -> usize {
        self.min.len()
    }

    /// Maps one raw value of feature `j` into `[0, 1]`.
    #[inline]
    pub fn scale(&self, j: usize, raw: f64) -> f64 {
        if self.constant[j] {
            0.0
        } else {
            ((raw - self.min[j]) / (self.max[j] - self.min[j])).clamp(0.0, 1.0)
        }
    }

    /// Inverse map from the normalized domain to raw units.
    pub fn unscale(&self, j: usize, x: f64) -> f64 {
        if self.constant[j] {
            self.min[j]
        } else {
            self.min[j] + x * (self.max[j] - self.min[j])
        }
    }

    pub fn scale_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        crate::model::check_len(self.num_features(), raw.len())?;
        Ok(raw
            .iter()
            .enumerate()
            .map(|(j, &v)| self.scale(j, v))
            .collect())
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        crate::model::check_len(self.num_features(), data.n_features())?;
        if data.feature_names() != self.names {
            return Err(Error::FeatureMismatch {
                expected: self.names.clone(),
                got: data.feature_names(),
            });
        }
        let p = data.n_features();
        let features = data
            .raw_features()
            .iter()
            .enumerate()
            .map(|(k, &v)| self.scale(k % p, v))
            .collect();
        let meta = self
            .names
            .iter()
            .enumerate()
            .map(|(i, name)| FeatureMeta::unit(name.clone(), i))
            .collect();
        Dataset::with_meta(features, data.labels().to_vec(), meta)
    }
}

/// Fits min-max scaling on `train` and applies it to both sets; test values
/// outside the training range are clipped into `[0, 1]`.
pub fn normalize(
    train: &Dataset,
    test: &Dataset,
    groups: &[Vec<usize>],
) -> Result<(Dataset, Dataset, Normalization)> {
    let stats = Normalization::fit(train, groups)?;
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}

//! Dataset-specific preprocessing: column selection, truncation, missing-row
//! removal and the feature groups that must share a normalization range.

use serde::{Deserialize, Serialize};

use super::{Dataset, RawTable};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recipe {
    Taiwan,
    Gmsc,
    Generic,
}

/// A feature column: canonical name plus accepted header spellings.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub aliases: Vec<String>,
}

impl ColumnSpec {
    fn new(name: &str, aliases: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            aliases: std::iter::once(name)
                .chain(aliases.iter().copied())
                .map(String::from)
                .collect(),
        }
    }
}

/// Row count and positive rate a full public file should reproduce.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedCounts {
    pub rows: usize,
    pub positive_fraction: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecipeSpec {
    pub recipe: Recipe,
    pub label_aliases: Vec<String>,
    /// Explicit feature list; `None` keeps every column except the label and `drop`.
    pub features: Option<Vec<ColumnSpec>>,
    pub drop: Vec<String>,
    /// `(column, max)`: values above `max` are truncated to it.
    pub clip_max: Vec<(String, f64)>,
    pub pair_groups: Vec<Vec<String>>,
    pub expected: Option<ExpectedCounts>,
    /// Header cell identifying the real header row in multi-row headers.
    pub header_hint: Option<String>,
}

const TAIWAN_PAY: [&str; 6] = ["PAY_0", "PAY_2", "PAY_3", "PAY_4", "PAY_5", "PAY_6"];
const GMSC_PAST_DUE: [&str; 3] = [
    "NumberOfTime30-59DaysPastDueNotWorse",
    "NumberOfTimes90DaysLate",
    "NumberOfTime60-89DaysPastDueNotWorse",
];

impl RecipeSpec {
    /// UCI default-of-credit-card-clients: keeps the credit limit, the six
    /// repayment statuses, six bill amounts and six payment amounts (19
    /// features); gender, education, marital status and age are dropped.
    pub fn taiwan() -> Self {
        let mut features = vec![ColumnSpec::new("LIMIT_BAL", &["X1"])];
        for (k, name) in TAIWAN_PAY.iter().enumerate() {
            let alias_x = format!("X{}", 6 + k);
            let mut aliases = vec![alias_x.as_str()];
            if k == 0 {
                aliases.push("PAY_1");
            }
            features.push(ColumnSpec::new(name, &aliases));
        }
        for k in 1..=6 {
            features.push(ColumnSpec::new(
                &format!("BILL_AMT{k}"),
                &[format!("X{}", 11 + k).as_str()],
            ));
        }
        for k in 1..=6 {
            features.push(ColumnSpec::new(
                &format!("PAY_AMT{k}"),
                &[format!("X{}", 17 + k).as_str()],
            ));
        }
        Self {
            recipe: Recipe::Taiwan,
            label_aliases: vec![
                "default payment next month".into(),
                "default.payment.next.month".into(),
                "default_payment_next_month".into(),
                "Y".into(),
            ],
            features: Some(features),
            drop: vec![],
            clip_max: vec![],
            pair_groups: vec![],
            expected: Some(ExpectedCounts {
                rows: 30_000,
                positive_fraction: 0.2212,
                tolerance: 1e-4,
            }),
            header_hint: Some("LIMIT_BAL".into()),
        }
    }

    /// Kaggle "Give Me Some Credit" training file: rows with missing values
    /// removed, past-due counters truncated at 8, age dropped (9 features).
    /// The three past-due counters share one normalization range.
    pub fn gmsc() -> Self {
        let names = [
            "RevolvingUtilizationOfUnsecuredLines",
            "NumberOfTime30-59DaysPastDueNotWorse",
            "DebtRatio",
            "MonthlyIncome",
            "NumberOfOpenCreditLinesAndLoans",
            "NumberOfTimes90DaysLate",
            "NumberRealEstateLoansOrLines",
            "NumberOfTime60-89DaysPastDueNotWorse",
            "NumberOfDependents",
        ];
        Self {
            recipe: Recipe::Gmsc,
            label_aliases: vec!["SeriousDlqin2yrs".into()],
            features: Some(names.iter().map(|n| ColumnSpec::new(n, &[])).collect()),
            drop: vec![],
            clip_max: GMSC_PAST_DUE.iter().map(|n| (n.to_string(), 8.0)).collect(),
            pair_groups: vec![GMSC_PAST_DUE.iter().map(|n| n.to_string()).collect()],
            expected: Some(ExpectedCounts {
                rows: 120_269,
                positive_fraction: 0.0695,
                tolerance: 1e-4,
            }),
            header_hint: Some("SeriousDlqin2yrs".into()),
        }
    }

    pub fn generic(label: impl Into<String>, drop: Vec<String>) -> Self {
        Self {
            recipe: Recipe::Generic,
            label_aliases: vec![label.into()],
            features: None,
            drop,
            clip_max: vec![],
            pair_groups: vec![],
            expected: None,
            header_hint: None,
        }
    }

    pub fn for_recipe(recipe: Recipe, label: Option<&str>) -> Result<Self> {
        match recipe {
            Recipe::Taiwan => Ok(Self::taiwan()),
            Recipe::Gmsc => Ok(Self::gmsc()),
            Recipe::Generic => label
                .map(|l| Self::generic(l, vec![]))
                .ok_or_else(|| Error::Config("the generic recipe needs a label column".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub rows: usize,
    pub positives: usize,
}

impl PreprocessSummary {
    pub fn positive_fraction(&self) -> f64 {
        self.positives as f64 / self.rows as f64
    }

    /// Compares against the counts a full public file should give.
    pub fn verify(&self, expected: &ExpectedCounts) -> Result<()> {
        let frac = self.positive_fraction();
        if self.rows != expected.rows
            || (frac - expected.positive_fraction).abs() > expected.tolerance + 1e-12
        {
            return Err(Error::Data(format!(
                "expected {} rows with positive fraction {:.4}, found {} rows with {} positives ({:.4})",
                expected.rows, expected.positive_fraction, self.rows, self.positives, frac
            )));
        }
        Ok(())
    }
}

/// Output of a recipe: raw-unit dataset, normalization groups, and counts.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub pair_groups: Vec<Vec<usize>>,
    pub summary: PreprocessSummary,
}

pub fn preprocess(raw: &RawTable, spec: &RecipeSpec) -> Result<Prepared> {
    let aliases: Vec<&str> = spec.label_aliases.iter().map(String::as_str).collect();
    let label_col = raw.find_column(&aliases).ok_or_else(|| Error::Schema {
        missing: vec![spec.label_aliases[0].clone()],
        available: raw.header.clone(),
    })?;

    let (names, cols): (Vec<String>, Vec<usize>) = match &spec.features {
        Some(features) => {
            let mut missing = Vec::new();
            let mut picked = Vec::new();
            for f in features {
                let a: Vec<&str> = f.aliases.iter().map(String::as_str).collect();
                match raw.find_column(&a) {
                    Some(c) => picked.push((f.name.clone(), c)),
                    None => missing.push(f.name.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(Error::Schema {
                    missing,
                    available: raw.header.clone(),
                });
            }
            picked.into_iter().unzip()
        }
        None => {
            let missing: Vec<String> = spec
                .drop
                .iter()
                .filter(|d| raw.column_index(d).is_none())
                .cloned()
                .collect();
            if !missing.is_empty() {
                return Err(Error::Schema {
                    missing,
                    available: raw.header.clone(),
                });
            }
            raw.header
                .iter()
                .enumerate()
                .filter(|&(c, h)| c != label_col && !spec.drop.contains(h))
                .map(|(c, h)| (h.clone(), c))
                .unzip()
        }
    };

    let mut clip = vec![f64::INFINITY; names.len()];
    for (col, max) in &spec.clip_max {
        let j = names
            .iter()
            .position(|n| n == col)
            .ok_or_else(|| Error::Schema {
                missing: vec![col.clone()],
                available: names.clone(),
            })?;
        clip[j] = *max;
    }

    let mut features = Vec::with_capacity(raw.n_rows() * names.len());
    let mut labels = Vec::with_capacity(raw.n_rows());
    let mut dropped = 0;
    for (r, row) in raw.rows.iter().enumerate() {
        let label = row[label_col];
        let values: Option<Vec<f64>> = cols.iter().map(|&c| row[c]).collect();
        let (Some(label), Some(values)) = (label, values) else {
            dropped += 1;
            continue;
        };
        let label = if label == 0.0 {
            0u8
        } else if label == 1.0 {
            1u8
        } else {
            return Err(Error::Data(format!("row {r}: label {label} is not 0/1")));
        };
        features.extend(values.iter().zip(&clip).map(|(&v, &m)| v.min(m)));
        labels.push(label);
    }

    let pair_groups = spec
        .pair_groups
        .iter()
        .map(|group| {
            group
                .iter()
                .map(|name| {
                    names
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| Error::Schema {
                            missing: vec![name.clone()],
                            available: names.clone(),
                        })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let dataset = Dataset::new(features, labels, names)?;
    let summary = PreprocessSummary {
        rows_read: raw.n_rows(),
        rows_dropped: dropped,
        rows: dataset.n_rows(),
        positives: dataset.positives(),
    };
    Ok(Prepared {
        dataset,
        pair_groups,
        summary,
    })
}

pub fn preprocess_taiwan(raw: &RawTable) -> Result<Prepared> {
    preprocess(raw, &RecipeSpec::taiwan())
}

pub fn preprocess_gmsc(raw: &RawTable) -> Result<Prepared> {
    preprocess(raw, &RecipeSpec::gmsc())
}

/// Loads `path` with the header handling `spec` needs and preprocesses it.
pub fn load_and_preprocess(
    path: impl AsRef<std::path::Path>,
    spec: &RecipeSpec,
) -> Result<Prepared> {
    let raw = super::csv_table::load_csv_with_hint(path, None, spec.header_hint.as_deref())?;
    preprocess(&raw, spec)
}

//! Experiment configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! out = "runs/taiwan-mnam"
//!
//! [data]
//! recipe = "taiwan"            # taiwan | gmsc | generic
//! path = "data/default_of_credit_card_clients.csv"
//! train_fraction = 0.75
//!
//! [model]
//! kind = "mnam"                # lr | fcnn | nam | mnam
//!
//! [constraints]
//! individual = ["PAY_0", "PAY_2"]
//! pairwise = [["PAY_0", "PAY_2"]]
//!
//! [train]
//! epochs = 200
//! optimizer = { kind = "adam" }
//!
//! [eval]
//! threshold = 0.5
//! ```
//!
//! Paths are relative to the working directory. When `$MNAM_DATA_DIR` is set,
//! a relative data path is looked up by file name inside that directory.
//! The top-level `seed` drives both the split and training.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::recipe::RecipeSpec;
use crate::data::Recipe;
use crate::error::{Error, Result};
use crate::monotonicity::ConstraintSet;
use crate::training::TrainConfig;

pub const DATA_DIR_ENV: &str = "MNAM_DATA_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Fcnn,
    Nam,
    Mnam,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Fcnn => "FCNN",
            ModelKind::Nam => "NAM",
            ModelKind::Mnam => "MNAM",
        }
    }

    pub fn is_additive(self) -> bool {
        matches!(self, ModelKind::Nam | ModelKind::Mnam)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub recipe: Recipe,
    pub path: PathBuf,
    /// Required by the generic recipe; ignored otherwise.
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Extra columns to drop (generic recipe).
    #[serde(default)]
    pub drop: Vec<String>,
    /// Extra truncation rules, column name to maximum.
    #[serde(default)]
    pub clip: BTreeMap<String, f64>,
    /// Extra feature groups sharing one normalization range.
    #[serde(default)]
    pub pair_groups: Vec<Vec<String>>,
    /// Treat a mismatch with the public file's row and positive counts as an error.
    #[serde(default)]
    pub strict_counts: bool,
}

fn default_train_fraction() -> f64 {
    0.75
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
}

/// Constraints by feature name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NamedConstraints {
    pub individual: Vec<String>,
    pub pairwise: Vec<(String, String)>,
    /// Pair members must also be individually constrained (default true).
    pub require_individual_for_pairs: bool,
}

impl Default for NamedConstraints {
    fn default() -> Self {
        Self {
            individual: Vec::new(),
            pairwise: Vec::new(),
            require_individual_for_pairs: true,
        }
    }
}

impl NamedConstraints {
    pub fn is_empty(&self) -> bool {
        self.individual.is_empty() && self.pairwise.is_empty()
    }

    pub fn resolve(&self, features: &[String]) -> Result<ConstraintSet> {
        ConstraintSet::from_names(
            &self.individual,
            &self.pairwise,
            features,
            self.require_individual_for_pairs,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.5
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub data: DataSection,
    pub model: ModelSection,
    #[serde(default)]
    pub constraints: NamedConstraints,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.train.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let f = self.data.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction {f} must lie in (0, 1)"
            )));
        }
        let t = self.eval.threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("threshold {t} must lie in (0, 1)")));
        }
        match self.model.kind {
            ModelKind::Mnam if self.constraints.is_empty() => Err(Error::Config(
                "model kind mnam requires a nonempty constraint set".into(),
            )),
            ModelKind::Lr | ModelKind::Fcnn if !self.constraints.is_empty() => {
                Err(Error::Config(format!(
                    "constraints are only meaningful for nam/mnam, not {:?}",
                    self.model.kind
                )))
            }
            _ => Ok(()),
        }
    }

    /// Recipe with the config's extra drop, clip and group rules applied.
    pub fn recipe_spec(&self) -> Result<RecipeSpec> {
        let mut spec = RecipeSpec::for_recipe(self.data.recipe, self.data.label_column.as_deref())?;
        spec.drop.extend(self.data.drop.iter().cloned());
        spec.clip_max
            .extend(self.data.clip.iter().map(|(k, v)| (k.clone(), *v)));
        spec.pair_groups
            .extend(self.data.pair_groups.iter().cloned());
        Ok(spec)
    }

    /// Data file location, redirected into `$MNAM_DATA_DIR` when that is set
    /// and the configured path is relative.
    pub fn data_path(&self) -> PathBuf {
        let path = &self.data.path;
        match (std::env::var_os(DATA_DIR_ENV), path.file_name()) {
            (Some(dir), Some(name)) if path.is_relative() => Path::new(&dir).join(name),
            _ => path.clone(),
        }
    }
}

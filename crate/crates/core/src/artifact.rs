//! Self-describing model files: parameters, feature names, the normalization
//! fitted on the training split and, for additive models, the declared
//! constraints. Floats are written in shortest round-trip form, so a saved
//! model scores bit-identically after loading.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{FcnnModel, LrModel};
use crate::config::{ModelKind, NamedConstraints};
use crate::data::Normalization;
use crate::error::{Error, Result};
use crate::model::{InputGradient, Scorer};
use crate::nam::NamModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelParams {
    Lr(LrModel),
    Fcnn(FcnnModel),
    Nam(NamModel),
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Lr(m) => m.validate(),
            ModelParams::Fcnn(m) => m.validate(),
            ModelParams::Nam(m) => m.validate(),
        }
    }

    pub fn as_nam(&self) -> Option<&NamModel> {
        match self {
            ModelParams::Nam(m) => Some(m),
            _ => None,
        }
    }
}

impl Scorer for ModelParams {
    fn num_features(&self) -> usize {
        match self {
            ModelParams::Lr(m) => m.num_features(),
            ModelParams::Fcnn(m) => m.num_features(),
            ModelParams::Nam(m) => m.num_features(),
        }
    }

    fn score(&self, x: &[f64]) -> f64 {
        match self {
            ModelParams::Lr(m) => m.score(x),
            ModelParams::Fcnn(m) => m.score(x),
            ModelParams::Nam(m) => m.score(x),
        }
    }
}

impl InputGradient for ModelParams {
    fn input_gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ModelParams::Lr(m) => m.input_gradient(x, out),
            ModelParams::Fcnn(m) => m.input_gradient(x, out),
            ModelParams::Nam(m) => m.input_gradient(x, out),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub kind: ModelKind,
    pub features: Vec<String>,
    pub normalization: Normalization,
    #[serde(default)]
    pub constraints: NamedConstraints,
    /// Content hash of the normalized training set.
    pub train_hash: String,
    pub params: ModelParams,
}

impl ModelArtifact {
    pub fn new(
        kind: ModelKind,
        normalization: Normalization,
        constraints: NamedConstraints,
        train_hash: String,
        params: ModelParams,
    ) -> Result<Self> {
        let artifact = Self {
            format_version: FORMAT_VERSION,
            kind,
            features: normalization.names.clone(),
            normalization,
            constraints,
            train_hash,
            params,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.params.validate()?;
        let family_matches = matches!(
            (self.kind, &self.params),
            (ModelKind::Lr, ModelParams::Lr(_))
                | (ModelKind::Fcnn, ModelParams::Fcnn(_))
                | (ModelKind::Nam | ModelKind::Mnam, ModelParams::Nam(_))
        );
        if !family_matches {
            return Err(Error::Config(format!(
                "model kind {:?} does not match its parameters",
                self.kind
            )));
        }
        crate::model::check_len(self.features.len(), self.params.num_features())?;
        if self.normalization.names != self.features {
            return Err(Error::FeatureMismatch {
                expected: self.features.clone(),
                got: self.normalization.names.clone(),
            });
        }
        if let ModelParams::Nam(m) = &self.params {
            if m.feature_names() != self.features {
                return Err(Error::FeatureMismatch {
                    expected: self.features.clone(),
                    got: m.feature_names(),
                });
            }
        }
        if !self.constraints.is_empty() {
            self.constraints.resolve(&self.features)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: Self = serde_json::from_str(text)?;
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Artifact {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| Error::Artifact {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

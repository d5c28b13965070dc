//! Neural additive model: `logit(x) = β + Σ_i f_i(x_i)`, one [`SubNet`] per feature.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::SubNet;
use crate::model::{check_len, InputGradient, Scorer, Trainable};

/// A feature's name, position and the domain its shape function is
/// checked over (normalized units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub index: usize,
    pub domain_lo: f64,
    pub domain_hi: f64,
}

impl FeatureMeta {
    pub fn unit(name: impl Into<String>, index: usize) -> Self {
        Self {
            name: name.into(),
            index,
            domain_lo: 0.0,
            domain_hi: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.domain_lo.is_finite()
            && self.domain_hi.is_finite()
            && self.domain_lo < self.domain_hi)
        {
            return Err(Error::Config(format!(
                "feature `{}` has an empty domain [{}, {}]",
                self.name, self.domain_lo, self.domain_hi
            )));
        }
        Ok(())
    }
}

/// `n` equispaced points over `[lo, hi]`, both endpoints included.
pub fn equispaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|j| if j == n - 1 { hi } else { lo + step * j as f64 })
        .collect()
}

/// Point `j` of [`equispaced`] without materializing the grid.
#[inline]
pub(crate) fn grid_point(lo: f64, hi: f64, n: usize, j: usize) -> f64 {
    if j == n - 1 {
        hi
    } else {
        lo + (hi - lo) / (n - 1) as f64 * j as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamModel {
    pub intercept: f64,
    pub subnets: Vec<SubNet>,
    pub features: Vec<FeatureMeta>,
}

impl NamModel {
    pub fn new(intercept: f64, subnets: Vec<SubNet>, features: Vec<FeatureMeta>) -> Result<Self> {
        let model = Self {
            intercept,
            subnets,
            features,
        };
        model.validate()?;
        Ok(model)
    }

    /// Every subnet zero; the model predicts `sigmoid(intercept)` everywhere.
    pub fn zeros(features: Vec<FeatureMeta>, hidden: usize, intercept: f64) -> Self {
        let subnets = features.iter().map(|_| SubNet::zeros(hidden)).collect();
        Self {
            intercept,
            subnets,
            features,
        }
    }

    pub fn random<R: Rng + ?Sized>(
        features: Vec<FeatureMeta>,
        hidden: usize,
        scale: f64,
        intercept: f64,
        rng: &mut R,
    ) -> Self {
        let subnets = features
            .iter()
            .map(|_| SubNet::random(hidden, scale, rng))
            .collect();
        Self {
            intercept,
            subnets,
            features,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subnets.is_empty() {
            return Err(Error::Config("a NAM needs at least one feature".into()));
        }
        check_len(self.subnets.len(), self.features.len())?;
        if !self.intercept.is_finite() {
            return Err(Error::Config("non-finite intercept".into()));
        }
        let h = self.subnets[0].hidden_units();
        for net in &self.subnets {
            net.validate()?;
            if net.hidden_units() != h {
                return Err(Error::Config(
                    "all subnets must share the hidden-unit count".into(),
                ));
            }
        }
        for meta in &self.features {
            meta.validate()?;
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.subnets.len()
    }

    pub fn hidden_units(&self) -> usize {
        self.subnets[0].hidden_units()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Parameters per subnet in the flat layout.
    pub fn subnet_stride(&self) -> usize {
        self.subnets[0].num_params()
    }

    /// Offset of subnet `i` in the flat model layout `[β, subnet_0, subnet_1, ...]`.
    pub fn subnet_offset(&self, i: usize) -> usize {
        1 + i * self.subnet_stride()
    }

    pub fn check_feature(&self, feature: usize) -> Result<()> {
        if feature < self.num_features() {
            Ok(())
        } else {
            Err(Error::FeatureIndex {
                index: feature,
                features: self.num_features(),
            })
        }
    }

    /// Shape function `f_i` on an equispaced grid over its domain. Intercept
    /// not included.
    pub fn shape_eval(&self, feature: usize, grid_size: usize) -> Result<Vec<(f64, f64)>> {
        self.check_feature(feature)?;
        if grid_size < 2 {
            return Err(Error::Config("grid_size must be at least 2".into()));
        }
        let meta = &self.features[feature];
        let net = &self.subnets[feature];
        Ok(equispaced(meta.domain_lo, meta.domain_hi, grid_size)
            .into_iter()
            .map(|x| (x, net.forward(x)))
            .collect())
    }
}

impl Scorer for NamModel {
    fn num_features(&self) -> usize {
        self.subnets.len()
    }

    fn score(&self, x: &[f64]) -> f64 {
        let mut logit = self.intercept;
        for (net, &xi) in self.subnets.iter().zip(x) {
            logit += net.forward(xi);
        }
        logit
    }
}

impl Trainable for NamModel {
    fn num_params(&self) -> usize {
        1 + self.subnets.len() * self.subnet_stride()
    }

    fn write_params(&self, out: &mut [f64]) {
        out[0] = self.intercept;
        let stride = self.subnet_stride();
        for (i, net) in self.subnets.iter().enumerate() {
            let off = 1 + i * stride;
            net.write_params(&mut out[off..off + stride]);
        }
    }

    fn read_params(&mut self, params: &[f64]) {
        self.intercept = params[0];
        let stride = self.subnet_stride();
        for (i, net) in self.subnets.iter_mut().enumerate() {
            let off = 1 + i * stride;
            net.read_params(&params[off..off + stride]);
        }
    }

    fn accumulate_logit_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let stride = self.subnet_stride();
        out[0] += scale;
        let mut logit = self.intercept;
        for (i, (net, &xi)) in self.subnets.iter().zip(x).enumerate() {
            let off = 1 + i * stride;
            logit += net.accumulate_param_grads(xi, scale, &mut out[off..off + stride]);
        }
        logit
    }
}

impl InputGradient for NamModel {
    fn input_gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, net), &xi) in out.iter_mut().zip(&self.subnets).zip(x) {
            *o = net.input_grad(xi);
        }
    }
}

//! Baselines trained through the same descent loop as the NAM: logistic
//! regression without interactions and a one-hidden-layer fully connected
//! network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::model::{check_len, InputGradient, Scorer, Trainable};
use crate::optim::{fit, NoExtra};
use crate::training::{base_rate_logit, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LrModel {
    pub fn zeros(p: usize) -> Self {
        Self {
            coefficients: vec![0.0; p],
            intercept: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(Error::Config(
                "logistic regression needs at least one feature".into(),
            ));
        }
        if !self
            .coefficients
            .iter()
            .chain([&self.intercept])
            .all(|v| v.is_finite())
        {
            return Err(Error::Config(
                "non-finite logistic regression parameters".into(),
            ));
        }
        Ok(())
    }
}

impl Scorer for LrModel {
    fn num_features(&self) -> usize {
        self.coefficients.len()
    }

    fn score(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }
}

impl Trainable for LrModel {
    fn num_params(&self) -> usize {
        self.coefficients.len() + 1
    }

    fn write_params(&self, out: &mut [f64]) {
        let p = self.coefficients.len();
        out[..p].copy_from_slice(&self.coefficients);
        out[p] = self.intercept;
    }

    fn read_params(&mut self, params: &[f64]) {
        let p = self.coefficients.len();
        self.coefficients.copy_from_slice(&params[..p]);
        self.intercept = params[p];
    }

    fn accumulate_logit_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let p = self.coefficients.len();
        for j in 0..p {
            out[j] += scale * x[j];
        }
        out[p] += scale;
        self.score(x)
    }
}

impl InputGradient for LrModel {
    fn input_gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coefficients);
    }
}

/// Fully connected network `b2 + Σ_k w2_k σ(W_k · x + b1_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcnnModel {
    /// Row-major `H × p`.
    pub input_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub inputs: usize,
}

impl FcnnModel {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            input_weights: vec![0.0; hidden * inputs],
            hidden_biases: vec![0.0; hidden],
            output_weights: vec![0.0; hidden],
            output_bias: 0.0,
            inputs,
        }
    }

    pub fn random<R: Rng + ?Sized>(inputs: usize, hidden: usize, scale: f64, rng: &mut R) -> Self {
        let mut model = Self::zeros(inputs, hidden);
        let mut draw = || {
            if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            }
        };
        for w in model.input_weights.iter_mut() {
            *w = draw();
        }
        for k in 0..hidden {
            model.hidden_biases[k] = draw();
            model.output_weights[k] = draw();
        }
        model
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_biases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_units();
        if h == 0 || self.inputs == 0 {
            return Err(Error::Config(
                "FCNN needs at least one input and one hidden unit".into(),
            ));
        }
        check_len(h * self.inputs, self.input_weights.len())?;
        check_len(h, self.output_weights.len())?;
        let finite = self
            .input_weights
            .iter()
            .chain(&self.hidden_biases)
            .chain(&self.output_weights)
            .chain([&self.output_bias])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("non-finite FCNN parameters".into()));
        }
        Ok(())
    }

    #[inline]
    fn pre_activation(&self, k: usize, x: &[f64]) -> f64 {
        let row = &self.input_weights[k * self.inputs..(k + 1) * self.inputs];
        self.hidden_biases[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

impl Scorer for FcnnModel {
    fn num_features(&self) -> usize {
        self.inputs
    }

    fn score(&self, x: &[f64]) -> f64 {
        let mut out = self.output_bias;
        for k in 0..self.hidden_units() {
            out += self.output_weights[k] * sigmoid(self.pre_activation(k, x));
        }
        out
    }
}

impl Trainable for FcnnModel {
    fn num_params(&self) -> usize {
        let h = self.hidden_units();
        h * self.inputs + 2 * h + 1
    }

    fn write_params(&self, out: &mut [f64]) {
        let (h, w) = (self.hidden_units(), self.input_weights.len());
        out[..w].copy_from_slice(&self.input_weights);
        out[w..w + h].copy_from_slice(&self.hidden_biases);
        out[w + h..w + 2 * h].copy_from_slice(&self.output_weights);
        out[w + 2 * h] = self.output_bias;
    }

    fn read_params(&mut self, params: &[f64]) {
        let (h, w) = (self.hidden_units(), self.input_weights.len());
        self.input_weights.copy_from_slice(&params[..w]);
        self.hidden_biases.copy_from_slice(&params[w..w + h]);
        self.output_weights
            .copy_from_slice(&params[w + h..w + 2 * h]);
        self.output_bias = params[w + 2 * h];
    }

    fn accumulate_logit_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) -> f64 {
        let (h, p) = (self.hidden_units(), self.inputs);
        let w = h * p;
        let mut logit = self.output_bias;
        for k in 0..h {
            let s = sigmoid(self.pre_activation(k, x));
            let w2 = self.output_weights[k];
            logit += w2 * s;
            let back = scale * w2 * s * (1.0 - s);
            for (o, v) in out[k * p..(k + 1) * p].iter_mut().zip(x) {
                *o += back * v;
            }
            out[w + k] += back;
            out[w + h + k] += scale * s;
        }
        out[w + 2 * h] += scale;
        logit
    }
}

impl InputGradient for FcnnModel {
    fn input_gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..self.hidden_units() {
            let s = sigmoid(self.pre_activation(k, x));
            let c = self.output_weights[k] * s * (1.0 - s);
            let row = &self.input_weights[k * self.inputs..(k + 1) * self.inputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += c * w;
            }
        }
    }
}

/// Logistic regression by mini-batch descent from zero coefficients and a
/// base-rate intercept.
pub fn lr_train(data: &Dataset, cfg: &TrainConfig) -> Result<LrModel> {
    cfg.validate()?;
    let mut model = LrModel::zeros(data.n_features());
    model.intercept = base_rate_logit(data);
    fit(&mut model, data, &cfg.fit_options(), &mut NoExtra)?;
    Ok(model)
}

pub fn lr_predict(model: &LrModel, x: &[f64]) -> Result<f64> {
    model.proba(x)
}

/// FCNN with `cfg.hidden_units` logistic hidden units, seeded uniform init.
pub fn fcnn_train(data: &Dataset, cfg: &TrainConfig) -> Result<FcnnModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = FcnnModel::random(
        data.n_features(),
        cfg.hidden_units,
        cfg.weight_init_scale,
        &mut rng,
    );
    model.output_bias = base_rate_logit(data);
    fit(&mut model, data, &cfg.fit_options(), &mut NoExtra)?;
    Ok(model)
}

pub fn fcnn_predict(model: &FcnnModel, x: &[f64]) -> Result<f64> {
    model.proba(x)
}

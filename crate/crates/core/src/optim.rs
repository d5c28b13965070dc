//! Mini-batch gradient descent over any [`Trainable`] model with a binary
//! cross-entropy data term and an optional extra objective term.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::{sum_chunks, sum_vec_chunks, Execution, ROW_CHUNK};
use crate::math::sigmoid;
use crate::model::Trainable;

pub const PROBA_CLIP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_adam_eps() -> f64 {
    1e-8
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_adam_eps(),
        }
    }
}

/// Per-parameter optimizer state for one training run.
pub(crate) struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    pub(crate) fn new(kind: Optimizer, lr: f64, dim: usize) -> Self {
        let (m, v) = match kind {
            Optimizer::Sgd => (Vec::new(), Vec::new()),
            Optimizer::Adam { .. } => (vec![0.0; dim], vec![0.0; dim]),
        };
        Self {
            kind,
            lr,
            m,
            v,
            t: 0,
        }
    }

    pub(crate) fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                self.t += 1;
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

/// Mean binary cross-entropy with probabilities clipped to `[1e-12, 1 − 1e-12]`.
pub fn bce_loss(probas: &[f64], labels: &[u8]) -> Result<f64> {
    if probas.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: probas.len(),
        });
    }
    if probas.is_empty() {
        return Err(Error::Data("cross-entropy of an empty sample".into()));
    }
    let total: f64 = probas
        .iter()
        .zip(labels)
        .map(|(&p, &y)| row_bce(p, y))
        .sum();
    Ok(total / probas.len() as f64)
}

#[inline]
pub(crate) fn row_bce(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROBA_CLIP, 1.0 - PROBA_CLIP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Mean cross-entropy of `model` over `rows` of `data`.
pub fn data_loss<M: Trainable>(model: &M, data: &Dataset, rows: &[usize], exec: Execution) -> f64 {
    let total = sum_chunks(exec, rows.len(), ROW_CHUNK, |range| {
        rows[range]
            .iter()
            .map(|&i| row_bce(sigmoid(model.score(data.row(i))), data.labels()[i]))
            .sum()
    });
    total / rows.len() as f64
}

/// Gradient of the mean cross-entropy over `rows`.
pub fn data_gradient<M: Trainable>(
    model: &M,
    data: &Dataset,
    rows: &[usize],
    exec: Execution,
) -> Vec<f64> {
    let inv = 1.0 / rows.len() as f64;
    sum_vec_chunks(
        exec,
        rows.len(),
        ROW_CHUNK,
        model.num_params(),
        |range, acc| {
            for &i in &rows[range] {
                let x = data.row(i);
                let residual = sigmoid(model.score(x)) - f64::from(data.labels()[i]);
                model.accumulate_logit_grad(x, residual * inv, acc);
            }
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub execution: Execution,
}

/// Extra objective term added to every mini-batch step: adds its gradient
/// into the slice and returns its value.
pub(crate) trait ExtraTerm<M> {
    fn add_gradient(&mut self, model: &M, grad: &mut [f64]) -> Result<f64>;
}

pub(crate) struct NoExtra;

impl<M> ExtraTerm<M> for NoExtra {
    fn add_gradient(&mut self, _: &M, _: &mut [f64]) -> Result<f64> {
        Ok(0.0)
    }
}

/// Runs `opts.epochs` passes of shuffled mini-batch descent. Returns the
/// full-data cross-entropy after every epoch.
pub(crate) fn fit<M, E>(
    model: &mut M,
    data: &Dataset,
    opts: &FitOptions,
    extra: &mut E,
) -> Result<Vec<f64>>
where
    M: Trainable,
    E: ExtraTerm<M>,
{
    if !(opts.learning_rate > 0.0 && opts.learning_rate.is_finite()) {
        return Err(Error::Config("learning_rate must be positive".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let n = data.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let all: Vec<usize> = order.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(1);
    let mut state = OptimizerState::new(opts.optimizer, opts.learning_rate, model.num_params());
    let mut params = model.params();
    let mut losses = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            let mut grad = data_gradient(model, data, batch, opts.execution);
            let extra_value = extra.add_gradient(model, &mut grad)?;
            if !extra_value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    learning_rate: opts.learning_rate,
                });
            }
            state.step(&mut params, &grad);
            model.read_params(&params);
        }
        let loss = data_loss(model, data, &all, opts.execution);
        if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch,
                learning_rate: opts.learning_rate,
            });
        }
        losses.push(loss);
    }
    Ok(losses)
}

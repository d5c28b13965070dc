//! Logistic activation and the closed-form calculus of a univariate
//! one-hidden-layer subnet
//!
//! ```text
//! f(x) = sum_k w2[k] * sigmoid(w1[k] * x + b1[k]) + b2
//! ```
//!
//! Everything the trainer needs (the forward value, `df/dx`, `df/dθ` and the
//! mixed second derivatives `d(df/dx)/dθ`) is written out by hand. Parameters
//! are addressed through a flat layout `[w1[0..H], b1[0..H], w2[0..H], b2]`
//! shared by [`SubNet::write_params`], [`SubNet::read_params`] and every
//! gradient accumulator in this module.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerically stable logistic function. Saturates instead of overflowing.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `σ'(z) = σ(z)(1 − σ(z))`.
#[inline]
pub fn sigmoid_prime(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}

/// `σ''(z) = σ'(z)(1 − 2σ(z))`.
#[inline]
pub fn sigmoid_second(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// Parameters of one univariate subnet with `H` logistic hidden units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubNet {
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl SubNet {
    /// All-zero subnet with `hidden` units; computes the constant 0.
    pub fn zeros(hidden: usize) -> Self {
        assert!(hidden >= 1, "a subnet needs at least one hidden unit");
        Self {
            hidden_weights: vec![0.0; hidden],
            hidden_biases: vec![0.0; hidden],
            output_weights: vec![0.0; hidden],
            output_bias: 0.0,
        }
    }

    /// Weights and hidden biases uniform in `[-scale, scale]`; output bias 0.
    pub fn random<R: Rng + ?Sized>(hidden: usize, scale: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(hidden);
        let mut draw = || {
            if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            }
        };
        for k in 0..hidden {
            net.hidden_weights[k] = draw();
            net.hidden_biases[k] = draw();
            net.output_weights[k] = draw();
        }
        net
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_weights.len()
    }

    /// Length of the flat parameter layout, `3H + 1`.
    pub fn num_params(&self) -> usize {
        3 * self.hidden_units() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_units();
        if h == 0 {
            return Err(Error::Config("subnet has no hidden units".into()));
        }
        if self.hidden_biases.len() != h {
            return Err(Error::LengthMismatch {
                expected: h,
                got: self.hidden_biases.len(),
            });
        }
        if self.output_weights.len() != h {
            return Err(Error::LengthMismatch {
                expected: h,
                got: self.output_weights.len(),
            });
        }
        let finite = self
            .hidden_weights
            .iter()
            .chain(&self.hidden_biases)
            .chain(&self.output_weights)
            .chain(std::iter::once(&self.output_bias))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("subnet has non-finite parameters".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        let mut out = self.output_bias;
        for k in 0..self.hidden_units() {
            out += self.output_weights[k]
                * sigmoid(self.hidden_weights[k] * x + self.hidden_biases[k]);
        }
        out
    }

    /// Exact `df/dx`.
    #[inline]
    pub fn input_grad(&self, x: f64) -> f64 {
        let mut out = 0.0;
        for k in 0..self.hidden_units() {
            let w1 = self.hidden_weights[k];
            out += self.output_weights[k] * w1 * sigmoid_prime(w1 * x + self.hidden_biases[k]);
        }
        out
    }

    /// Adds `scale * df/dθ` into `out` (flat layout) and returns `f(x)`.
    #[inline]
    pub fn accumulate_param_grads(&self, x: f64, scale: f64, out: &mut [f64]) -> f64 {
        let h = self.hidden_units();
        debug_assert_eq!(out.len(), self.num_params());
        let mut value = self.output_bias;
        for k in 0..h {
            let z = self.hidden_weights[k] * x + self.hidden_biases[k];
            let s = sigmoid(z);
            let w2 = self.output_weights[k];
            let ds = s * (1.0 - s);
            value += w2 * s;
            out[k] += scale * w2 * ds * x;
            out[h + k] += scale * w2 * ds;
            out[2 * h + k] += scale * s;
        }
        out[3 * h] += scale;
        value
    }

    /// Adds `scale * d(df/dx)/dθ` into `out` (flat layout) and returns `df/dx`.
    ///
    /// With `z = w1 x + b1` and `g = w2 w1 σ'(z)`:
    /// `dg/dw1 = w2 (σ'(z) + w1 x σ''(z))`, `dg/db1 = w2 w1 σ''(z)`,
    /// `dg/dw2 = w1 σ'(z)`, `dg/db2 = 0`, where `σ'' = σ'(1 − 2σ)`.
    #[inline]
    pub fn accumulate_mixed_grads(&self, x: f64, scale: f64, out: &mut [f64]) -> f64 {
        let h = self.hidden_units();
        debug_assert_eq!(out.len(), self.num_params());
        let mut slope = 0.0;
        for k in 0..h {
            let w1 = self.hidden_weights[k];
            let w2 = self.output_weights[k];
            let s = sigmoid(w1 * x + self.hidden_biases[k]);
            let d1 = s * (1.0 - s);
            let d2 = d1 * (1.0 - 2.0 * s);
            slope += w2 * w1 * d1;
            out[k] += scale * w2 * (d1 + w1 * x * d2);
            out[h + k] += scale * w2 * w1 * d2;
            out[2 * h + k] += scale * w1 * d1;
        }
        slope
    }

    /// `df/dθ` in the flat layout.
    pub fn param_grads(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_params()];
        self.accumulate_param_grads(x, 1.0, &mut out);
        out
    }

    /// `d(df/dx)/dθ` in the flat layout.
    pub fn mixed_grads(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_params()];
        self.accumulate_mixed_grads(x, 1.0, &mut out);
        out
    }

    pub fn write_params(&self, out: &mut [f64]) {
        let h = self.hidden_units();
        out[..h].copy_from_slice(&self.hidden_weights);
        out[h..2 * h].copy_from_slice(&self.hidden_biases);
        out[2 * h..3 * h].copy_from_slice(&self.output_weights);
        out[3 * h] = self.output_bias;
    }

    pub fn read_params(&mut self, params: &[f64]) {
        let h = self.hidden_units();
        self.hidden_weights.copy_from_slice(&params[..h]);
        self.hidden_biases.copy_from_slice(&params[h..2 * h]);
        self.output_weights.copy_from_slice(&params[2 * h..3 * h]);
        self.output_bias = params[3 * h];
    }

    /// Upper bound on `|f(x)|` over all `x`: `Σ|w2| + |b2|`.
    pub fn output_bound(&self) -> f64 {
        self.output_weights.iter().map(|w| w.abs()).sum::<f64>() + self.output_bias.abs()
    }
}

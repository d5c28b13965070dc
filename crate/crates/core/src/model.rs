//! Traits shared by the additive model and the baselines.

use crate::error::{Error, Result};
use crate::math::sigmoid;

/// A binary classifier that produces a real-valued score (logit).
pub trait Scorer {
    fn num_features(&self) -> usize;

    /// Logit without the length check; callers guarantee `x.len() == num_features()`.
    fn score(&self, x: &[f64]) -> f64;

    fn logit(&self, x: &[f64]) -> Result<f64> {
        check_len(self.num_features(), x.len())?;
        Ok(self.score(x))
    }

    /// Probability of the positive class.
    fn proba(&self, x: &[f64]) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }
}

/// A model whose logit is differentiable in a flat parameter vector.
pub trait Trainable: Scorer + Clone + Sync {
    fn num_params(&self) -> usize;
    fn write_params(&self, out: &mut [f64]);
    fn read_params(&mut self, params: &[f64]);

    /// Adds `scale * d logit / dθ` into `out` and returns the logit.
    fn accumulate_logit_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) -> f64;

    fn params(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_params()];
        self.write_params(&mut out);
        out
    }
}

/// A model exposing `d logit / dx_j` for sensitivity analysis.
pub trait InputGradient: Scorer + Sync {
    /// Writes the full input gradient at `x` into `out` (length `num_features`).
    fn input_gradient(&self, x: &[f64], out: &mut [f64]);
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

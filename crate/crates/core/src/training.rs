//! NAM training on `BCE + λ h1 + η h2` and the certified escalation loop:
//! train, certify, raise the multiplier of whichever penalty is still
//! positive, retrain from the current parameters, repeat.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::auc;
use crate::monotonicity::{certify, penalty_eval, CertReport, ConstraintSet, PenaltyConfig};
use crate::nam::NamModel;
use crate::optim::{data_gradient, data_loss, fit, ExtraTerm, FitOptions, Optimizer};

pub use crate::optim::bce_loss;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub hidden_units: usize,
    /// Initial weights are uniform in `[-scale, scale]`.
    pub weight_init_scale: f64,
    pub lambda_init: f64,
    pub eta_init: f64,
    /// First nonzero value a multiplier takes when escalated from 0.
    pub multiplier_start: f64,
    /// Factor applied to a nonzero multiplier on each escalation.
    pub multiplier_step: f64,
    /// Escalation rounds allowed after the initial fit.
    pub max_rounds: usize,
    /// Grid and margin of the penalties inside the training objective.
    pub penalty: PenaltyConfig,
    /// Grid used to certify each round.
    pub certification: PenaltyConfig,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 256,
            learning_rate: 0.01,
            seed: 0,
            optimizer: Optimizer::Sgd,
            hidden_units: 2,
            weight_init_scale: 1.0,
            lambda_init: 0.0,
            eta_init: 0.0,
            multiplier_start: 1.0,
            multiplier_step: 10.0,
            max_rounds: 7,
            penalty: PenaltyConfig::training(),
            certification: PenaltyConfig::certification(),
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.hidden_units == 0 {
            return bad("hidden_units must be at least 1");
        }
        if self.multiplier_step.is_nan() || self.multiplier_step <= 1.0 {
            return bad("multiplier_step must exceed 1");
        }
        if self.multiplier_start.is_nan() || self.multiplier_start <= 0.0 {
            return bad("multiplier_start must be positive");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1");
        }
        if !(self.lambda_init >= 0.0 && self.eta_init >= 0.0) {
            return bad("initial multipliers must be non-negative");
        }
        if self.weight_init_scale.is_nan() || self.weight_init_scale < 0.0 {
            return bad("weight_init_scale must be non-negative");
        }
        self.penalty.validate()?;
        self.certification.validate()
    }

    pub(crate) fn fit_options(&self) -> FitOptions {
        FitOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            optimizer: self.optimizer,
            execution: self.execution,
        }
    }

    fn escalate(&self, multiplier: f64) -> f64 {
        if multiplier == 0.0 {
            self.multiplier_start
        } else {
            multiplier * self.multiplier_step
        }
    }
}

/// Log-odds of the positive rate.
pub fn base_rate_logit(data: &Dataset) -> f64 {
    let rate = data.base_rate();
    (rate / (1.0 - rate)).ln()
}

/// Fresh NAM: seeded uniform weights, intercept at the base-rate log-odds.
pub fn init_nam(data: &Dataset, cfg: &TrainConfig) -> NamModel {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    NamModel::random(
        data.meta().to_vec(),
        cfg.hidden_units,
        cfg.weight_init_scale,
        base_rate_logit(data),
        &mut rng,
    )
}

struct PenaltyTerm<'a> {
    cs: &'a ConstraintSet,
    cfg: PenaltyConfig,
    lambda: f64,
    eta: f64,
    exec: Execution,
}

impl ExtraTerm<NamModel> for PenaltyTerm<'_> {
    fn add_gradient(&mut self, model: &NamModel, grad: &mut [f64]) -> Result<f64> {
        if (self.lambda == 0.0 && self.eta == 0.0) || self.cs.is_empty() {
            return Ok(0.0);
        }
        let eval = penalty_eval(
            model,
            self.cs,
            &self.cfg,
            self.lambda,
            self.eta,
            self.cfg.epsilon,
            self.exec,
        )?;
        for (g, p) in grad.iter_mut().zip(&eval.grad) {
            *g += p;
        }
        Ok(self.lambda * eval.h1 + self.eta * eval.h2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNam {
    pub model: NamModel,
    /// Full-data cross-entropy after every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains a freshly initialized NAM on `BCE + λ h1 + η h2`.
pub fn train_nam(
    data: &Dataset,
    cs: &ConstraintSet,
    cfg: &TrainConfig,
    lambda: f64,
    eta: f64,
) -> Result<TrainedNam> {
    train_nam_from(init_nam(data, cfg), data, cs, cfg, lambda, eta)
}

/// Continues training `model` on `BCE + λ h1 + η h2`.
pub fn train_nam_from(
    mut model: NamModel,
    data: &Dataset,
    cs: &ConstraintSet,
    cfg: &TrainConfig,
    lambda: f64,
    eta: f64,
) -> Result<TrainedNam> {
    cfg.validate()?;
    model.validate()?;
    crate::model::check_len(model.num_features(), data.n_features())?;
    cs.check_indices(model.num_features())?;
    if !(lambda >= 0.0 && eta >= 0.0) {
        return Err(Error::Config(
            "penalty multipliers must be non-negative".into(),
        ));
    }
    let mut term = PenaltyTerm {
        cs,
        cfg: cfg.penalty,
        lambda,
        eta,
        exec: cfg.execution,
    };
    let epoch_losses = fit(&mut model, data, &cfg.fit_options(), &mut term)?;
    Ok(TrainedNam {
        model,
        epoch_losses,
    })
}

/// `BCE(rows) + λ h1 + η h2` with the training margin `cfg.epsilon`.
pub fn composite_objective(
    model: &NamModel,
    data: &Dataset,
    rows: &[usize],
    cs: &ConstraintSet,
    cfg: &PenaltyConfig,
    lambda: f64,
    eta: f64,
) -> Result<f64> {
    let loss = data_loss(model, data, rows, Execution::default());
    let eval = penalty_eval(
        model,
        cs,
        cfg,
        lambda,
        eta,
        cfg.epsilon,
        Execution::default(),
    )?;
    Ok(loss + lambda * eval.h1 + eta * eval.h2)
}

/// Gradient of [`composite_objective`] in the flat model layout.
pub fn composite_gradient(
    model: &NamModel,
    data: &Dataset,
    rows: &[usize],
    cs: &ConstraintSet,
    cfg: &PenaltyConfig,
    lambda: f64,
    eta: f64,
) -> Result<Vec<f64>> {
    let mut grad = data_gradient(model, data, rows, Execution::default());
    let eval = penalty_eval(
        model,
        cs,
        cfg,
        lambda,
        eta,
        cfg.epsilon,
        Execution::default(),
    )?;
    for (g, p) in grad.iter_mut().zip(&eval.grad) {
        *g += p;
    }
    Ok(grad)
}

/// One escalation round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub lambda: f64,
    pub eta: f64,
    /// Unclamped penalties on the certification grid.
    pub h1: f64,
    pub h2: f64,
    pub train_loss: f64,
    pub test_auc: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct CertifiedRun {
    pub model: NamModel,
    pub report: CertReport,
    pub trace: Vec<RoundRecord>,
}

/// The last model, its failing certificate and the full trace.
#[derive(Clone, Debug)]
pub struct CertificationFailure {
    pub model: NamModel,
    pub report: CertReport,
    pub trace: Vec<RoundRecord>,
}

impl fmt::Display for CertificationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.trace.last();
        write!(
            f,
            "certification failed after {} escalation rounds (λ={}, η={}, h1={:e}, h2={:e})",
            self.trace.len().saturating_sub(1),
            last.map_or(0.0, |r| r.lambda),
            last.map_or(0.0, |r| r.eta),
            last.map_or(0.0, |r| r.h1),
            last.map_or(0.0, |r| r.h2),
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    round: usize,
    lambda: f64,
    eta: f64,
    trained: &TrainedNam,
    report: &CertReport,
    cs: &ConstraintSet,
    cfg: &TrainConfig,
    train: &Dataset,
    test: Option<&Dataset>,
) -> Result<RoundRecord> {
    let cert_cfg = &cfg.certification;
    let eval = penalty_eval(&trained.model, cs, cert_cfg, 0.0, 0.0, 0.0, cfg.execution)?;
    let train_loss = match trained.epoch_losses.last() {
        Some(&l) => l,
        None => data_loss(
            &trained.model,
            train,
            &(0..train.n_rows()).collect::<Vec<_>>(),
            cfg.execution,
        ),
    };
    let test_auc = test
        .map(|t| auc(&crate::metrics::scores(&trained.model, t), t.labels()))
        .transpose()?;
    Ok(RoundRecord {
        round,
        lambda,
        eta,
        h1: eval.h1,
        h2: eval.h2,
        train_loss,
        test_auc,
        pass: report.pass,
    })
}

/// Trains with `λ = λ_init, η = η_init`, then escalates the multiplier of
/// each penalty that is still positive on the certification grid and
/// retrains from the current parameters until certification passes or
/// `max_rounds` escalations are spent.
pub fn certified_train(
    train: &Dataset,
    test: Option<&Dataset>,
    cs: &ConstraintSet,
    cfg: &TrainConfig,
) -> Result<CertifiedRun> {
    cfg.validate()?;
    let (mut lambda, mut eta) = (cfg.lambda_init, cfg.eta_init);
    let mut trained = train_nam(train, cs, cfg, lambda, eta)?;
    let mut report = certify(&trained.model, cs, &cfg.certification)?;
    let mut trace = vec![record(
        0, lambda, eta, &trained, &report, cs, cfg, train, test,
    )?];

    let mut round = 0;
    while !report.pass && round < cfg.max_rounds {
        let last = trace.last().expect("trace starts non-empty");
        if last.h1 > 0.0 {
            lambda = cfg.escalate(lambda);
        }
        if last.h2 > 0.0 {
            eta = cfg.escalate(eta);
        }
        round += 1;
        trained = train_nam_from(trained.model, train, cs, cfg, lambda, eta)?;
        report = certify(&trained.model, cs, &cfg.certification)?;
        trace.push(record(
            round, lambda, eta, &trained, &report, cs, cfg, train, test,
        )?);
    }

    if report.pass {
        Ok(CertifiedRun {
            model: trained.model,
            report,
            trace,
        })
    } else {
        Err(Error::CertificationFailed(Box::new(CertificationFailure {
            model: trained.model,
            report,
            trace,
        })))
    }
}

//! Monotonicity constraints on additive models: grid-sum penalties, their
//! parameter gradients and grid certification.
//!
//! Because each shape function is univariate, the derivative conditions
//! reduce to one-dimensional scans:
//!
//! * individual: `f'_a(x) >= 0` on the domain of feature `a`;
//! * pairwise `(u, v)`: `f'_u(x) - f'_v(x) >= 0` at common points `x` of the
//!   shared domain.
//!
//! The penalties are squared hinges summed over an equispaced grid,
//! `Σ_j max(0, margin - slope_j)^2`. Certification and the escalation test use
//! `margin = 0`; gradient steps use `margin = ε`, which keeps pushing slopes
//! that sit just below zero up to a small positive value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_chunks, sum_vec_chunks, Execution, GRID_CHUNK};
use crate::model::Trainable;
use crate::nam::{grid_point, NamModel};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// Features whose shape function must be non-decreasing.
    pub individual: Vec<usize>,
    /// `(u, v)`: the slope of `f_u` must dominate the slope of `f_v`.
    pub pairwise: Vec<(usize, usize)>,
}

impl ConstraintSet {
    /// Builds a constraint set where every pair member must also be
    /// individually constrained.
    pub fn new(individual: Vec<usize>, pairwise: Vec<(usize, usize)>) -> Result<Self> {
        Self::with_options(individual, pairwise, true)
    }

    pub fn with_options(
        individual: Vec<usize>,
        pairwise: Vec<(usize, usize)>,
        require_individual_for_pairs: bool,
    ) -> Result<Self> {
        let cs = Self {
            individual,
            pairwise,
        };
        cs.check_shape(require_individual_for_pairs)?;
        Ok(cs)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.individual.is_empty() && self.pairwise.is_empty()
    }

    /// Resolves feature names against the model's feature list.
    pub fn from_names(
        individual: &[String],
        pairwise: &[(String, String)],
        features: &[String],
        require_individual_for_pairs: bool,
    ) -> Result<Self> {
        let lookup = |name: &String| {
            features.iter().position(|f| f == name).ok_or_else(|| {
                Error::Constraint(format!(
                    "unknown feature `{name}`; known features: {features:?}"
                ))
            })
        };
        let individual = individual.iter().map(lookup).collect::<Result<Vec<_>>>()?;
        let pairwise = pairwise
            .iter()
            .map(|(u, v)| Ok((lookup(u)?, lookup(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::with_options(individual, pairwise, require_individual_for_pairs)
    }

    fn check_shape(&self, require_individual_for_pairs: bool) -> Result<()> {
        for (i, a) in self.individual.iter().enumerate() {
            if self.individual[..i].contains(a) {
                return Err(Error::Constraint(format!(
                    "duplicate individual constraint on feature {a}"
                )));
            }
        }
        for (i, &(u, v)) in self.pairwise.iter().enumerate() {
            if u == v {
                return Err(Error::Constraint(format!(
                    "pair ({u}, {v}) compares a feature with itself"
                )));
            }
            if self.pairwise[..i].contains(&(u, v)) {
                return Err(Error::Constraint(format!("duplicate pair ({u}, {v})")));
            }
            if require_individual_for_pairs
                && !(self.individual.contains(&u) && self.individual.contains(&v))
            {
                return Err(Error::Constraint(format!(
                    "pair ({u}, {v}) requires both features to be individually monotone"
                )));
            }
        }
        Ok(())
    }

    /// Checks every referenced ordinal against a model with `features` features.
    pub fn check_indices(&self, features: usize) -> Result<()> {
        let all = self
            .individual
            .iter()
            .copied()
            .chain(self.pairwise.iter().flat_map(|&(u, v)| [u, v]));
        for index in all {
            if index >= features {
                return Err(Error::FeatureIndex { index, features });
            }
        }
        Ok(())
    }

    pub fn involves(&self, feature: usize) -> bool {
        self.individual.contains(&feature)
            || self
                .pairwise
                .iter()
                .any(|&(u, v)| u == feature || v == feature)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    /// Equispaced points per feature domain, endpoints included.
    pub grid_size: usize,
    /// Hinge margin used by training gradients.
    pub epsilon: f64,
}

impl PenaltyConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-5;

    /// 256-point grid used inside the training objective.
    pub fn training() -> Self {
        Self {
            grid_size: 256,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    /// 1024-point grid used for certification.
    pub fn certification() -> Self {
        Self {
            grid_size: 1024,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::Config("penalty grid_size must be at least 2".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("penalty epsilon must be positive".into()));
        }
        Ok(())
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self::certification()
    }
}

#[inline]
fn hinge(margin: f64, slope: f64) -> f64 {
    (margin - slope).max(0.0)
}

/// Domain on which the pair `(u, v)` is compared: the overlap of both domains.
fn pair_domain(model: &NamModel, u: usize, v: usize) -> Result<(f64, f64)> {
    let (a, b) = (&model.features[u], &model.features[v]);
    let lo = a.domain_lo.max(b.domain_lo);
    let hi = a.domain_hi.min(b.domain_hi);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(Error::Constraint(format!(
            "features `{}` and `{}` have disjoint domains",
            a.name, b.name
        )))
    }
}

fn prepare(model: &NamModel, cs: &ConstraintSet, cfg: &PenaltyConfig) -> Result<()> {
    cs.check_indices(model.num_features())?;
    if cfg.grid_size < 2 {
        return Err(Error::Config("penalty grid_size must be at least 2".into()));
    }
    Ok(())
}

/// Penalty values and the gradient of `λ h1 + η h2` in the flat model layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyEval {
    pub h1: f64,
    pub h2: f64,
    pub grad: Vec<f64>,
}

/// Individual-monotonicity penalty `Σ_j Σ_i max(0, margin − f'_{α_i}(x_j))²`.
pub fn penalty_h1(
    model: &NamModel,
    cs: &ConstraintSet,
    cfg: &PenaltyConfig,
    margin: f64,
) -> Result<f64> {
    prepare(model, cs, cfg)?;
    let exec = Execution::default();
    let n = cfg.grid_size;
    let mut total = 0.0;
    for &a in &cs.individual {
        let (lo, hi) = (model.features[a].domain_lo, model.features[a].domain_hi);
        let net = &model.subnets[a];
        total += map_chunks(exec, n, GRID_CHUNK, |range| {
            range
                .map(|j| hinge(margin, net.input_grad(grid_point(lo, hi, n, j))).powi(2))
                .sum::<f64>()
        })
        .into_iter()
        .sum::<f64>();
    }
    Ok(total)
}

/// Pairwise penalty `Σ_j Σ_i max(0, margin − f'_{u_i}(x_j) + f'_{v_i}(x_j))²`.
pub fn penalty_h2(
    model: &NamModel,
    cs: &ConstraintSet,
    cfg: &PenaltyConfig,
    margin: f64,
) -> Result<f64> {
    prepare(model, cs, cfg)?;
    let exec = Execution::default();
    let n = cfg.grid_size;
    let mut total = 0.0;
    for &(u, v) in &cs.pairwise {
        let (lo, hi) = pair_domain(model, u, v)?;
        let (nu, nv) = (&model.subnets[u], &model.subnets[v]);
        total += map_chunks(exec, n, GRID_CHUNK, |range| {
            range
                .map(|j| {
                    let x = grid_point(lo, hi, n, j);
                    hinge(margin, nu.input_grad(x) - nv.input_grad(x)).powi(2)
                })
                .sum::<f64>()
        })
        .into_iter()
        .sum::<f64>();
    }
    Ok(total)
}

/// Gradient of `λ h1 + η h2` (both with margin `cfg.epsilon`) with respect to
/// every model parameter, flat layout `[β, subnet_0, ...]`.
pub fn penalty_param_grads(
    model: &NamModel,
    cs: &ConstraintSet,
    cfg: &PenaltyConfig,
    lambda: f64,
    eta: f64,
) -> Result<Vec<f64>> {
    Ok(penalty_eval(
        model,
        cs,
        cfg,
        lambda,
        eta,
        cfg.epsilon,
        Execution::default(),
    )?
    .grad)
}

/// One pass over the grids producing `h1`, `h2` (at `margin`) and the
/// gradient of `λ h1 + η h2`.
pub fn penalty_eval(
    model: &NamModel,
    cs: &ConstraintSet,
    cfg: &PenaltyConfig,
    lambda: f64,
    eta: f64,
    margin: f64,
    exec: Execution,
) -> Result<PenaltyEval> {
    prepare(model, cs, cfg)?;
    if !(lambda >= 0.0 && eta >= 0.0) {
        return Err(Error::Config(
            "penalty multipliers must be non-negative".into(),
        ));
    }
    let n = cfg.grid_size;
    let dim = model.num_params();
    let stride = model.subnet_stride();
    let mut grad = vec![0.0; dim];
    let (mut h1, mut h2) = (0.0, 0.0);

    // Slots [0, dim) hold the gradient; slot `dim` holds the penalty value.
    for &a in &cs.individual {
        let (lo, hi) = (model.features[a].domain_lo, model.features[a].domain_hi);
        let net = &model.subnets[a];
        let off = model.subnet_offset(a);
        let part = sum_vec_chunks(exec, n, GRID_CHUNK, stride + 1, |range, acc| {
            let (g, value) = acc.split_at_mut(stride);
            for j in range {
                let x = grid_point(lo, hi, n, j);
                let t = hinge(margin, net.input_grad(x));
                if t > 0.0 {
                    value[0] += t * t;
                    net.accumulate_mixed_grads(x, -2.0 * lambda * t, g);
                }
            }
        });
        for (dst, src) in grad[off..off + stride].iter_mut().zip(&part[..stride]) {
            *dst += src;
        }
        h1 += part[stride];
    }

    for &(u, v) in &cs.pairwise {
        let (lo, hi) = pair_domain(model, u, v)?;
        let (nu, nv) = (&model.subnets[u], &model.subnets[v]);
        let part = sum_vec_chunks(exec, n, GRID_CHUNK, 2 * stride + 1, |range, acc| {
            let (gu, rest) = acc.split_at_mut(stride);
            let (gv, value) = rest.split_at_mut(stride);
            for j in range {
                let x = grid_point(lo, hi, n, j);
                let t = hinge(margin, nu.input_grad(x) - nv.input_grad(x));
                if t > 0.0 {
                    value[0] += t * t;
                    nu.accumulate_mixed_grads(x, -2.0 * eta * t, gu);
                    nv.accumulate_mixed_grads(x, 2.0 * eta * t, gv);
                }
            }
        });
        let (ou, ov) = (model.subnet_offset(u), model.subnet_offset(v));
        for k in 0..stride {
            grad[ou + k] += part[k];
            grad[ov + k] += part[stride + k];
        }
        h2 += part[2 * stride];
    }

    Ok(PenaltyEval { h1, h2, grad })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndividualCheck {
    pub feature: usize,
    pub name: String,
    pub min_derivative: f64,
    /// Grid point attaining the minimum.
    pub at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub u: usize,
    pub v: usize,
    pub u_name: String,
    pub v_name: String,
    pub min_gap: f64,
    pub at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub grid_size: usize,
    pub individual: Vec<IndividualCheck>,
    pub pairwise: Vec<PairCheck>,
    pub pass: bool,
}

impl CertReport {
    /// Names of the features whose individual check failed.
    pub fn failing_features(&self) -> Vec<&str> {
        self.individual
            .iter()
            .filter(|c| c.min_derivative < 0.0)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Every failing check: feature names, and pairs as `u>v`.
    pub fn violations(&self) -> Vec<String> {
        let pairs = self
            .pairwise
            .iter()
            .filter(|c| c.min_gap < 0.0)
            .map(|c| format!("{}>{}", c.u_name, c.v_name));
        self.failing_features()
            .into_iter()
            .map(str::to_string)
            .chain(pairs)
            .collect()
    }
}

fn grid_min<F>(n: usize, lo: f64, hi: f64, slope: F) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    map_chunks(Execution::default(), n, GRID_CHUNK, |range| {
        let mut best = (f64::INFINITY, lo);
        for j in range {
            let x = grid_point(lo, hi, n, j);
            let s = slope(x);
            if s < best.0 {
                best = (s, x);
            }
        }
        best
    })
    .into_iter()
    .fold(
        (f64::INFINITY, lo),
        |best, c| if c.0 < best.0 { c } else { best },
    )
}

/// Minimum slope (or slope gap) of every constraint over the grid; passes
/// when all minima are `>= 0`.
pub fn certify(model: &NamModel, cs: &ConstraintSet, cfg: &PenaltyConfig) -> Result<CertReport> {
    prepare(model, cs, cfg)?;
    let n = cfg.grid_size;
    let individual = cs
        .individual
        .iter()
        .map(|&a| {
            let meta = &model.features[a];
            let net = &model.subnets[a];
            let (min_derivative, at) =
                grid_min(n, meta.domain_lo, meta.domain_hi, |x| net.input_grad(x));
            IndividualCheck {
                feature: a,
                name: meta.name.clone(),
                min_derivative,
                at,
            }
        })
        .collect::<Vec<_>>();
    let pairwise = cs
        .pairwise
        .iter()
        .map(|&(u, v)| {
            let (lo, hi) = pair_domain(model, u, v)?;
            let (nu, nv) = (&model.subnets[u], &model.subnets[v]);
            let (min_gap, at) = grid_min(n, lo, hi, |x| nu.input_grad(x) - nv.input_grad(x));
            Ok(PairCheck {
                u,
                v,
                u_name: model.features[u].name.clone(),
                v_name: model.features[v].name.clone(),
                min_gap,
                at,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = individual.iter().all(|c| c.min_derivative >= 0.0)
        && pairwise.iter().all(|c| c.min_gap >= 0.0);
    Ok(CertReport {
        grid_size: n,
        individual,
        pairwise,
        pass,
    })
}

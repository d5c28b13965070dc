//! Finite-difference checks of the analytic derivatives, shared by the
//! gradient tests and the acceptance suite.

use super::*;
use mnam::monotonicity::{
    penalty_h1, penalty_h2, penalty_param_grads, ConstraintSet, PenaltyConfig,
};
use mnam::training::{composite_gradient, composite_objective};
use mnam::Trainable;
use rand::Rng;

pub const INSTANCES: usize = 1000;

pub fn subnet_input_gradient_matches_central_differences() {
    let mut r = rng(1);
    for i in 0..INSTANCES {
        let hidden = 1 + i % 4;
        let net = random_net(&mut r, hidden, 2.0);
        let x = r.random_range(-2.0..2.0);
        let fd = central(|t| net.forward(t), x, 1e-5);
        assert_close(
            net.input_grad(x),
            fd,
            1e-6,
            1e-9,
            1e-3,
            &format!("df/dx, instance {i}"),
        );
    }
}

pub fn subnet_parameter_gradients_match_central_differences() {
    let mut r = rng(2);
    for i in 0..INSTANCES {
        let hidden = 1 + i % 4;
        let net = random_net(&mut r, hidden, 2.0);
        let x = r.random_range(-2.0..2.0);
        let mut params = vec![0.0; net.num_params()];
        net.write_params(&mut params);
        let fd = central_vec(
            |p| {
                let mut n = net.clone();
                n.read_params(p);
                n.forward(x)
            },
            &params,
            1e-5,
        );
        for (k, (a, e)) in net.param_grads(x).iter().zip(&fd).enumerate() {
            assert_close(
                *a,
                *e,
                1e-6,
                1e-9,
                1e-3,
                &format!("df/dθ[{k}], instance {i}"),
            );
        }
    }
}

pub fn subnet_mixed_gradients_match_central_differences() {
    let mut r = rng(3);
    for i in 0..INSTANCES {
        let hidden = 1 + i % 4;
        let net = random_net(&mut r, hidden, 2.0);
        let x = r.random_range(-2.0..2.0);
        let mut params = vec![0.0; net.num_params()];
        net.write_params(&mut params);
        let fd = central_vec(
            |p| {
                let mut n = net.clone();
                n.read_params(p);
                n.input_grad(x)
            },
            &params,
            1e-5,
        );
        for (k, (a, e)) in net.mixed_grads(x).iter().zip(&fd).enumerate() {
            assert_close(
                *a,
                *e,
                1e-5,
                1e-9,
                1e-3,
                &format!("d(df/dx)/dθ[{k}], instance {i}"),
            );
        }
    }
}

pub fn penalty_gradients_match_central_differences() {
    let mut r = rng(4);
    for i in 0..INSTANCES {
        let model = random_nam(&mut r, 4, 2, 2.0);
        let cs = ConstraintSet::new(vec![0, 1, 2], vec![(0, 1), (2, 1)]).unwrap();
        let cfg = PenaltyConfig {
            grid_size: 9,
            epsilon: 1e-5,
        };
        let (lambda, eta) = (1.0, 1.0);
        let analytic = penalty_param_grads(&model, &cs, &cfg, lambda, eta).unwrap();
        let fd = central_vec(
            |p| {
                let mut m = model.clone();
                m.read_params(p);
                lambda * penalty_h1(&m, &cs, &cfg, cfg.epsilon).unwrap()
                    + eta * penalty_h2(&m, &cs, &cfg, cfg.epsilon).unwrap()
            },
            &model.params(),
            1e-6,
        );
        for (k, (a, e)) in analytic.iter().zip(&fd).enumerate() {
            assert_close(
                *a,
                *e,
                1e-5,
                1e-8,
                1e-3,
                &format!("penalty grad[{k}], instance {i}"),
            );
        }
        let unconstrained = model.subnet_offset(3)..model.subnet_offset(3) + model.subnet_stride();
        assert!(analytic[unconstrained].iter().all(|&g| g == 0.0));
        assert_eq!(analytic[0], 0.0, "intercept receives no penalty gradient");
    }
}

pub fn composite_objective_gradient_matches_central_differences() {
    let mut r = rng(5);
    for i in 0..INSTANCES {
        let model = random_nam(&mut r, 3, 2, 1.5);
        let data = random_dataset(&mut r, 12, 3);
        let rows: Vec<usize> = (0..data.n_rows()).collect();
        let cs = ConstraintSet::new(vec![0, 1], vec![(1, 0)]).unwrap();
        let cfg = PenaltyConfig {
            grid_size: 7,
            epsilon: 1e-5,
        };
        let (lambda, eta) = (r.random_range(0.0..3.0), r.random_range(0.0..3.0));
        let analytic = composite_gradient(&model, &data, &rows, &cs, &cfg, lambda, eta).unwrap();
        let fd = central_vec(
            |p| {
                let mut m = model.clone();
                m.read_params(p);
                composite_objective(&m, &data, &rows, &cs, &cfg, lambda, eta).unwrap()
            },
            &model.params(),
            1e-6,
        );
        for (k, (a, e)) in analytic.iter().zip(&fd).enumerate() {
            assert_close(
                *a,
                *e,
                1e-4,
                1e-8,
                1e-3,
                &format!("composite grad[{k}], instance {i}"),
            );
        }
    }
}

/// Runs every check above.
pub fn run_all() {
    subnet_input_gradient_matches_central_differences();
    subnet_parameter_gradients_match_central_differences();
    subnet_mixed_gradients_match_central_differences();
    penalty_gradients_match_central_differences();
    composite_objective_gradient_matches_central_differences();
}

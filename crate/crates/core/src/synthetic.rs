//! Seeded synthetic classification tasks with known structure, used by tests,
//! benches and the acceptance suite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::math::sigmoid;

fn build(
    n: usize,
    p: usize,
    seed: u64,
    mut row: impl FnMut(&mut ChaCha8Rng, &mut [f64]) -> f64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = vec![0.0; n * p];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let x = &mut features[i * p..(i + 1) * p];
        let prob = row(&mut rng, x);
        labels.push(u8::from(rng.random::<f64>() < prob));
    }
    let names = (0..p).map(|j| format!("x{j}")).collect();
    Dataset::new(features, labels, names).expect("synthetic data has both classes")
}

/// One feature, `P(y=1|x) = σ(6(x − 0.5))`: strictly increasing.
pub fn monotone_logistic(n: usize, seed: u64) -> Dataset {
    build(n, 1, seed, |rng, x| {
        x[0] = rng.random();
        sigmoid(6.0 * (x[0] - 0.5))
    })
}

/// One feature, `P(y=1|x) = σ(sin 4πx)`: non-monotone.
pub fn sine(n: usize, seed: u64) -> Dataset {
    build(n, 1, seed, |rng, x| {
        x[0] = rng.random();
        sigmoid((4.0 * PI * x[0]).sin())
    })
}

/// Two features, `P(y=1|x) = σ(8(x0 − 0.5) + sin 4πx1)`: a strong monotone
/// driver plus a non-monotone effect on `x1`.
pub fn sine_with_driver(n: usize, seed: u64) -> Dataset {
    build(n, 2, seed, |rng, x| {
        x[0] = rng.random();
        x[1] = rng.random();
        sigmoid(8.0 * (x[0] - 0.5) + (4.0 * PI * x[1]).sin())
    })
}

/// `y = 1[x > 0.5]` with no samples in `(0.45, 0.55)`.
pub fn separable(n: usize, seed: u64) -> Dataset {
    build(n, 1, seed, |rng, x| {
        let u: f64 = rng.random::<f64>() * 0.9;
        x[0] = if u < 0.45 { u } else { u + 0.1 };
        if x[0] > 0.5 {
            1.0
        } else {
            0.0
        }
    })
}

/// One constant feature and alternating labels (exact 50/50 base rate).
pub fn constant_feature(n: usize) -> Dataset {
    let labels = (0..n).map(|i| (i % 2) as u8).collect();
    Dataset::new(vec![0.5; n], labels, vec!["x0".into()]).expect("n >= 2")
}

/// Two features, `y = 1[(x0 > 0.5) xor (x1 > 0.5)]`: a pure interaction.
pub fn xor(n: usize, seed: u64) -> Dataset {
    build(n, 2, seed, |rng, x| {
        x[0] = rng.random();
        x[1] = rng.random();
        if (x[0] > 0.5) != (x[1] > 0.5) {
            1.0
        } else {
            0.0
        }
    })
}

/// Three features where the data favour the slope of `x1` over `x0`,
/// violating a dominance constraint `(x0, x1)`; `x2` is noise-free monotone.
pub fn reversed_dominance(n: usize, seed: u64) -> Dataset {
    build(n, 3, seed, |rng, x| {
        x[0] = rng.random();
        x[1] = rng.random();
        x[2] = rng.random();
        sigmoid(1.0 * x[0] + 4.0 * x[1] + 3.0 * (x[2] - 0.5) - 2.5)
    })
}

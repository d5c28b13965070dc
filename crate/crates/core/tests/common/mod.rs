#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mnam::data::Dataset;
use mnam::{FeatureMeta, NamModel, SubNet};

pub mod gradient_checks;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_net(rng: &mut ChaCha8Rng, hidden: usize, scale: f64) -> SubNet {
    let mut net = SubNet::random(hidden, scale, rng);
    net.output_bias = rng.random_range(-scale..=scale);
    net
}

pub fn unit_meta(p: usize) -> Vec<FeatureMeta> {
    (0..p)
        .map(|j| FeatureMeta::unit(format!("x{j}"), j))
        .collect()
}

pub fn random_nam(rng: &mut ChaCha8Rng, p: usize, hidden: usize, scale: f64) -> NamModel {
    let subnets = (0..p).map(|_| random_net(rng, hidden, scale)).collect();
    NamModel::new(rng.random_range(-1.0..1.0), subnets, unit_meta(p)).unwrap()
}

/// Random `[0,1]` features with labels drawn so both classes appear.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let features: Vec<f64> = (0..n * p).map(|_| rng.random()).collect();
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
    labels[0] = 0;
    labels[n - 1] = 1;
    Dataset::new(features, labels, (0..p).map(|j| format!("x{j}")).collect()).unwrap()
}

/// Straight-line evaluation of `Σ_k w2_k / (1 + e^{-(w1_k x + b1_k)}) + b2`.
pub fn subnet_oracle(net: &SubNet, x: f64) -> f64 {
    let mut total = net.output_bias;
    for k in 0..net.hidden_weights.len() {
        let z = net.hidden_weights[k] * x + net.hidden_biases[k];
        total += net.output_weights[k] / (1.0 + (-z).exp());
    }
    total
}

/// Central difference of `f` at `x` with step `h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central differences of `f` with respect to every component of `params`.
pub fn central_vec(f: impl Fn(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error bound `rel`, switching to absolute `abs` when `|expected| < small`.
pub fn assert_close(got: f64, expected: f64, rel: f64, abs: f64, small: f64, what: &str) {
    let err = (got - expected).abs();
    let ok = if expected.abs() < small {
        err <= abs
    } else {
        err <= rel * expected.abs()
    };
    assert!(
        ok,
        "{what}: analytic {got:e} vs finite difference {expected:e} (error {err:e})"
    );
}

/// `Σ max(0, margin - f'_a(x_j))^2` by direct loop on an equispaced unit grid.
pub fn brute_h1(model: &NamModel, individual: &[usize], grid: usize, margin: f64) -> f64 {
    let mut total = 0.0;
    for &a in individual {
        for j in 0..grid {
            let x = j as f64 / (grid - 1) as f64;
            let t = (margin - slope(&model.subnets[a], x)).max(0.0);
            total += t * t;
        }
    }
    total
}

pub fn brute_h2(model: &NamModel, pairs: &[(usize, usize)], grid: usize, margin: f64) -> f64 {
    let mut total = 0.0;
    for &(u, v) in pairs {
        for j in 0..grid {
            let x = j as f64 / (grid - 1) as f64;
            let gap = slope(&model.subnets[u], x) - slope(&model.subnets[v], x);
            let t = (margin - gap).max(0.0);
            total += t * t;
        }
    }
    total
}

/// Closed-form slope written independently of the library.
pub fn slope(net: &SubNet, x: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..net.hidden_weights.len() {
        let z = net.hidden_weights[k] * x + net.hidden_biases[k];
        let s = 1.0 / (1.0 + (-z).exp());
        total += net.output_weights[k] * net.hidden_weights[k] * s * (1.0 - s);
    }
    total
}

/// O(n²) Mann–Whitney pair count.
pub fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            den += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / den
}

pub const TAIWAN_HEADER: &str =
    "ID,LIMIT_BAL,SEX,EDUCATION,MARRIAGE,AGE,PAY_0,PAY_2,PAY_3,PAY_4,PAY_5,PAY_6,\
BILL_AMT1,BILL_AMT2,BILL_AMT3,BILL_AMT4,BILL_AMT5,BILL_AMT6,\
PAY_AMT1,PAY_AMT2,PAY_AMT3,PAY_AMT4,PAY_AMT5,PAY_AMT6,default payment next month";

/// A file in the UCI export layout (placeholder header row above the real
/// one) whose default risk rises with the repayment delays.
pub fn taiwan_like_csv(n: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let placeholder: Vec<String> = std::iter::once(String::new())
        .chain((1..=23).map(|k| format!("X{k}")))
        .chain(std::iter::once("Y".to_string()))
        .collect();
    let mut out = format!("{}\n{TAIWAN_HEADER}\n", placeholder.join(","));
    for i in 0..n {
        let limit = 10_000.0 * r.random_range(1..=50) as f64;
        let pays: Vec<i32> = (0..6).map(|_| r.random_range(-2..=8)).collect();
        let bills: Vec<f64> = (0..6)
            .map(|_| r.random_range(-1_000.0..200_000.0f64).round())
            .collect();
        let paid: Vec<f64> = (0..6)
            .map(|_| r.random_range(0.0..20_000.0f64).round())
            .collect();
        let z = -1.6 + 0.45 * pays[0] as f64 + 0.15 * pays[1] as f64 - limit / 500_000.0;
        let y = u8::from(r.random::<f64>() < 1.0 / (1.0 + (-z).exp()));
        let mut cells = vec![
            (i + 1).to_string(),
            limit.to_string(),
            r.random_range(1..=2).to_string(),
            r.random_range(1..=4).to_string(),
            r.random_range(1..=3).to_string(),
            r.random_range(21..=70).to_string(),
        ];
        cells.extend(pays.iter().map(|p| p.to_string()));
        cells.extend(bills.iter().map(|b| b.to_string()));
        cells.extend(paid.iter().map(|b| b.to_string()));
        cells.push(y.to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const GMSC_HEADER: &str = ",SeriousDlqin2yrs,RevolvingUtilizationOfUnsecuredLines,age,\
NumberOfTime30-59DaysPastDueNotWorse,DebtRatio,MonthlyIncome,NumberOfOpenCreditLinesAndLoans,\
NumberOfTimes90DaysLate,NumberRealEstateLoansOrLines,NumberOfTime60-89DaysPastDueNotWorse,NumberOfDependents";

/// A file in the Kaggle layout with some `NA` incomes and `98` sentinels.
pub fn gmsc_like_csv(n: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let mut out = format!("{GMSC_HEADER}\n");
    for i in 0..n {
        let late30 = if r.random::<f64>() < 0.01 {
            98
        } else {
            r.random_range(0..4)
        };
        let late90 = if late30 == 98 {
            98
        } else {
            r.random_range(0..3)
        };
        let late60 = if late30 == 98 {
            98
        } else {
            r.random_range(0..3)
        };
        let util: f64 = r.random();
        let z = -3.0
            + 0.9 * late90.min(8) as f64
            + 0.6 * late60.min(8) as f64
            + 0.4 * late30.min(8) as f64
            + util;
        let y = u8::from(r.random::<f64>() < 1.0 / (1.0 + (-z).exp()));
        let income = if r.random::<f64>() < 0.1 {
            "NA".to_string()
        } else {
            r.random_range(1_000..20_000).to_string()
        };
        out.push_str(&format!(
            "{},{y},{util:.4},{},{late30},{:.4},{income},{},{late90},{},{late60},{}\n",
            i + 1,
            r.random_range(21..90),
            r.random::<f64>() * 2.0,
            r.random_range(0..20),
            r.random_range(0..5),
            r.random_range(0..4),
        ));
    }
    out
}

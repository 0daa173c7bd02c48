//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use scic::causal::{derangement, dv_from_scores, StatisticNetwork};
use scic::harness::{TaskKind, TrainConfig};

/// `-0.5 ln(1 - rho^2)`, the mutual information of a unit bivariate Gaussian.
pub fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

fn correlated_pairs(n: usize, rho: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let c = (1.0 - rho * rho).sqrt();
    let mut out = Array2::zeros((n, 2));
    for r in 0..n {
        let x: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        out[[r, 0]] = x;
        out[[r, 1]] = rho * x + c * z;
    }
    out
}

/// Joint rows with `y` moved along a derangement: a sample of the product
/// of marginals built from the same draws.
fn shuffled(joint: &Array2<f64>, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let perm = derangement(joint.nrows(), rng).expect("batch of at least two");
    let mut out = joint.clone();
    for (k, &p) in perm.iter().enumerate() {
        out[[k, 1]] = joint[[p, 1]];
    }
    out
}

/// Trains a statistic network by bound ascent on correlated Gaussian
/// batches, then evaluates the bound on fresh samples.
pub fn trained_gaussian_bound(rho: f64, steps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = StatisticNetwork::<f64>::new(0, 1, 2, &[64], 1e-3, &mut rng).expect("valid layout");
    for _ in 0..steps {
        let joint = correlated_pairs(512, rho, &mut rng);
        let marginal = shuffled(&joint, &mut rng);
        t.ascent_step(joint.view(), marginal.view()).expect("finite bound");
    }
    let joint = correlated_pairs(100_000, rho, &mut rng);
    let marginal = shuffled(&joint, &mut rng);
    let js = t.scores(joint.view()).expect("scores");
    let ms = t.scores(marginal.view()).expect("scores");
    dv_from_scores(&js, &ms).expect("non-empty")
}

/// A configuration small enough for contract tests: short episodes, small
/// networks and updates from the first full batch on.
pub fn small_config(task: TaskKind, agents: usize, episodes: usize, out: &Path) -> TrainConfig {
    TrainConfig {
        task,
        agents,
        episodes,
        max_steps: 25,
        batch_size: 32,
        warmup: 64,
        buffer_capacity: 2000,
        update_every: 5,
        mc_samples: 8,
        hidden: vec![16, 16],
        causal_hidden: vec![16],
        out: out.to_path_buf(),
        wall_clock: false,
        ..TrainConfig::default()
    }
}

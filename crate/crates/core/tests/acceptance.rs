//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit status
//! if any criterion fails.
//!
//! Criterion 6 trains eight full navigation runs and dominates the runtime.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scic::harness::{
    run_alpha_sweep, run_probe, run_training, trailing_mean, Algorithm, Behavior, ProbeConfig,
    TaskKind, Trainer, TrainConfig, ALPHA_SWEEP, METRICS_FILE,
};
use scic::maddpg::ActionMode;
use scic::nn::{finite_diff_check, Activation, DenseNet};

type Outcome = Result<(bool, String), String>;

fn criterion_1() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (rho, tol, seed) in [(0.0, 0.05, 1), (0.5, 0.05, 2), (0.9, 0.15, 3)] {
        let start = Instant::now();
        let bound = common::trained_gaussian_bound(rho, 3000, seed);
        let secs = start.elapsed().as_secs_f64();
        let truth = common::gaussian_mi(rho);
        let pass = (bound - truth).abs() <= tol && secs < 180.0;
        ok &= pass;
        parts.push(format!("rho={rho}: {bound:.4} vs {truth:.4} (tol {tol}, {secs:.1}s)"));
    }
    Ok((ok, parts.join("; ")))
}

fn probe(coupled: bool, behavior: Behavior, mode: ActionMode, seed: u64) -> Result<f64, String> {
    let cfg = ProbeConfig {
        coupled,
        behavior,
        action_mode: mode,
        seed,
        ..ProbeConfig::default()
    };
    run_probe(&cfg).map(|r| r.mean_ci).map_err(|e| e.to_string())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let coupled = probe(true, Behavior::Uniform, ActionMode::Intervention, 0)?;
    let decoupled = probe(false, Behavior::Uniform, ActionMode::Intervention, 0)?;
    let secs = start.elapsed().as_secs_f64();
    let ok = coupled >= 0.2 && decoupled <= 0.05 && coupled >= 5.0 * decoupled && secs < 300.0;
    Ok((
        ok,
        format!("coupled {coupled:.4} nats, decoupled {decoupled:.4} nats, {secs:.1}s"),
    ))
}

fn criterion_3() -> Outcome {
    let behavior = Behavior::Concentrated {
        mean: 0.8,
        std: 0.05,
        uniform_fraction: 0.1,
    };
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..4 {
        let sep = |mode| -> Result<f64, String> {
            Ok(probe(true, behavior, mode, seed)? - probe(false, behavior, mode, seed)?)
        };
        let intervention = sep(ActionMode::Intervention)?;
        let replay = sep(ActionMode::Replay)?;
        if intervention >= replay {
            wins += 1;
        }
        parts.push(format!("seed {seed}: {intervention:.4} vs {replay:.4}"));
    }
    Ok((wins == 4, format!("{wins}/4 seeds, intervention vs replay separation: {}", parts.join("; "))))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let activations = [Activation::Relu, Activation::Tanh, Activation::Identity];
    let mut passed = 0;
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let depth = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(1..=6)];
        for _ in 0..depth {
            sizes.push(rng.random_range(1..=10));
        }
        sizes.push(rng.random_range(1..=4));
        let hidden = activations[rng.random_range(0..2)];
        let output = activations[rng.random_range(0..3)];
        let net = DenseNet::<f64>::new_uniform(&sizes, hidden, output, &mut rng).map_err(|e| e.to_string())?;
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let report = finite_diff_check(&net, &input, 1e-4).map_err(|e| e.to_string())?;
        worst = worst.max(report.max_rel_error);
        if report.passed {
            passed += 1;
        }
    }
    Ok((passed == 20, format!("{passed}/20 networks, worst relative error {worst:.2e}")))
}

fn navigation(out: &std::path::Path) -> TrainConfig {
    TrainConfig {
        task: TaskKind::Navigation,
        agents: 3,
        out: out.to_path_buf(),
        wall_clock: false,
        ..TrainConfig::default()
    }
}

fn criterion_5(dir: &std::path::Path) -> Outcome {
    let mut scic = navigation(&dir.join("scic"));
    scic.alpha = 0.0;
    scic.episodes = 50;
    let mut plain = scic.clone();
    plain.algorithm = Algorithm::Maddpg;
    plain.out = dir.join("maddpg");
    let a = run_training(&scic).map_err(|e| e.to_string())?.returns();
    let b = run_training(&plain).map_err(|e| e.to_string())?.returns();
    let same = a.len() == 50 && b.len() == 50 && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    Ok((same, format!("{} vs {} episodes compared bitwise", a.len(), b.len())))
}

fn criterion_6(dir: &std::path::Path) -> Outcome {
    let mut improved = 0;
    let mut within_budget = true;
    let mut parts = Vec::new();
    for seed in 0..4 {
        let mut cfg = navigation(&dir.join(format!("scic_{seed}")));
        cfg.seed = seed;
        cfg.episodes = 2000;
        cfg.alpha = 0.01;
        let start = Instant::now();
        let scic = run_training(&cfg).map_err(|e| e.to_string())?.returns();
        let secs = start.elapsed().as_secs_f64();
        within_budget &= secs < 1800.0;
        let first = trailing_mean(&scic[..100], 100);
        let last = trailing_mean(&scic, 100);
        if last > first {
            improved += 1;
        }
        let mut base = cfg.clone();
        base.algorithm = Algorithm::Maddpg;
        base.out = dir.join(format!("maddpg_{seed}"));
        let maddpg = run_training(&base).map_err(|e| e.to_string())?.returns();
        parts.push(format!(
            "seed {seed}: scic first {first:.2} final {last:.2} ({secs:.0}s) | maddpg final {:.2}",
            trailing_mean(&maddpg, 100)
        ));
    }
    Ok((
        improved >= 3 && within_budget,
        format!("{improved}/4 seeds improved; {}", parts.join("; ")),
    ))
}

fn criterion_7(dir: &std::path::Path) -> Outcome {
    let cfg = common::small_config(TaskKind::Navigation, 3, 10, dir);
    let summary = run_alpha_sweep(&cfg).map_err(|e| e.to_string())?;
    let alphas: Vec<f64> = summary.arms.iter().map(|a| a.alpha).collect();
    let ranked: Vec<f64> = summary
        .ranking
        .iter()
        .map(|&k| summary.arms[k].final_mean_return)
        .collect();
    let ordered = summary.ranking.len() == 5 && ranked.windows(2).all(|w| w[0] >= w[1]);
    let table = dir.join("sweep_summary.csv").exists();
    let zero = summary.zero_arm_matches_baseline();
    Ok((
        alphas == ALPHA_SWEEP.to_vec() && ordered && table && zero,
        format!("arms {alphas:?}, ranked {ordered}, summary file {table}, alpha=0 equals baseline {zero}"),
    ))
}

fn criterion_8(dir: &std::path::Path) -> Outcome {
    let csv = |name: &str| -> Result<Vec<u8>, String> {
        let cfg = common::small_config(TaskKind::Navigation, 3, 20, &dir.join(name));
        run_training(&cfg).map_err(|e| e.to_string())?;
        fs::read(dir.join(name).join(METRICS_FILE)).map_err(|e| e.to_string())
    };
    let identical = csv("first")? == csv("second")?;

    let cfg = common::small_config(TaskKind::Navigation, 3, 20, &dir.join("resume"));
    let err = |e: scic::harness::HarnessError| e.to_string();
    let straight = Trainer::new(cfg.clone()).map_err(err)?.train(20, None).map_err(err)?;
    let mut first = Trainer::new(cfg.clone()).map_err(err)?;
    let mut rows = first.train(10, None).map_err(err)?;
    let path = dir.join("resume.bin");
    first.save(&path).map_err(err)?;
    let mut resumed = Trainer::load(cfg, &path).map_err(err)?;
    rows.extend(resumed.train(10, None).map_err(err)?);
    let resumes = rows == straight;
    Ok((
        identical && resumes,
        format!("metrics byte-identical {identical}, resume over 10 episodes bitwise {resumes}"),
    ))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let sub = |name: &str| dir.path().join(name);
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(move || criterion_5(&sub("c5")))),
        (6, Box::new(move || criterion_6(&sub("c6")))),
        (7, Box::new(move || criterion_7(&sub("c7")))),
        (8, Box::new(move || criterion_8(&sub("c8")))),
    ];
    let mut failures = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {n}: {verdict} [{:.1}s] {detail}", start.elapsed().as_secs_f64());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}

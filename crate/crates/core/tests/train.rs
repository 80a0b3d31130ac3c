mod common;

use std::path::Path;

use atomlab::agent::{sample_index, softmax};
use atomlab::atoms::AtomsSettings;
use atomlab::env::{EnvConfig, GameVariant};
use atomlab::net::{load_checkpoint, Network, Volume};
use atomlab::train::{
    checkpoint_path, collect_rollout, compute_returns_advantages, latest_saved_step, train, TrainConfig, TrainOptions,
    VecEnv, ATOMS_SERIES_FILE, EVAL_FILE, TRAIN_LOG_FILE,
};
use atomlab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Discounted sums written out per transition: walk forward to the end of
/// the episode or the batch, bootstrapping only in the latter case.
fn brute_returns(rewards: &[f64], dones: &[bool], bootstrap: &[f64], n_envs: usize, gamma: f64) -> Vec<f64> {
    let n_steps = rewards.len() / n_envs;
    let mut out = vec![0.0; rewards.len()];
    for e in 0..n_envs {
        for t in 0..n_steps {
            let mut g = 0.0;
            let mut discount = 1.0;
            let mut ended = false;
            for k in t..n_steps {
                let i = k * n_envs + e;
                g += discount * rewards[i];
                discount *= gamma;
                if dones[i] {
                    ended = true;
                    break;
                }
            }
            if !ended {
                g += discount * bootstrap[e];
            }
            out[t * n_envs + e] = g;
        }
    }
    out
}

#[test]
fn three_step_terminal_chain() {
    let (r, a) = compute_returns_advantages(&[0.0, 0.0, 1.0], &[false, false, true], &[0.0f64; 3], &[9.0], 1, 0.99);
    for (x, y) in r.iter().zip([0.9801, 0.99, 1.0]) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(r, a);
}

proptest! {
    #[test]
    fn returns_match_forward_sums(
        n_envs in 1usize..5,
        n_steps in 1usize..8,
        seed in any::<u64>(),
        gamma in 0.5f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = n_envs * n_steps;
        let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-2..=2) as f64).collect();
        let dones: Vec<bool> = (0..len).map(|_| rng.random_bool(0.2)).collect();
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bootstrap: Vec<f64> = (0..n_envs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (r, a) = compute_returns_advantages(&rewards, &dones, &values, &bootstrap, n_envs, gamma);
        let want = brute_returns(&rewards, &dones, &bootstrap, n_envs, gamma);
        for i in 0..len {
            prop_assert!((r[i] - want[i]).abs() < 1e-12);
            prop_assert!((a[i] - (want[i] - values[i])).abs() < 1e-12);
        }
    }
}

fn small_arch() -> atomlab::net::NetworkArch {
    common::arch(Volume { channels: 4, height: 84, width: 84 }, [(4, 8, 4), (4, 4, 2), (4, 3, 1)], 16)
}

#[test]
fn rollout_has_one_transition_per_env_and_step() {
    let net = Network::<f32>::init(&small_arch(), 1).unwrap();
    let mut envs = VecEnv::new(GameVariant::V0, &EnvConfig::default(), 2, 5).unwrap();
    let before: Vec<u64> = envs.envs.iter().map(|e| e.state.frame_index).collect();
    let batch = collect_rollout(&mut envs, &net, 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(batch.len(), 10);
    assert_eq!((batch.n_envs, batch.n_steps), (2, 5));
    assert_eq!(batch.observations.len(), 10);
    assert_eq!(batch.traces.len(), 10);
    assert_eq!(batch.bootstrap.len(), 2);
    for (e, f0) in envs.envs.iter().zip(before) {
        assert_eq!(e.state.frame_index, f0 + 5);
    }
    // Stored log-probabilities belong to the recorded actions.
    for (i, t) in batch.traces.iter().enumerate() {
        let lp = atomlab::agent::log_softmax(&t.logits)[batch.actions[i]];
        assert_eq!(lp, batch.log_probs[i]);
    }
}

#[test]
fn uniform_logits_sample_each_action_a_third_of_the_time() {
    let p = softmax(&[0.0f64, 0.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 60_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[sample_index(&p, &mut rng)] += 1;
    }
    for c in counts {
        // Five standard deviations of a binomial(n, 1/3) proportion.
        assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 5.0 * (2.0 / 9.0 / n as f64).sqrt());
    }
}

/// A configuration that finishes in seconds: tiny network, truncated games,
/// light ATOMs settings.
fn quick_config() -> TrainConfig {
    TrainConfig {
        n_envs: 2,
        n_steps: 5,
        total_steps: 1200,
        eval_every: 400,
        atoms_every: 400,
        eval_episodes: 2,
        seed: 3,
        env: EnvConfig { max_episode_frames: 150, ..EnvConfig::default() },
        arch: small_arch(),
        atoms: AtomsSettings { episodes: 1, n_frames: 6, ..AtomsSettings::default() },
        ..TrainConfig::default()
    }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn measurements_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config();
    let summary = train(&config, dir.path(), &TrainOptions::default()).unwrap();
    assert_eq!(summary.step, 1200);
    assert!(!summary.halted);

    // floor(total / every) + 1 measurement points, each with a checkpoint.
    let evals = read(dir.path(), EVAL_FILE);
    assert_eq!(evals.lines().count(), 1 + 4);
    for step in [0, 400, 800, 1200] {
        assert!(checkpoint_path(dir.path(), step).exists());
    }
    assert_eq!(latest_saved_step(dir.path()).unwrap(), Some(1200));
    let series = read(dir.path(), ATOMS_SERIES_FILE);
    let steps: std::collections::BTreeSet<&str> = series.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(steps.into_iter().collect::<Vec<_>>(), vec!["0", "1200", "400", "800"]);

    // One log row per update; steps advance by n_envs * n_steps.
    let log = read(dir.path(), TRAIN_LOG_FILE);
    let mut rdr = csv::Reader::from_reader(log.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 120);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[col("step")].parse::<u64>().unwrap(), 10 * (i as u64 + 1));
        let h: f64 = row[col("entropy")].parse().unwrap();
        assert!((0.0..=3f64.ln() + 1e-12).contains(&h), "entropy {h}");
        assert!(row[col("grad_norm")].parse::<f64>().unwrap().is_finite());
    }

    let (net, _) = load_checkpoint::<f32>(&checkpoint_path(dir.path(), 1200)).unwrap();
    assert_eq!(net, summary.net);
}

#[test]
fn seeded_runs_are_identical() {
    let config = TrainConfig { total_steps: 400, measure_atoms: false, ..quick_config() };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = train(&config, a.path(), &TrainOptions::default()).unwrap();
    let sb = train(&config, b.path(), &TrainOptions::default()).unwrap();
    assert_eq!(sa.net, sb.net);
    for f in [TRAIN_LOG_FILE, EVAL_FILE] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
    }
    let other = TrainConfig { seed: 4, ..config };
    let c = tempfile::tempdir().unwrap();
    let sc = train(&other, c.path(), &TrainOptions::default()).unwrap();
    assert_ne!(sa.net, sc.net);
}

#[test]
fn resume_reproduces_the_uninterrupted_run() {
    let config = quick_config();
    let whole = tempfile::tempdir().unwrap();
    train(&config, whole.path(), &TrainOptions::default()).unwrap();

    let split = tempfile::tempdir().unwrap();
    let first = train(&config, split.path(), &TrainOptions { halt_at: Some(400), ..Default::default() }).unwrap();
    assert!(first.halted);
    assert_eq!(first.step, 400);
    assert!(!checkpoint_path(split.path(), 800).exists());
    let second = train(&config, split.path(), &TrainOptions { resume: true, ..Default::default() }).unwrap();
    assert_eq!(second.step, 1200);

    for f in [TRAIN_LOG_FILE, EVAL_FILE, ATOMS_SERIES_FILE] {
        assert_eq!(read(whole.path(), f), read(split.path(), f), "{f} differs");
    }
    let bytes = |d: &Path| std::fs::read(checkpoint_path(d, 1200)).unwrap();
    assert_eq!(bytes(whole.path()), bytes(split.path()));
}

#[test]
fn resume_after_halting_between_measurements_discards_the_tail() {
    let config = TrainConfig { measure_atoms: false, ..quick_config() };
    let whole = tempfile::tempdir().unwrap();
    train(&config, whole.path(), &TrainOptions::default()).unwrap();
    let split = tempfile::tempdir().unwrap();
    // Stops at 600, past the 400 measurement; the 400..600 updates are redone.
    train(&config, split.path(), &TrainOptions { halt_at: Some(600), ..Default::default() }).unwrap();
    train(&config, split.path(), &TrainOptions { resume: true, ..Default::default() }).unwrap();
    for f in [TRAIN_LOG_FILE, EVAL_FILE] {
        assert_eq!(read(whole.path(), f), read(split.path(), f));
    }
}

#[test]
fn resume_rejects_a_changed_configuration() {
    let config = TrainConfig { measure_atoms: false, ..quick_config() };
    let dir = tempfile::tempdir().unwrap();
    train(&config, dir.path(), &TrainOptions { halt_at: Some(400), ..Default::default() }).unwrap();
    let changed = TrainConfig { lr: 1e-3, ..config };
    let r = train(&changed, dir.path(), &TrainOptions { resume: true, ..Default::default() });
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn cadence_must_align_with_updates() {
    let config = TrainConfig { eval_every: 405, ..quick_config() };
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(train(&config, dir.path(), &TrainOptions::default()), Err(Error::Config(_))));
}

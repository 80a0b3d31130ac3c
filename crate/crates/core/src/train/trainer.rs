use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{a2c_update, collect_rollout, compute_returns_advantages, RmsProp, TrainConfig, VecEnv, VecEnvSnapshot};
use crate::agent::{choose, PolicyMode};
use crate::atoms::{compute_profiles, record_input_set, AtomsReport};
use crate::env::{Action, EnvConfig, GameVariant, Observation, PongEnv};
use crate::error::{Error, Result};
use crate::io::{write_atomic, write_csv};
use crate::net::{load_checkpoint, save_checkpoint, Network};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

pub const TRAIN_SCHEMA_VERSION: u32 = 1;
const RECENT_EPISODES: usize = 100;
const EVAL_STREAM: u64 = 0xE7A1;
const ATOMS_STREAM: u64 = 0xA705;
const ROLLOUT_STREAM: u64 = 0x5011;
const ENV_STREAM: u64 = 0xE4F;

pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const ATOMS_SERIES_FILE: &str = "atoms_series.csv";
pub const EVAL_FILE: &str = "evaluations.csv";
pub const CONFIG_FILE: &str = "train_config.json";

/// One row per update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub schema_version: u32,
    pub step: u64,
    pub update: u64,
    /// Mean score of the most recent finished games, if any.
    pub mean_recent_score: Option<f64>,
    pub episodes_finished: u64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub schema_version: u32,
    pub step: u64,
    pub episodes: usize,
    pub score_mean: f64,
    pub score_sd: f64,
}

/// One metric value of an ATOMs measurement during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomsSeriesRow {
    pub schema_version: u32,
    pub env_step: u64,
    pub metric: String,
    pub key: String,
    pub value: f64,
    pub eval_score_mean: Option<f64>,
    pub eval_score_sd: Option<f64>,
}

/// Everything besides weights and optimizer state needed to continue a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainerState {
    pub step: u64,
    pub updates: u64,
    pub episodes_finished: u64,
    pub recent_scores: VecDeque<f64>,
    pub envs: VecEnvSnapshot,
    pub rng: ChaCha8Rng,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Continue from the latest saved measurement in the output directory.
    pub resume: bool,
    /// Stop right after the first measurement at or beyond this step.
    pub halt_at: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub step: u64,
    pub halted: bool,
    pub evaluations: Vec<EvalRow>,
    pub last_atoms: Option<AtomsReport>,
    pub net: Network<f32>,
}

/// Outcome of a batch of evaluation games.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Plays `episodes` games in lock-step and reports their final scores.
pub fn evaluate<T: Scalar>(
    net: &Network<T>,
    variant: GameVariant,
    config: &EnvConfig,
    episodes: usize,
    policy: PolicyMode,
    seed: u64,
) -> Result<Evaluation> {
    let mut envs = (0..episodes)
        .map(|i| PongEnv::new(variant, config, derive_seed(seed, 2 * i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..episodes).map(|i| ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * i as u64 + 1))).collect();
    let mut scores = vec![0.0; episodes];
    let mut live: Vec<usize> = (0..episodes).collect();
    while !live.is_empty() {
        let obs: Vec<Observation> = live.iter().map(|&i| envs[i].observation()).collect();
        let refs: Vec<&Observation> = obs.iter().collect();
        let traces = net.forward_batch(&refs, true)?;
        let mut still = Vec::with_capacity(live.len());
        for (&i, t) in live.iter().zip(&traces) {
            let a = Action::from_index(choose(&t.logits, policy, &mut rngs[i])).expect("three logits");
            let r = envs[i].step(a)?;
            scores[i] += r.reward as f64;
            if !r.done {
                still.push(i);
            }
        }
        live = still;
    }
    let n = episodes.max(1) as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n).sqrt();
    Ok(Evaluation { scores, mean, sd })
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("checkpoint-{step:09}.bin"))
}

pub fn optimizer_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("optim-{step:09}.bin"))
}

pub fn state_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("state-{step:09}.json"))
}

/// Largest step with a saved trainer state in `dir`.
pub fn latest_saved_step(dir: &Path) -> Result<Option<u64>> {
    if !dir.exists() {
        return Ok(None);
    }
    let mut best = None;
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(step) = name.strip_prefix("state-").and_then(|s| s.strip_suffix(".json")).and_then(|s| s.parse::<u64>().ok()) {
            best = best.max(Some(step));
        }
    }
    Ok(best)
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

struct Run<'a> {
    config: &'a TrainConfig,
    dir: &'a Path,
    net: Network<f32>,
    optimizer: RmsProp<f32>,
    envs: VecEnv,
    rng: ChaCha8Rng,
    step: u64,
    updates: u64,
    episodes_finished: u64,
    recent: VecDeque<f64>,
    log: Vec<TrainLogRow>,
    evals: Vec<EvalRow>,
    series: Vec<AtomsSeriesRow>,
    last_atoms: Option<AtomsReport>,
}

impl Run<'_> {
    fn measure(&mut self) -> Result<()> {
        let c = self.config;
        let env_config = c.env_config();
        let mut eval = None;
        if self.step % c.eval_every == 0 {
            let e = evaluate(&self.net, c.variant, &env_config, c.eval_episodes, PolicyMode::Sampled, derive_seed(derive_seed(c.seed, EVAL_STREAM), self.step))?;
            self.evals.push(EvalRow { schema_version: TRAIN_SCHEMA_VERSION, step: self.step, episodes: e.scores.len(), score_mean: e.mean, score_sd: e.sd });
            eval = Some(e);
        }
        if c.measure_atoms && self.step % c.atoms_every == 0 {
            let s = &c.atoms;
            let seed = derive_seed(derive_seed(c.seed, ATOMS_STREAM), self.step);
            let inputs = record_input_set(&self.net, c.variant, &env_config, s.episodes, s.n_frames, s.policy, seed)?;
            let profiles = compute_profiles(&self.net.cast::<f64>(), &inputs, s.fraction, s.relevance_init)?;
            let report = AtomsReport::from_profiles(c.variant, &profiles, s.alpha, false);
            for r in report.rows() {
                self.series.push(AtomsSeriesRow {
                    schema_version: TRAIN_SCHEMA_VERSION,
                    env_step: self.step,
                    metric: r.metric,
                    key: r.key,
                    value: r.value,
                    eval_score_mean: eval.as_ref().map(|e| e.mean),
                    eval_score_sd: eval.as_ref().map(|e| e.sd),
                });
            }
            self.last_atoms = Some(report);
        }
        self.save()
    }

    fn save(&self) -> Result<()> {
        let mut meta = BTreeMap::new();
        meta.insert("step".to_string(), self.step.to_string());
        meta.insert("variant".to_string(), self.config.variant.to_string());
        save_checkpoint(&self.net, &checkpoint_path(self.dir, self.step), &meta)?;
        let moments = Network::from_params(self.net.arch(), self.optimizer.square_avg.clone())?;
        save_checkpoint(&moments, &optimizer_path(self.dir, self.step), &BTreeMap::new())?;
        let state = TrainerState {
            step: self.step,
            updates: self.updates,
            episodes_finished: self.episodes_finished,
            recent_scores: self.recent.clone(),
            envs: self.envs.snapshot(),
            rng: self.rng.clone(),
        };
        write_atomic(&state_path(self.dir, self.step), serde_json::to_string(&state)?.as_bytes())?;
        self.write_tables()
    }

    fn write_tables(&self) -> Result<()> {
        write_csv(&self.dir.join(TRAIN_LOG_FILE), &self.log)?;
        write_csv(&self.dir.join(EVAL_FILE), &self.evals)?;
        write_csv(&self.dir.join(ATOMS_SERIES_FILE), &self.series)
    }

    fn update(&mut self) -> Result<()> {
        let c = self.config;
        let batch = collect_rollout(&mut self.envs, &self.net, c.n_steps, &mut self.rng)?;
        let (returns, advantages) = compute_returns_advantages(&batch.rewards, &batch.dones, &batch.values, &batch.bootstrap, batch.n_envs, c.gamma);
        let losses = a2c_update(&mut self.net, &mut self.optimizer, &batch, &returns, &advantages, c)?;
        for e in &batch.finished {
            self.recent.push_back(e.score);
            if self.recent.len() > RECENT_EPISODES {
                self.recent.pop_front();
            }
        }
        self.episodes_finished += batch.finished.len() as u64;
        self.updates += 1;
        self.step += c.steps_per_update();
        let mean_recent_score = (!self.recent.is_empty()).then(|| self.recent.iter().sum::<f64>() / self.recent.len() as f64);
        self.log.push(TrainLogRow {
            schema_version: TRAIN_SCHEMA_VERSION,
            step: self.step,
            update: self.updates,
            mean_recent_score,
            episodes_finished: self.episodes_finished,
            policy_loss: losses.policy,
            value_loss: losses.value,
            entropy: losses.entropy,
            grad_norm: losses.grad_norm,
        });
        Ok(())
    }
}

/// Runs the training loop, measuring at step 0 and at every multiple of
/// the evaluation and ATOMs cadences. All outputs go to `out_dir`.
pub fn train(config: &TrainConfig, out_dir: &Path, options: &TrainOptions) -> Result<TrainSummary> {
    config.validate()?;
    let spu = config.steps_per_update();
    for every in [config.eval_every, config.atoms_every] {
        if every % spu != 0 {
            return Err(Error::Config(format!("cadence {every} is not a multiple of the {spu} steps per update")));
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let config_json = serde_json::to_string_pretty(config)?;
    let config_path = out_dir.join(CONFIG_FILE);

    let resume_step = if options.resume { latest_saved_step(out_dir)? } else { None };
    let mut run = match resume_step {
        Some(step) => {
            let saved: TrainConfig = serde_json::from_slice(&std::fs::read(&config_path)?)?;
            if &saved != config {
                return Err(Error::Config("resume requires the configuration of the interrupted run".into()));
            }
            let (net, _) = load_checkpoint::<f32>(&checkpoint_path(out_dir, step))?;
            let (moments, _) = load_checkpoint::<f32>(&optimizer_path(out_dir, step))?;
            let mut optimizer = RmsProp::new(&net, config.lr, config.rms_decay, config.rms_eps);
            optimizer.square_avg = moments.params().to_vec();
            let state: TrainerState = serde_json::from_slice(&std::fs::read(state_path(out_dir, step))?)?;
            let mut log: Vec<TrainLogRow> = read_csv(&out_dir.join(TRAIN_LOG_FILE))?;
            log.retain(|r| r.step <= step);
            let mut evals: Vec<EvalRow> = read_csv(&out_dir.join(EVAL_FILE))?;
            evals.retain(|r| r.step <= step);
            let mut series: Vec<AtomsSeriesRow> = read_csv(&out_dir.join(ATOMS_SERIES_FILE))?;
            series.retain(|r| r.env_step <= step);
            Run {
                config,
                dir: out_dir,
                net,
                optimizer,
                envs: VecEnv::restore(state.envs),
                rng: state.rng,
                step: state.step,
                updates: state.updates,
                episodes_finished: state.episodes_finished,
                recent: state.recent_scores,
                log,
                evals,
                series,
                last_atoms: None,
            }
        }
        None => {
            write_atomic(&config_path, config_json.as_bytes())?;
            let net = Network::<f32>::init(&config.arch, config.seed)?;
            let optimizer = RmsProp::new(&net, config.lr, config.rms_decay, config.rms_eps);
            let envs = VecEnv::new(config.variant, &config.env_config(), config.n_envs, derive_seed(config.seed, ENV_STREAM))?;
            let mut run = Run {
                config,
                dir: out_dir,
                net,
                optimizer,
                envs,
                rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, ROLLOUT_STREAM)),
                step: 0,
                updates: 0,
                episodes_finished: 0,
                recent: VecDeque::new(),
                log: Vec::new(),
                evals: Vec::new(),
                series: Vec::new(),
                last_atoms: None,
            };
            run.measure()?;
            run
        }
    };

    let mut halted = false;
    while run.step < config.total_steps {
        if let Some(h) = options.halt_at {
            if run.step >= h {
                halted = true;
                break;
            }
        }
        run.update()?;
        if run.step % config.eval_every == 0 || run.step % config.atoms_every == 0 {
            run.measure()?;
        }
    }
    if !halted && !checkpoint_path(out_dir, run.step).exists() {
        run.save()?;
    }
    Ok(TrainSummary { step: run.step, halted, evaluations: run.evals, last_atoms: run.last_atoms, net: run.net })
}

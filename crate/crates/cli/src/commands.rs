use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use atomlab::agent::{NetworkAgent, PolicyMode};
use atomlab::atoms::{compute_profiles, record_input_set, AtomsReport};
use atomlab::behavior::{
    generate_trajectories, run_discrimination_test, score_grid_test, standardize_and_cluster, test_variant, DiscriminationResult, Hit,
    InteractionMatrix, TrialRow,
};
use atomlab::env::{GameVariant, ObjectId};
use atomlab::io::{csv_bytes, write_atomic, write_csv};
use atomlab::net::{load_checkpoint, Network};
use atomlab::seed::derive_seed;
use atomlab::train::{train as run_training, TrainOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::Common;

pub const SCHEMA_VERSION: u32 = 1;
const TRAJECTORY_STREAM: u64 = 0x7AB;
const AGENT_STREAM: u64 = 0xA6E;

/// Invalid combination of arguments.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn setup(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.train.seed = seed;
    }
    config.validate()?;
    let out = common.out.clone().unwrap_or_else(|| config.out_dir.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok((config, out))
}

fn load_agent(path: &Path, fallback: GameVariant) -> Result<(Network<f32>, GameVariant)> {
    let (net, meta) = load_checkpoint::<f32>(path).with_context(|| format!("loading {}", path.display()))?;
    let variant = match meta.get("variant") {
        Some(v) => v.parse::<GameVariant>().map_err(|e| anyhow::anyhow!("variant recorded in {}: {e}", path.display()))?,
        None => fallback,
    };
    Ok((net, variant))
}

pub fn train(common: &Common, resume: bool, halt_at: Option<u64>) -> Result<()> {
    let (config, out) = setup(common)?;
    let summary = run_training(&config.train, &out, &TrainOptions { resume, halt_at })?;
    for e in &summary.evaluations {
        println!("step {:>9}  score {:>7.2} ± {:.2}", e.step, e.score_mean, e.score_sd);
    }
    if summary.halted {
        println!("halted at step {}", summary.step);
    }
    Ok(())
}

fn measure(net: &Network<f32>, variant: GameVariant, config: &ExperimentConfig, seed: u64, sweep: bool) -> Result<AtomsReport> {
    let s = &config.train.atoms;
    let env = config.train.env_config();
    let inputs = record_input_set(net, variant, &env, s.episodes, s.n_frames, s.policy, seed)?;
    let profiles = compute_profiles(&net.cast::<f64>(), &inputs, s.fraction, s.relevance_init)?;
    Ok(AtomsReport::from_profiles(variant, &profiles, s.alpha, sweep))
}

pub fn atoms(common: &Common, checkpoint: &Path, sweep: bool) -> Result<()> {
    let (config, out) = setup(common)?;
    let (net, variant) = load_agent(checkpoint, config.train.variant)?;
    let report = measure(&net, variant, &config, config.train.seed, sweep)?;
    let name = if sweep { "atoms_sweep.csv" } else { "atoms.csv" };
    write_csv(&out.join(name), &report.rows())?;
    for (o, h) in &report.h {
        println!("h({}) = {h:.6}", o.name());
    }
    println!("inputs used {}, degenerate {}", report.n_inputs, report.degenerate);
    Ok(())
}

#[derive(Serialize)]
struct ResultRow {
    schema_version: u32,
    checkpoint: String,
    kind: &'static str,
    trial: Option<usize>,
    hit: Option<Hit>,
    n_b1: Option<usize>,
    n_b2: Option<usize>,
    n_neither: Option<usize>,
    relative_interaction: Option<f64>,
}

fn result_rows(name: &str, r: &DiscriminationResult) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = r
        .hits
        .iter()
        .enumerate()
        .map(|(i, &hit)| ResultRow {
            schema_version: SCHEMA_VERSION,
            checkpoint: name.into(),
            kind: "trial",
            trial: Some(i),
            hit: Some(hit),
            n_b1: None,
            n_b2: None,
            n_neither: None,
            relative_interaction: None,
        })
        .collect();
    rows.push(ResultRow {
        schema_version: SCHEMA_VERSION,
        checkpoint: name.into(),
        kind: "aggregate",
        trial: None,
        hit: None,
        n_b1: Some(r.n_b1),
        n_b2: Some(r.n_b2),
        n_neither: Some(r.n_neither),
        relative_interaction: r.relative_interaction,
    });
    rows
}

#[derive(Serialize)]
struct PairingRow {
    schema_version: u32,
    checkpoint: String,
    relative_hierarchy_b1: Option<f64>,
    relative_interaction: Option<f64>,
}

fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
    Ok(())
}

pub fn behavior(common: &Common, checkpoints: &[PathBuf], score_grid: bool, policy: Option<PolicyMode>, pairing: bool) -> Result<()> {
    let (config, out) = setup(common)?;
    let b = &config.behavior;
    let policy = policy.unwrap_or(b.policy);
    let seed = config.train.seed;
    let env = config.train.env_config();

    let agents = checkpoints.iter().map(|p| load_agent(p, config.train.variant)).collect::<Result<Vec<_>>>()?;
    if score_grid {
        if let Some((_, v)) = agents.iter().find(|(_, v)| *v != GameVariant::V2) {
            return Err(UsageError(format!("--score-grid needs agents trained on v2, got {v}")).into());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TRAJECTORY_STREAM));
    let specs = generate_trajectories(b.n_trajectories, &mut rng, env.paddle_height_px, b.max_attempts)?;
    write_csv(&out.join("trajectories.csv"), &specs)?;

    let mut results = Vec::new();
    let mut pairs = Vec::new();
    let mut grids = Vec::new();
    for (i, ((net, trained), path)) in agents.iter().zip(checkpoints).enumerate() {
        let name = path.display().to_string();
        let variant = test_variant(*trained);
        let agent_rng = || ChaCha8Rng::seed_from_u64(derive_seed(seed, AGENT_STREAM));
        let mut agent = NetworkAgent::new(net, policy, agent_rng());
        let r = run_discrimination_test(&mut agent, &specs, variant, &env, None)?;
        let trials: Vec<TrialRow> = specs
            .iter()
            .zip(&r.hits)
            .enumerate()
            .map(|(t, (s, &hit))| TrialRow::new(SCHEMA_VERSION, t, s, hit))
            .collect();
        write_csv(&out.join(format!("trials-{i}.csv")), &trials)?;
        println!("{name}: B1 {} B2 {} neither {} relative interaction {:?}", r.n_b1, r.n_b2, r.n_neither, r.relative_interaction);
        results.extend(result_rows(&name, &r));

        if pairing && trained.b2_present() {
            let report = measure(net, *trained, &config, seed, false)?;
            let (h1, h2) = (report.h_of(ObjectId::B1).unwrap_or(0.0), report.h_of(ObjectId::B2).unwrap_or(0.0));
            pairs.push(PairingRow {
                schema_version: SCHEMA_VERSION,
                checkpoint: name.clone(),
                relative_hierarchy_b1: (h1 + h2 > 0.0).then(|| h1 / (h1 + h2)),
                relative_interaction: r.relative_interaction,
            });
        }
        if score_grid {
            let mut agent = NetworkAgent::new(net, policy, agent_rng());
            let grid = score_grid_test(&mut agent, &specs, variant, &env)?;
            write_rows(&out.join(format!("score-grid-{i}.csv")), &grid.csv_rows())?;
            grids.push(grid);
        }
    }
    write_atomic(&out.join("behavior.csv"), &csv_bytes(&results)?)?;
    if pairing {
        write_csv(&out.join("pairing.csv"), &pairs)?;
    }
    if score_grid && grids.len() >= 2 {
        cluster(&out, &grids, checkpoints, b.cut_height)?;
    }
    Ok(())
}

fn cluster(out: &Path, grids: &[InteractionMatrix], checkpoints: &[PathBuf], cut: f64) -> Result<()> {
    let c = standardize_and_cluster(grids, cut)?;
    write_rows(&out.join("grid-distances.csv"), &c.distances.csv_rows())?;
    write_atomic(&out.join("merge-tree.json"), serde_json::to_string_pretty(&c.tree)?.as_bytes())?;
    #[derive(Serialize)]
    struct LabelRow {
        schema_version: u32,
        checkpoint: String,
        cluster: Option<usize>,
    }
    let mut labels: BTreeMap<usize, usize> = BTreeMap::new();
    for (leaf, &agent) in c.used.iter().enumerate() {
        labels.insert(agent, c.labels[leaf]);
    }
    let rows: Vec<LabelRow> = checkpoints
        .iter()
        .enumerate()
        .map(|(i, p)| LabelRow { schema_version: SCHEMA_VERSION, checkpoint: p.display().to_string(), cluster: labels.get(&i).copied() })
        .collect();
    write_csv(&out.join("clusters.csv"), &rows)?;
    for &e in &c.excluded {
        eprintln!("excluded {} from clustering: constant interaction matrix", checkpoints[e].display());
    }
    Ok(())
}

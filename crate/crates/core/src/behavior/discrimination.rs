use serde::{Deserialize, Serialize};

use super::TrajectorySpec;
use crate::agent::Agent;
use crate::env::geometry::AGENT_FACE;
use crate::env::{create_env, set_state, Ball, EnvConfig, EnvState, GameVariant, PongEnv, ScoredSide, StateOverrides, BALL_SIZE};
use crate::error::{Error, Result};

pub const GRID_OPPONENT_SCORES: usize = 21;
pub const GRID_AGENT_SCORES: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hit {
    B1,
    B2,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationResult {
    pub hits: Vec<Hit>,
    pub n_b1: usize,
    pub n_b2: usize,
    pub n_neither: usize,
    /// `n_b1 / (n_b1 + n_b2)`, undefined when no ball was hit.
    pub relative_interaction: Option<f64>,
}

impl DiscriminationResult {
    pub fn from_hits(hits: Vec<Hit>) -> Self {
        let count = |h: Hit| hits.iter().filter(|&&x| x == h).count();
        let (n_b1, n_b2, n_neither) = (count(Hit::B1), count(Hit::B2), count(Hit::Neither));
        let relative_interaction = (n_b1 + n_b2 > 0).then(|| n_b1 as f64 / (n_b1 + n_b2) as f64);
        DiscriminationResult { hits, n_b1, n_b2, n_neither, relative_interaction }
    }
}

/// One trial as a CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub schema_version: u32,
    pub trial: usize,
    pub b1_x: i32,
    pub b1_y: i32,
    pub b1_vx: i32,
    pub b1_vy: i32,
    pub b2_x: i32,
    pub b2_y: i32,
    pub b2_vx: i32,
    pub b2_vy: i32,
    pub arrival_frame: u32,
    pub hit: Hit,
}

impl TrialRow {
    pub fn new(schema_version: u32, trial: usize, spec: &TrajectorySpec, hit: Hit) -> Self {
        TrialRow {
            schema_version,
            trial,
            b1_x: spec.b1_x,
            b1_y: spec.b1_y,
            b1_vx: spec.b1_vx,
            b1_vy: spec.b1_vy,
            b2_x: spec.b2_x,
            b2_y: spec.b2_y,
            b2_vx: spec.b2_vx,
            b2_vy: spec.b2_vy,
            arrival_frame: spec.arrival_frame,
            hit,
        }
    }
}

/// Environment variant in which an agent trained on `trained` is tested.
/// Single-ball agents face the second ball without its reward.
pub fn test_variant(trained: GameVariant) -> GameVariant {
    match trained {
        GameVariant::V2 => GameVariant::V2,
        _ => GameVariant::V1,
    }
}

fn arrived(ball: &Ball) -> bool {
    ball.vel.0 > 0 && ball.pos.0 + BALL_SIZE > AGENT_FACE
}

/// Plays one trial until the first ball reaches the agent's column.
pub fn run_trial(agent: &mut dyn Agent, spec: &TrajectorySpec, base: &EnvState, forced_scores: Option<(u32, u32)>) -> Result<Hit> {
    let overrides = StateOverrides {
        b1_pos: Some((spec.b1_x, spec.b1_y)),
        b1_vel: Some((spec.b1_vx, spec.b1_vy)),
        b2_pos: Some((spec.b2_x, spec.b2_y)),
        b2_vel: Some((spec.b2_vx, spec.b2_vy)),
        score_agent: forced_scores.map(|s| s.0),
        score_opponent: forced_scores.map(|s| s.1),
        ..Default::default()
    };
    let mut env = PongEnv::from_state(set_state(base, &overrides)?);
    for _ in 0..=spec.arrival_frame + 1 {
        let action = agent.act(&env.observation(), &env.state)?;
        let r = env.step(action)?;
        if r.info.b1_hit_by_agent {
            return Ok(Hit::B1);
        }
        if r.info.b2_hit_by_agent {
            return Ok(Hit::B2);
        }
        let b2_arrived = env.state.b2.as_ref().is_some_and(arrived) || r.info.b2_passed_agent;
        if arrived(&env.state.b1) || r.info.b1_scored_side != ScoredSide::None || b2_arrived || r.done {
            return Ok(Hit::Neither);
        }
    }
    Ok(Hit::Neither)
}

/// Runs every spec in `variant` with the given displayed scores
/// `(agent, opponent)`.
pub fn run_discrimination_test(
    agent: &mut dyn Agent,
    specs: &[TrajectorySpec],
    variant: GameVariant,
    config: &EnvConfig,
    forced_scores: Option<(u32, u32)>,
) -> Result<DiscriminationResult> {
    if !variant.b2_present() {
        return Err(Error::Config(format!("variant {variant} has no second ball")));
    }
    let base = create_env(variant, config, config.seed)?;
    let hits = specs.iter().map(|s| run_trial(agent, s, &base, forced_scores)).collect::<Result<Vec<_>>>()?;
    Ok(DiscriminationResult::from_hits(hits))
}

/// Relative interaction for every displayed score pair, opponent score by
/// row and agent score by column.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    pub values: Vec<Option<f64>>,
}

impl InteractionMatrix {
    pub fn get(&self, opponent: usize, agent: usize) -> Option<f64> {
        self.values[opponent * GRID_AGENT_SCORES + agent]
    }

    /// Header row of agent scores, one row per opponent score; undefined
    /// cells are empty.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![std::iter::once("opponent_score".to_string()).chain((0..GRID_AGENT_SCORES).map(|a| a.to_string())).collect()];
        for o in 0..GRID_OPPONENT_SCORES {
            let cells = (0..GRID_AGENT_SCORES).map(|a| self.get(o, a).map(|v| v.to_string()).unwrap_or_default());
            rows.push(std::iter::once(o.to_string()).chain(cells).collect());
        }
        rows
    }
}

pub fn score_grid_test(agent: &mut dyn Agent, specs: &[TrajectorySpec], variant: GameVariant, config: &EnvConfig) -> Result<InteractionMatrix> {
    let (term_agent, term_opp) = EnvConfig { variant, ..config.clone() }.terminal_scores();
    if (term_agent as usize) < GRID_AGENT_SCORES || (term_opp as usize) < GRID_OPPONENT_SCORES {
        return Err(Error::Config(format!("variant {variant} cannot display the full score grid")));
    }
    let mut values = Vec::with_capacity(GRID_OPPONENT_SCORES * GRID_AGENT_SCORES);
    for o in 0..GRID_OPPONENT_SCORES {
        for a in 0..GRID_AGENT_SCORES {
            values.push(run_discrimination_test(agent, specs, variant, config, Some((a as u32, o as u32)))?.relative_interaction);
        }
    }
    Ok(InteractionMatrix { values })
}

//! Action selection: network policies and scripted reference agents.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{arrival_at_agent, Action, EnvState, Observation, ObjectId, BALL_CENTRE_OFFSET, BALL_SIZE};
use crate::error::Result;
use crate::net::Network;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Arg-max logit, lowest index on ties.
    Greedy,
    /// Sample from the softmax over logits.
    Sampled,
}

impl FromStr for PolicyMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(PolicyMode::Greedy),
            "sampled" => Ok(PolicyMode::Sampled),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<T>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    log_softmax(logits).into_iter().map(T::exp).collect()
}

/// Entropy of the softmax distribution, in nats.
pub fn entropy<T: Scalar>(logits: &[T]) -> T {
    log_softmax(logits).into_iter().map(|lp| -lp.exp() * lp).sum()
}

pub fn greedy_index<T: Scalar>(logits: &[T]) -> usize {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from `probs`.
pub fn sample_index<T: Scalar>(probs: &[T], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.to_f64_lossy();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn choose<T: Scalar>(logits: &[T], mode: PolicyMode, rng: &mut ChaCha8Rng) -> usize {
    match mode {
        PolicyMode::Greedy => greedy_index(logits),
        PolicyMode::Sampled => sample_index(&softmax(logits), rng),
    }
}

/// Anything that picks an action from an observation. Scripted agents may
/// read the ground-truth state instead.
pub trait Agent {
    fn act(&mut self, obs: &Observation, state: &EnvState) -> Result<Action>;
}

pub struct NetworkAgent<'a, T> {
    pub net: &'a Network<T>,
    pub mode: PolicyMode,
    pub rng: ChaCha8Rng,
}

impl<'a, T: Scalar> NetworkAgent<'a, T> {
    pub fn new(net: &'a Network<T>, mode: PolicyMode, rng: ChaCha8Rng) -> Self {
        NetworkAgent { net, mode, rng }
    }
}

impl<T: Scalar> Agent for NetworkAgent<'_, T> {
    fn act(&mut self, obs: &Observation, _state: &EnvState) -> Result<Action> {
        let trace = self.net.forward(obs, true)?;
        let i = choose(&trace.logits, self.mode, &mut self.rng);
        Ok(Action::from_index(i).unwrap_or(Action::Noop))
    }
}

/// Moves the paddle centre towards one ball's centre.
#[derive(Clone, Copy, Debug)]
pub struct TrackingAgent {
    pub target: ObjectId,
}

impl Agent for TrackingAgent {
    fn act(&mut self, _obs: &Observation, state: &EnvState) -> Result<Action> {
        let ball = match self.target {
            ObjectId::B2 => state.b2.unwrap_or(state.b1),
            _ => state.b1,
        };
        let target = ball.pos.1 + BALL_CENTRE_OFFSET;
        let centre = state.agent_paddle_y + state.paddle_height() / 2;
        Ok(if target < centre {
            Action::Up
        } else if target > centre {
            Action::Down
        } else {
            Action::Noop
        })
    }
}

/// Moves the paddle just far enough to cover the row where one ball will
/// reach the agent's column. While the ball moves away it follows its
/// current row.
#[derive(Clone, Copy, Debug)]
pub struct InterceptAgent {
    pub target: ObjectId,
}

impl Agent for InterceptAgent {
    fn act(&mut self, _obs: &Observation, state: &EnvState) -> Result<Action> {
        let ball = match self.target {
            ObjectId::B2 => state.b2.unwrap_or(state.b1),
            _ => state.b1,
        };
        let row = arrival_at_agent(&ball).map_or(ball.pos.1, |(_, y)| y);
        let (lo, hi) = covering_paddle_rows(row, state.paddle_height());
        let y = state.agent_paddle_y;
        Ok(if y > hi {
            Action::Up
        } else if y < lo {
            Action::Down
        } else {
            Action::Noop
        })
    }
}

/// Paddle rows `[lo, hi]` whose paddle overlaps a ball at `row`.
pub fn covering_paddle_rows(row: i32, paddle_height: i32) -> (i32, i32) {
    (row - paddle_height + 1, row + BALL_SIZE - 1)
}

/// Never moves.
#[derive(Clone, Copy, Debug, Default)]
pub struct StillAgent;

impl Agent for StillAgent {
    fn act(&mut self, _obs: &Observation, _state: &EnvState) -> Result<Action> {
        Ok(Action::Noop)
    }
}

/// Uniformly random actions.
pub struct RandomAgent {
    pub rng: ChaCha8Rng,
}

impl Agent for RandomAgent {
    fn act(&mut self, _obs: &Observation, _state: &EnvState) -> Result<Action> {
        Ok(Action::ALL[self.rng.random_range(0..3)])
    }
}

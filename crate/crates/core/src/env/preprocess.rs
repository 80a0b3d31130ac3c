use std::collections::VecDeque;

use super::geometry::{HEIGHT, WIDTH};
use super::label::{label_objects, ObjectMask};
use super::{create_env, Action, EnvConfig, EnvState, GameVariant, RgbFrame, StepResult};
use crate::error::Result;

pub const STACK: usize = 4;

/// Stacked grayscale planes, `planes x height x width`, oldest plane first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl Observation {
    pub fn zeros(planes: usize, height: usize, width: usize) -> Self {
        Observation { planes, height, width, data: vec![0; planes * height * width] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, plane: usize, y: usize, x: usize) -> u8 {
        self.data[(plane * self.height + y) * self.width + x]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.planes, self.height, self.width)
    }
}

/// `round(0.299 r + 0.587 g + 0.114 b)` in exact integer arithmetic.
pub fn luminance(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
}

pub fn grayscale(frame: &RgbFrame) -> Vec<u8> {
    frame.pixels.chunks_exact(3).map(|p| luminance([p[0], p[1], p[2]])).collect()
}

/// Converts the last four frames (oldest first) into an observation.
pub fn preprocess(frames: &[RgbFrame; STACK]) -> Observation {
    let mut data = Vec::with_capacity(STACK * (WIDTH * HEIGHT) as usize);
    for f in frames {
        data.extend(grayscale(f));
    }
    Observation { planes: STACK, height: HEIGHT as usize, width: WIDTH as usize, data }
}

/// A game wrapped with the grayscale frame stack. Keeps the last four states
/// so that object masks can be produced for the current observation.
#[derive(Clone, Debug)]
pub struct PongEnv {
    pub state: EnvState,
    frames: VecDeque<Vec<u8>>,
    history: VecDeque<EnvState>,
}

impl PongEnv {
    pub fn new(variant: GameVariant, config: &EnvConfig, seed: u64) -> Result<Self> {
        Ok(Self::from_state(create_env(variant, config, seed)?))
    }

    /// Wraps an existing state; the stack is filled with its frame.
    pub fn from_state(state: EnvState) -> Self {
        let mut env = PongEnv { state, frames: VecDeque::new(), history: VecDeque::new() };
        env.refill();
        env
    }

    /// Rebuilds the wrapper from the last four states, oldest first.
    pub fn from_history(history: Vec<EnvState>) -> Self {
        assert_eq!(history.len(), STACK, "history must hold {STACK} states");
        let frames = history.iter().map(|s| grayscale(&super::render(s))).collect();
        let state = history[STACK - 1].clone();
        PongEnv { state, frames, history: history.into() }
    }

    fn refill(&mut self) {
        let gray = grayscale(&super::render(&self.state));
        self.frames = std::iter::repeat_n(gray, STACK).collect();
        self.history = std::iter::repeat_n(self.state.clone(), STACK).collect();
    }

    /// Starts a new game on the same random stream.
    pub fn reset(&mut self) {
        self.state.reset();
        self.refill();
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        let result = self.state.step(action)?;
        self.frames.pop_front();
        self.frames.push_back(grayscale(&result.frame));
        self.history.pop_front();
        self.history.push_back(self.state.clone());
        Ok(result)
    }

    pub fn observation(&self) -> Observation {
        let mut data = Vec::with_capacity(STACK * (WIDTH * HEIGHT) as usize);
        for f in &self.frames {
            data.extend_from_slice(f);
        }
        Observation { planes: STACK, height: HEIGHT as usize, width: WIDTH as usize, data }
    }

    pub fn history(&self) -> Vec<EnvState> {
        self.history.iter().cloned().collect()
    }

    pub fn history_array(&self) -> [EnvState; STACK] {
        self.history().try_into().expect("history always holds four states")
    }

    pub fn mask(&self) -> ObjectMask {
        label_objects(&self.history_array())
    }
}

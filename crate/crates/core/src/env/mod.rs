//! Deterministic Pong variants with rendering, object labelling and the
//! grayscale frame-stack wrapper.

mod config;
pub mod geometry;
mod label;
mod preprocess;
pub(crate) mod render;
mod state;
mod variant;

pub use config::{Colors, EnvConfig, Rgb, TerminalScores};
pub use label::{label_objects, object_boxes, ObjectId, ObjectMask};
pub use preprocess::{grayscale, luminance, preprocess, Observation, PongEnv, STACK};
pub use render::{render, RgbFrame};
pub use state::{
    arrival_at_agent, create_env, set_state, Action, Ball, EnvState, ScoredSide, StateOverrides, StepInfo, StepResult,
};
pub use geometry::BALL_SIZE;
pub const BALL_CENTRE_OFFSET: i32 = BALL_SIZE / 2;
pub use variant::{B2Reward, Dynamics, GameVariant};

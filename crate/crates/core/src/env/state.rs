use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::*;
use super::{Dynamics, EnvConfig, GameVariant, RgbFrame};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Noop,
    Up,
    Down,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Noop, Action::Up, Action::Down];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }
}

/// Ball position (top-left corner of its 2x2 block) and velocity in px/frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ball {
    pub pos: (i32, i32),
    pub vel: (i32, i32),
}

impl Ball {
    pub fn rect(&self) -> Rect {
        Rect::new(self.pos.0, self.pos.1, BALL_SIZE, BALL_SIZE)
    }
}

/// Which side B1 was scored on during a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoredSide {
    None,
    /// B1 passed the opponent: a point for the agent.
    Agent,
    /// B1 passed the agent: a point for the opponent.
    Opponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInfo {
    pub b1_hit_by_agent: bool,
    pub b2_hit_by_agent: bool,
    pub b1_scored_side: ScoredSide,
    pub b2_passed_agent: bool,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub frame: RgbFrame,
    pub reward: f32,
    pub done: bool,
    pub info: StepInfo,
}

/// Complete ground-truth game state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent_paddle_y: i32,
    pub opponent_paddle_y: i32,
    pub b1: Ball,
    pub b2: Option<Ball>,
    pub score_agent: u32,
    pub score_opponent: u32,
    pub frame_index: u64,
    pub rng: ChaCha8Rng,
    pub config: EnvConfig,
    pub done: bool,
}

/// Field overrides accepted by [`set_state`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateOverrides {
    pub agent_paddle_y: Option<i32>,
    pub opponent_paddle_y: Option<i32>,
    pub b1_pos: Option<(i32, i32)>,
    pub b1_vel: Option<(i32, i32)>,
    pub b2_pos: Option<(i32, i32)>,
    pub b2_vel: Option<(i32, i32)>,
    pub score_agent: Option<u32>,
    pub score_opponent: Option<u32>,
}

/// Creates a fresh game: balls at the centre sharing a random x-direction
/// with opposite y-directions, paddles centred, scores zero.
pub fn create_env(variant: GameVariant, config: &EnvConfig, seed: u64) -> Result<EnvState> {
    let config = EnvConfig { variant, seed, ..config.clone() };
    config.validate()?;
    let mut state = EnvState {
        agent_paddle_y: paddle_start_y(config.paddle_height_px),
        opponent_paddle_y: paddle_start_y(config.paddle_height_px),
        b1: Ball { pos: SERVE_POS, vel: (BALL_SPEED_X, BALL_SPEED_Y) },
        b2: None,
        score_agent: 0,
        score_opponent: 0,
        frame_index: 0,
        rng: ChaCha8Rng::seed_from_u64(seed),
        config,
        done: false,
    };
    state.serve_both();
    Ok(state)
}

/// Applies `overrides` to a copy of `state` after validating every field.
pub fn set_state(state: &EnvState, overrides: &StateOverrides) -> Result<EnvState> {
    let mut next = state.clone();
    let ph = state.config.paddle_height_px;
    let paddle_ok = |y: i32| (paddle_min_y()..=paddle_max_y(ph)).contains(&y);
    let (bx0, bx1) = ball_x_range();
    let (by0, by1) = ball_y_range();
    let pos_ok = |(x, y): (i32, i32)| (bx0..=bx1).contains(&x) && (by0..=by1).contains(&y);
    let vel_ok = |(vx, vy): (i32, i32)| vx.abs() == BALL_SPEED_X && vy.abs() == BALL_SPEED_Y;

    if let Some(y) = overrides.agent_paddle_y {
        if !paddle_ok(y) {
            return Err(Error::Validation(format!("agent paddle y {y} outside playfield")));
        }
        next.agent_paddle_y = y;
    }
    if let Some(y) = overrides.opponent_paddle_y {
        if !paddle_ok(y) {
            return Err(Error::Validation(format!("opponent paddle y {y} outside playfield")));
        }
        next.opponent_paddle_y = y;
    }
    if let Some(p) = overrides.b1_pos {
        if !pos_ok(p) {
            return Err(Error::Validation(format!("B1 position {p:?} outside playfield")));
        }
        next.b1.pos = p;
    }
    if let Some(v) = overrides.b1_vel {
        if !vel_ok(v) {
            return Err(Error::Validation(format!("B1 velocity {v:?} is not (±4, ±2)")));
        }
        next.b1.vel = v;
    }
    if overrides.b2_pos.is_some() || overrides.b2_vel.is_some() {
        let Some(b2) = next.b2.as_mut() else {
            return Err(Error::Validation(format!(
                "variant {} has no second ball",
                state.config.variant
            )));
        };
        if let Some(p) = overrides.b2_pos {
            if !pos_ok(p) {
                return Err(Error::Validation(format!("B2 position {p:?} outside playfield")));
            }
            b2.pos = p;
        }
        if let Some(v) = overrides.b2_vel {
            if !vel_ok(v) {
                return Err(Error::Validation(format!("B2 velocity {v:?} is not (±4, ±2)")));
            }
            b2.vel = v;
        }
    }
    let (term_agent, term_opp) = state.config.terminal_scores();
    if let Some(s) = overrides.score_agent {
        if s >= term_agent {
            return Err(Error::Validation(format!("agent score {s} reaches terminal {term_agent}")));
        }
        next.score_agent = s;
    }
    if let Some(s) = overrides.score_opponent {
        if s >= term_opp {
            return Err(Error::Validation(format!("opponent score {s} reaches terminal {term_opp}")));
        }
        next.score_opponent = s;
    }
    Ok(next)
}

fn random_sign(rng: &mut ChaCha8Rng) -> i32 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

impl EnvState {
    pub fn variant(&self) -> GameVariant {
        self.config.variant
    }

    pub fn paddle_height(&self) -> i32 {
        self.config.paddle_height_px
    }

    pub fn agent_paddle_rect(&self) -> Rect {
        Rect::new(AGENT_X, self.agent_paddle_y, PADDLE_WIDTH, self.paddle_height())
    }

    pub fn opponent_paddle_rect(&self) -> Rect {
        Rect::new(OPPONENT_X, self.opponent_paddle_y, PADDLE_WIDTH, self.paddle_height())
    }

    /// Starts a new game, continuing the state's random stream.
    pub fn reset(&mut self) {
        let ph = self.paddle_height();
        self.agent_paddle_y = paddle_start_y(ph);
        self.opponent_paddle_y = paddle_start_y(ph);
        self.score_agent = 0;
        self.score_opponent = 0;
        self.frame_index = 0;
        self.done = false;
        self.serve_both();
    }

    fn serve_both(&mut self) {
        let dx = random_sign(&mut self.rng);
        let dy = random_sign(&mut self.rng);
        self.b1 = Ball { pos: SERVE_POS, vel: (dx * BALL_SPEED_X, dy * BALL_SPEED_Y) };
        self.b2 = self
            .variant()
            .b2_present()
            .then(|| Ball { pos: SERVE_POS, vel: (dx * BALL_SPEED_X, -dy * BALL_SPEED_Y) });
    }

    fn serve_b2(&mut self) {
        let dx = random_sign(&mut self.rng);
        let dy = random_sign(&mut self.rng);
        self.b2 = Some(Ball { pos: SERVE_POS, vel: (dx * BALL_SPEED_X, dy * BALL_SPEED_Y) });
    }

    /// Advances the game by one frame.
    ///
    /// Order within a frame: paddles move, balls move, wall bounce, paddle
    /// bounce, goal check.
    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::StepAfterDone);
        }
        let ph = self.paddle_height();
        let clamp_paddle = |y: i32| y.clamp(paddle_min_y(), paddle_max_y(ph));

        let dy = match action {
            Action::Noop => 0,
            Action::Up => -PADDLE_SPEED,
            Action::Down => PADDLE_SPEED,
        };
        self.agent_paddle_y = clamp_paddle(self.agent_paddle_y + dy);

        // The opponent only chases B1 while it travels towards the opponent.
        if self.b1.vel.0 < 0 {
            let target = self.b1.pos.1 + BALL_SIZE / 2;
            let centre = self.opponent_paddle_y + ph / 2;
            let delta = (target - centre).clamp(-PADDLE_SPEED, PADDLE_SPEED);
            self.opponent_paddle_y = clamp_paddle(self.opponent_paddle_y + delta);
        }

        let agent = self.agent_paddle_rect();
        let opponent = self.opponent_paddle_rect();
        let mut info = StepInfo {
            b1_hit_by_agent: false,
            b2_hit_by_agent: false,
            b1_scored_side: ScoredSide::None,
            b2_passed_agent: false,
            truncated: false,
        };
        let mut reward = 0.0f32;

        info.b1_hit_by_agent = advance_ball(&mut self.b1, &agent, &opponent, Dynamics::D1);
        let b2_dynamics = self.variant().b2_dynamics();
        if let Some(b2) = self.b2.as_mut() {
            info.b2_hit_by_agent = advance_ball(b2, &agent, &opponent, b2_dynamics);
        }

        // B2 goal events first so that a simultaneous B1 re-serve does not hide them.
        let rewards_b2 = self.variant().b2_reward() == super::B2Reward::R2;
        if let Some(b2) = self.b2 {
            if info.b2_hit_by_agent && rewards_b2 {
                reward += 1.0;
                self.score_agent += 1;
            }
            let (x, _) = b2.pos;
            if x + BALL_SIZE > WIDTH {
                info.b2_passed_agent = true;
                if rewards_b2 {
                    reward -= 1.0;
                    self.score_opponent += 1;
                }
                self.serve_b2();
            } else if x < 0 {
                self.serve_b2();
            }
        }

        let (x1, _) = self.b1.pos;
        if x1 + BALL_SIZE > WIDTH {
            info.b1_scored_side = ScoredSide::Opponent;
            reward -= 1.0;
            self.score_opponent += 1;
            self.serve_both();
        } else if x1 < 0 {
            info.b1_scored_side = ScoredSide::Agent;
            reward += 1.0;
            self.score_agent += 1;
            self.serve_both();
        }

        self.frame_index += 1;
        let (term_agent, term_opp) = self.config.terminal_scores();
        if self.score_agent >= term_agent || self.score_opponent >= term_opp {
            self.done = true;
        } else if self.frame_index >= self.config.max_episode_frames {
            self.done = true;
            info.truncated = true;
        }

        Ok(StepResult { frame: super::render(self), reward, done: self.done, info })
    }
}

/// Frames until a ball moving right reaches the agent paddle face, and its
/// row at that frame, ignoring paddles. `None` for balls moving left.
pub fn arrival_at_agent(ball: &Ball) -> Option<(u32, i32)> {
    if ball.vel.0 <= 0 {
        return None;
    }
    let (y_min, y_max) = ball_y_range();
    let (mut x, mut y) = ball.pos;
    let mut vy = ball.vel.1;
    let mut frames = 0;
    while x + BALL_SIZE <= AGENT_FACE {
        x += ball.vel.0;
        y += vy;
        if y < y_min {
            y = 2 * y_min - y;
            vy = vy.abs();
        } else if y > y_max {
            y = 2 * y_max - y;
            vy = -vy.abs();
        }
        frames += 1;
    }
    Some((frames, y))
}

/// Moves one ball a frame forward and resolves wall and paddle contacts.
/// Returns whether it rebounded off the agent paddle. Balls that leave the
/// playfield horizontally are left outside for the goal check.
fn advance_ball(ball: &mut Ball, agent: &Rect, opponent: &Rect, dynamics: Dynamics) -> bool {
    let (old_x, _) = ball.pos;
    let (mut x, mut y) = (ball.pos.0 + ball.vel.0, ball.pos.1 + ball.vel.1);
    let (mut vx, mut vy) = ball.vel;

    let (y_min, y_max) = ball_y_range();
    if y < y_min {
        y = 2 * y_min - y;
        vy = vy.abs();
    } else if y > y_max {
        y = 2 * y_max - y;
        vy = -vy.abs();
    }

    let overlaps = |p: &Rect| y < p.y + p.h && y + BALL_SIZE > p.y;
    let mut hit_agent = false;
    if vx > 0 && old_x + BALL_SIZE <= AGENT_FACE && x + BALL_SIZE > AGENT_FACE && overlaps(agent) {
        x = 2 * AGENT_FACE - 2 * BALL_SIZE - x;
        vx = -vx;
        hit_agent = true;
    } else if vx < 0
        && dynamics != Dynamics::D2
        && old_x >= OPPONENT_FACE
        && x < OPPONENT_FACE
        && overlaps(opponent)
    {
        x = 2 * OPPONENT_FACE - x;
        vx = -vx;
    }

    // D2 balls pass the opponent and rebound off the back edge of the field.
    if dynamics == Dynamics::D2 && x < 0 {
        x = -x;
        vx = vx.abs();
    }

    ball.pos = (x, y);
    ball.vel = (vx, vy);
    hit_agent
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(variant: GameVariant, seed: u64) -> EnvState {
        create_env(variant, &EnvConfig::default(), seed).unwrap()
    }

    #[test]
    fn create_places_balls_at_centre() {
        let s = env(GameVariant::V0, 7);
        assert!(s.b2.is_none());
        assert_eq!(s.b1.pos, SERVE_POS);
        assert_eq!((s.b1.vel.0.abs(), s.b1.vel.1.abs()), (4, 2));
        assert_eq!((s.score_agent, s.score_opponent), (0, 0));
        assert!(!s.done);
    }

    #[test]
    fn v2_balls_have_opposite_vertical_directions() {
        for seed in 0..32 {
            let s = env(GameVariant::V2, seed);
            let b2 = s.b2.unwrap();
            assert_eq!(s.b1.vel.1, -b2.vel.1);
            assert_eq!(s.b1.vel.0, b2.vel.0);
        }
    }

    #[test]
    fn create_is_deterministic() {
        assert_eq!(env(GameVariant::V1, 99), env(GameVariant::V1, 99));
    }

    #[test]
    fn oversized_paddle_is_rejected() {
        let cfg = EnvConfig { paddle_height_px: 200, ..Default::default() };
        assert!(matches!(create_env(GameVariant::V0, &cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn free_flight_advances_by_velocity() {
        let s = env(GameVariant::V0, 1);
        let mut s = set_state(
            &s,
            &StateOverrides { b1_pos: Some((40, 40)), b1_vel: Some((4, 2)), ..Default::default() },
        )
        .unwrap();
        s.step(Action::Noop).unwrap();
        assert_eq!(s.b1.pos, (44, 42));
        assert_eq!(s.b1.vel, (4, 2));
    }

    #[test]
    fn top_wall_reflects_vertical_velocity() {
        let s = env(GameVariant::V0, 1);
        let mut s = set_state(
            &s,
            &StateOverrides { b1_pos: Some((40, 13)), b1_vel: Some((4, -2)), ..Default::default() },
        )
        .unwrap();
        s.step(Action::Noop).unwrap();
        assert_eq!(s.b1.vel, (4, 2));
        assert_eq!(s.b1.pos, (44, 13));
    }

    #[test]
    fn b1_past_opponent_scores_for_agent() {
        let s = env(GameVariant::V0, 3);
        // Opponent far away at the top, ball heading out at the bottom left.
        let mut s = set_state(
            &s,
            &StateOverrides {
                opponent_paddle_y: Some(PLAY_TOP),
                b1_pos: Some((2, 70)),
                b1_vel: Some((-4, 2)),
                ..Default::default()
            },
        )
        .unwrap();
        let r = s.step(Action::Noop).unwrap();
        assert_eq!(r.reward, 1.0);
        assert_eq!(r.info.b1_scored_side, ScoredSide::Agent);
        assert_eq!(s.score_agent, 1);
        assert_eq!(s.b1.pos, SERVE_POS);
    }

    #[test]
    fn d2_ball_passes_through_opponent_paddle() {
        let s = env(GameVariant::V2, 5);
        let s0 = set_state(
            &s,
            &StateOverrides {
                opponent_paddle_y: Some(40),
                b2_pos: Some((8, 42)),
                b2_vel: Some((-4, 2)),
                ..Default::default()
            },
        )
        .unwrap();
        let mut s = s0.clone();
        s.step(Action::Noop).unwrap();
        let b2 = s.b2.unwrap();
        assert_eq!(b2.pos, (4, 44));
        assert_eq!(b2.vel, (-4, 2));

        // The same geometry in v1 rebounds.
        let mut v1 = s0.clone();
        v1.config.variant = GameVariant::V1;
        v1.step(Action::Noop).unwrap();
        assert_eq!(v1.b2.unwrap().vel.0, 4);
    }

    #[test]
    fn agent_hit_on_b2_rewards_only_in_v2() {
        for (variant, want) in [(GameVariant::V1, 0.0), (GameVariant::V2, 1.0)] {
            let s = env(variant, 11);
            let mut s = set_state(
                &s,
                &StateOverrides {
                    agent_paddle_y: Some(40),
                    b1_pos: Some((40, 20)),
                    b1_vel: Some((-4, 2)),
                    b2_pos: Some((74, 42)),
                    b2_vel: Some((4, 2)),
                    ..Default::default()
                },
            )
            .unwrap();
            let r = s.step(Action::Noop).unwrap();
            assert!(r.info.b2_hit_by_agent);
            assert_eq!(r.reward, want);
            assert_eq!(s.b2.unwrap().vel.0, -4);
        }
    }

    #[test]
    fn step_after_done_is_a_protocol_error() {
        let mut s = env(GameVariant::V0, 0);
        s.done = true;
        assert!(matches!(s.step(Action::Noop), Err(Error::StepAfterDone)));
    }

    #[test]
    fn out_of_bounds_override_is_rejected() {
        let s = env(GameVariant::V0, 0);
        let o = StateOverrides { b1_pos: Some((90, 40)), ..Default::default() };
        assert!(matches!(set_state(&s, &o), Err(Error::Validation(_))));
        let o = StateOverrides { b2_pos: Some((40, 40)), ..Default::default() };
        assert!(matches!(set_state(&s, &o), Err(Error::Validation(_))));
        let o = StateOverrides { b1_vel: Some((3, 2)), ..Default::default() };
        assert!(set_state(&s, &o).is_err());
    }

    #[test]
    fn paddles_move_two_pixels_and_clamp() {
        let mut s = env(GameVariant::V0, 0);
        let y0 = s.agent_paddle_y;
        s.step(Action::Up).unwrap();
        assert_eq!(s.agent_paddle_y, y0 - 2);
        for _ in 0..100 {
            if s.done {
                break;
            }
            s.step(Action::Up).unwrap();
        }
        assert_eq!(s.agent_paddle_y, PLAY_TOP);
    }
}

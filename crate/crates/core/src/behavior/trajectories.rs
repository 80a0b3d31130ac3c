use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::covering_paddle_rows;
use crate::env::geometry::{ball_y_range, paddle_max_y, paddle_min_y, paddle_start_y, BALL_SPEED_X, BALL_SPEED_Y};
use crate::env::{arrival_at_agent, Ball};
use crate::error::{Error, Result};

/// Horizontal start range of both balls.
pub const X_RANGE: (i32, i32) = (20, 60);

/// Initial ball states for one trial. Both balls move towards the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub b1_x: i32,
    pub b1_y: i32,
    pub b1_vx: i32,
    pub b1_vy: i32,
    pub b2_x: i32,
    pub b2_y: i32,
    pub b2_vx: i32,
    pub b2_vy: i32,
    pub arrival_frame: u32,
    pub b1_arrival_y: i32,
    pub b2_arrival_y: i32,
    pub vertical_gap_at_arrival: i32,
}

impl TrajectorySpec {
    pub fn b1(&self) -> Ball {
        Ball { pos: (self.b1_x, self.b1_y), vel: (self.b1_vx, self.b1_vy) }
    }

    pub fn b2(&self) -> Ball {
        Ball { pos: (self.b2_x, self.b2_y), vel: (self.b2_vx, self.b2_vy) }
    }
}

/// Constraint violations of a candidate, all false for a valid spec.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrajectoryCheck {
    pub unequal_arrival: bool,
    pub gap_too_small: bool,
    pub unreachable: bool,
    pub overlapping_start: bool,
}

impl TrajectoryCheck {
    pub fn ok(&self) -> bool {
        *self == TrajectoryCheck::default()
    }
}

/// Whether a paddle starting at the default row can cover a ball arriving
/// at `row` within `frames` moves.
fn reachable(row: i32, frames: u32, paddle_height: i32) -> bool {
    let (lo, hi) = covering_paddle_rows(row, paddle_height);
    let (lo, hi) = (lo.max(paddle_min_y()), hi.min(paddle_max_y(paddle_height)));
    let start = paddle_start_y(paddle_height);
    let d = if start < lo { lo - start } else if start > hi { start - hi } else { 0 };
    lo <= hi && d as i64 <= 2 * frames as i64
}

pub fn check_trajectory(b1: &Ball, b2: &Ball, paddle_height: i32) -> (TrajectoryCheck, Option<(u32, i32, i32)>) {
    let mut check = TrajectoryCheck::default();
    let (Some((f1, y1)), Some((f2, y2))) = (arrival_at_agent(b1), arrival_at_agent(b2)) else {
        check.unequal_arrival = true;
        return (check, None);
    };
    check.unequal_arrival = f1 != f2;
    check.gap_too_small = (y1 - y2).abs() <= paddle_height;
    check.unreachable = !reachable(y1, f1, paddle_height) || !reachable(y2, f2, paddle_height);
    check.overlapping_start = b1.rect().intersects(&b2.rect());
    (check, Some((f1, y1, y2)))
}

/// Rejection-samples `n` distinct specs whose balls reach the agent's
/// column on the same frame, separated by more than the paddle height,
/// each within reach of a paddle starting at the default row.
pub fn generate_trajectories(n: usize, rng: &mut ChaCha8Rng, paddle_height: i32, max_attempts: usize) -> Result<Vec<TrajectorySpec>> {
    let (y0, y1) = ball_y_range();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..max_attempts {
        if out.len() == n {
            break;
        }
        let ball = |rng: &mut ChaCha8Rng| Ball {
            pos: (rng.random_range(X_RANGE.0..=X_RANGE.1), rng.random_range(y0..=y1)),
            vel: (BALL_SPEED_X, if rng.random_bool(0.5) { BALL_SPEED_Y } else { -BALL_SPEED_Y }),
        };
        let b1 = ball(rng);
        let b2 = ball(rng);
        let (check, arrival) = check_trajectory(&b1, &b2, paddle_height);
        let Some((frame, a1, a2)) = arrival else { continue };
        if !check.ok() {
            continue;
        }
        let spec = TrajectorySpec {
            b1_x: b1.pos.0,
            b1_y: b1.pos.1,
            b1_vx: b1.vel.0,
            b1_vy: b1.vel.1,
            b2_x: b2.pos.0,
            b2_y: b2.pos.1,
            b2_vx: b2.vel.0,
            b2_vy: b2.vel.1,
            arrival_frame: frame,
            b1_arrival_y: a1,
            b2_arrival_y: a2,
            vertical_gap_at_arrival: (a1 - a2).abs(),
        };
        if seen.insert((b1.pos, b1.vel, b2.pos, b2.vel)) {
            out.push(spec);
        }
    }
    if out.len() < n {
        return Err(Error::TrajectoryBudget { found: out.len(), needed: n });
    }
    Ok(out)
}

//! Fixed playfield layout (pixel units, origin top-left, y grows downwards).
//!
//! ```text
//! rows  0..10   score band (opponent digits left, agent digits right)
//! rows 10..12   top wall
//! rows 12..82   play area
//! rows 82..84   bottom wall
//! ```

use serde::{Deserialize, Serialize};

pub const WIDTH: i32 = 84;
pub const HEIGHT: i32 = 84;
pub const WALL_THICKNESS: i32 = 2;
pub const SCORE_BAND: i32 = 10;
pub const PLAY_TOP: i32 = SCORE_BAND + WALL_THICKNESS;
pub const PLAY_BOTTOM: i32 = HEIGHT - WALL_THICKNESS;
pub const PLAY_HEIGHT: i32 = PLAY_BOTTOM - PLAY_TOP;

pub const PADDLE_WIDTH: i32 = 2;
pub const OPPONENT_X: i32 = 4;
pub const AGENT_X: i32 = WIDTH - 4 - PADDLE_WIDTH;
/// Face of the opponent paddle that balls rebound from.
pub const OPPONENT_FACE: i32 = OPPONENT_X + PADDLE_WIDTH;
/// Face of the agent paddle that balls rebound from.
pub const AGENT_FACE: i32 = AGENT_X;

pub const BALL_SIZE: i32 = 2;
pub const BALL_SPEED_X: i32 = 4;
pub const BALL_SPEED_Y: i32 = 2;
pub const PADDLE_SPEED: i32 = 2;
pub const SERVE_POS: (i32, i32) = ((WIDTH - BALL_SIZE) / 2, (PLAY_TOP + PLAY_BOTTOM - BALL_SIZE) / 2);

pub const DIGIT_W: i32 = 5;
pub const DIGIT_H: i32 = 7;
pub const DIGIT_GAP: i32 = 2;
pub const SCORE_Y: i32 = 1;
pub const OPPONENT_SCORE_X: i32 = 20;
pub const AGENT_SCORE_X: i32 = WIDTH - 20 - (2 * DIGIT_W + DIGIT_GAP);

/// Half-open axis-aligned rectangle `[x, x+w) x [y, y+h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    pub const fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn contains(&self, px: i32, py: i32) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    pub fn area(&self) -> i32 {
        self.w * self.h
    }

    /// Pixels of the rectangle clipped to the frame.
    pub fn pixels(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        let x0 = self.x.max(0);
        let x1 = (self.x + self.w).min(WIDTH);
        let y0 = self.y.max(0);
        let y1 = (self.y + self.h).min(HEIGHT);
        (y0..y1).flat_map(move |y| (x0..x1).map(move |x| (x, y)))
    }
}

pub const TOP_WALL: Rect = Rect::new(0, SCORE_BAND, WIDTH, WALL_THICKNESS);
pub const BOTTOM_WALL: Rect = Rect::new(0, PLAY_BOTTOM, WIDTH, WALL_THICKNESS);

pub fn paddle_min_y() -> i32 {
    PLAY_TOP
}

pub fn paddle_max_y(paddle_height: i32) -> i32 {
    PLAY_BOTTOM - paddle_height
}

pub fn paddle_start_y(paddle_height: i32) -> i32 {
    (PLAY_TOP + PLAY_BOTTOM) / 2 - paddle_height / 2
}

pub fn ball_y_range() -> (i32, i32) {
    (PLAY_TOP, PLAY_BOTTOM - BALL_SIZE)
}

pub fn ball_x_range() -> (i32, i32) {
    (0, WIDTH - BALL_SIZE)
}

// Seven-segment layout: a top, b upper right, c lower right, d bottom,
// e lower left, f upper left, g middle.
const SEGMENTS: [u8; 10] = [
    0b0111111, // 0: abcdef
    0b0000110, // 1: bc
    0b1011011, // 2: abdeg
    0b1001111, // 3: abcdg
    0b1100110, // 4: bcfg
    0b1101101, // 5: acdfg
    0b1111101, // 6: acdefg
    0b0000111, // 7: abc
    0b1111111, // 8
    0b1101111, // 9: abcdfg
];

fn segment_rects(x: i32, y: i32, segments: u8) -> Vec<Rect> {
    let mid = y + DIGIT_H / 2;
    let right = x + DIGIT_W - 1;
    let bottom = y + DIGIT_H - 1;
    let all = [
        Rect::new(x, y, DIGIT_W, 1),
        Rect::new(right, y, 1, mid - y + 1),
        Rect::new(right, mid, 1, bottom - mid + 1),
        Rect::new(x, bottom, DIGIT_W, 1),
        Rect::new(x, mid, 1, bottom - mid + 1),
        Rect::new(x, y, 1, mid - y + 1),
        Rect::new(x, mid, DIGIT_W, 1),
    ];
    (0..7).filter(|s| segments & (1 << s) != 0).map(|s| all[s]).collect()
}

/// Lit rectangles of a two-digit score drawn with its left edge at `x`.
pub fn score_glyph_rects(score: u32, x: i32) -> Vec<Rect> {
    let score = score.min(99);
    let tens = (score / 10) as usize;
    let ones = (score % 10) as usize;
    let mut rects = segment_rects(x, SCORE_Y, SEGMENTS[tens]);
    rects.extend(segment_rects(x + DIGIT_W + DIGIT_GAP, SCORE_Y, SEGMENTS[ones]));
    rects
}

/// Fixed region occupied by a two-digit score.
pub fn score_region(x: i32) -> Rect {
    Rect::new(x, SCORE_Y, 2 * DIGIT_W + DIGIT_GAP, DIGIT_H)
}

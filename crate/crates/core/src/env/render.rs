use std::io::Write;

use super::geometry::*;
use super::label::ObjectId;
use super::{EnvState, Rgb};

/// An 84x84 RGB frame, row-major, 3 bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbFrame {
    pub pixels: Vec<u8>,
}

impl RgbFrame {
    pub fn filled(color: Rgb) -> Self {
        let mut pixels = Vec::with_capacity((WIDTH * HEIGHT * 3) as usize);
        for _ in 0..WIDTH * HEIGHT {
            pixels.extend_from_slice(&color);
        }
        RgbFrame { pixels }
    }

    pub fn get(&self, x: i32, y: i32) -> Rgb {
        let i = ((y * WIDTH + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: i32, y: i32, c: Rgb) {
        let i = ((y * WIDTH + x) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    pub fn fill_rect(&mut self, r: &Rect, c: Rgb) {
        for (x, y) in r.pixels() {
            self.set(x, y, c);
        }
    }

    pub fn count_color(&self, c: Rgb) -> usize {
        self.pixels.chunks_exact(3).filter(|p| *p == c).count()
    }

    /// Binary portable pixmap (P6).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P6\n{WIDTH} {HEIGHT}\n255\n")?;
        out.write_all(&self.pixels)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.pixels.len() + 16);
        self.write_ppm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

/// Rectangles making up each visible object, in drawing order. Later
/// entries are drawn over earlier ones.
pub(crate) fn object_layers(state: &EnvState) -> Vec<(ObjectId, Vec<Rect>)> {
    let mut layers = vec![
        (ObjectId::Walls, vec![TOP_WALL, BOTTOM_WALL]),
        (ObjectId::ScoreOpponent, score_glyph_rects(state.score_opponent, OPPONENT_SCORE_X)),
        (ObjectId::ScoreAgent, score_glyph_rects(state.score_agent, AGENT_SCORE_X)),
        (ObjectId::OpponentPaddle, vec![state.opponent_paddle_rect()]),
        (ObjectId::AgentPaddle, vec![state.agent_paddle_rect()]),
    ];
    if let Some(b2) = state.b2 {
        layers.push((ObjectId::B2, vec![b2.rect()]));
    }
    layers.push((ObjectId::B1, vec![state.b1.rect()]));
    layers
}

pub(crate) fn object_color(state: &EnvState, id: ObjectId) -> Rgb {
    let cfg = &state.config;
    match id {
        ObjectId::Background => cfg.colors.background,
        ObjectId::Walls => cfg.colors.walls,
        ObjectId::AgentPaddle | ObjectId::ScoreAgent => cfg.colors.agent,
        ObjectId::OpponentPaddle | ObjectId::ScoreOpponent => cfg.colors.opponent,
        ObjectId::B1 => cfg.b1_color(),
        ObjectId::B2 => cfg.b2_color(),
    }
}

/// Draws the state. Pure function of `state`.
pub fn render(state: &EnvState) -> RgbFrame {
    let mut frame = RgbFrame::filled(state.config.colors.background);
    for (id, rects) in object_layers(state) {
        let color = object_color(state, id);
        for r in &rects {
            frame.fill_rect(r, color);
        }
    }
    frame
}

use serde::{Deserialize, Serialize};

use super::geometry::PLAY_HEIGHT;
use super::GameVariant;
use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Colors {
    pub b1: Rgb,
    pub b2: Rgb,
    pub agent: Rgb,
    pub opponent: Rgb,
    pub walls: Rgb,
    pub background: Rgb,
}

impl Default for Colors {
    fn default() -> Self {
        Colors {
            b1: [236, 236, 236],
            b2: [255, 255, 0],
            agent: [92, 186, 92],
            opponent: [213, 130, 74],
            walls: [236, 236, 236],
            background: [0, 0, 0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalScores {
    pub agent: u32,
    pub opponent: u32,
}

/// Game configuration. Geometry other than the paddle height is fixed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub variant: GameVariant,
    pub seed: u64,
    pub paddle_height_px: i32,
    pub colors: Colors,
    /// Defaults per variant when absent.
    pub terminal_scores: Option<TerminalScores>,
    /// Exchange the colours of B1 and B2.
    pub color_swap: bool,
    /// Games are truncated after this many frames.
    pub max_episode_frames: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            variant: GameVariant::V0,
            seed: 0,
            paddle_height_px: 8,
            colors: Colors::default(),
            terminal_scores: None,
            color_swap: false,
            max_episode_frames: 20_000,
        }
    }
}

impl EnvConfig {
    pub fn for_variant(variant: GameVariant) -> Self {
        EnvConfig { variant, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paddle_height_px < 1 || self.paddle_height_px > PLAY_HEIGHT {
            return Err(Error::Config(format!(
                "paddle height {} must lie in 1..={PLAY_HEIGHT}",
                self.paddle_height_px
            )));
        }
        let (a, o) = self.terminal_scores();
        if a == 0 || o == 0 || a > 99 || o > 99 {
            return Err(Error::Config(format!("terminal scores ({a}, {o}) must lie in 1..=99")));
        }
        if self.max_episode_frames == 0 {
            return Err(Error::Config("max_episode_frames must be positive".into()));
        }
        Ok(())
    }

    pub fn terminal_scores(&self) -> (u32, u32) {
        self.terminal_scores
            .map(|t| (t.agent, t.opponent))
            .unwrap_or_else(|| self.variant.default_terminal_scores())
    }

    /// Rendered colour of B1, honouring `color_swap`.
    pub fn b1_color(&self) -> Rgb {
        if self.color_swap {
            self.colors.b2
        } else {
            self.colors.b1
        }
    }

    pub fn b2_color(&self) -> Rgb {
        if self.color_swap {
            self.colors.b1
        } else {
            self.colors.b2
        }
    }
}

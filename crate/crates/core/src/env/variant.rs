use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ball dynamics of the second ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dynamics {
    None,
    /// Rebounds off walls and both paddles.
    D1,
    /// Rebounds off walls and the agent paddle, passes through the opponent.
    D2,
}

/// Reward scheme attached to the second ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum B2Reward {
    None,
    /// +1 for a rebound off the agent paddle, -1 when it passes the agent.
    R2,
}

/// The three game variants. The ball/dynamics/reward attributes are derived
/// from the variant so they can never disagree with it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameVariant {
    V0,
    V1,
    V2,
}

impl GameVariant {
    pub const ALL: [GameVariant; 3] = [GameVariant::V0, GameVariant::V1, GameVariant::V2];

    pub fn b2_present(self) -> bool {
        !matches!(self, GameVariant::V0)
    }

    pub fn b2_dynamics(self) -> Dynamics {
        match self {
            GameVariant::V0 => Dynamics::None,
            GameVariant::V1 => Dynamics::D1,
            GameVariant::V2 => Dynamics::D2,
        }
    }

    pub fn b2_reward(self) -> B2Reward {
        match self {
            GameVariant::V2 => B2Reward::R2,
            _ => B2Reward::None,
        }
    }

    /// Default terminal scores `(agent, opponent)`.
    pub fn default_terminal_scores(self) -> (u32, u32) {
        match self {
            GameVariant::V2 => (41, 21),
            _ => (21, 21),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameVariant::V0 => "v0",
            GameVariant::V1 => "v1",
            GameVariant::V2 => "v2",
        }
    }
}

impl fmt::Display for GameVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v0" => Ok(GameVariant::V0),
            "v1" => Ok(GameVariant::V1),
            "v2" => Ok(GameVariant::V2),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

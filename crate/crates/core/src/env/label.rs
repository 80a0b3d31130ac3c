use serde::{Deserialize, Serialize};

use super::geometry::{Rect, HEIGHT, WIDTH};
use super::render::object_layers;
use super::{EnvState, GameVariant};

/// Object classes labelled in the playfield.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum ObjectId {
    Background = 0,
    AgentPaddle = 1,
    OpponentPaddle = 2,
    B1 = 3,
    B2 = 4,
    Walls = 5,
    ScoreAgent = 6,
    ScoreOpponent = 7,
}

impl ObjectId {
    pub const ALL: [ObjectId; 8] = [
        ObjectId::Background,
        ObjectId::AgentPaddle,
        ObjectId::OpponentPaddle,
        ObjectId::B1,
        ObjectId::B2,
        ObjectId::Walls,
        ObjectId::ScoreAgent,
        ObjectId::ScoreOpponent,
    ];

    /// Every non-background object, in canonical order.
    pub const OBJECTS: [ObjectId; 7] = [
        ObjectId::AgentPaddle,
        ObjectId::OpponentPaddle,
        ObjectId::B1,
        ObjectId::B2,
        ObjectId::Walls,
        ObjectId::ScoreAgent,
        ObjectId::ScoreOpponent,
    ];

    pub fn from_u8(v: u8) -> Option<ObjectId> {
        ObjectId::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectId::Background => "background",
            ObjectId::AgentPaddle => "agent_paddle",
            ObjectId::OpponentPaddle => "opponent_paddle",
            ObjectId::B1 => "b1",
            ObjectId::B2 => "b2",
            ObjectId::Walls => "walls",
            ObjectId::ScoreAgent => "score_agent",
            ObjectId::ScoreOpponent => "score_opponent",
        }
    }

    /// Objects present in a variant, excluding the background.
    pub fn variant_objects(variant: GameVariant) -> Vec<ObjectId> {
        ObjectId::OBJECTS
            .into_iter()
            .filter(|&o| o != ObjectId::B2 || variant.b2_present())
            .collect()
    }
}

/// Per-pixel object labels for a stack of frames, `planes x height x width`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectMask {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
    pub labels: Vec<ObjectId>,
}

impl ObjectMask {
    pub fn new(planes: usize, height: usize, width: usize) -> Self {
        ObjectMask { planes, height, width, labels: vec![ObjectId::Background; planes * height * width] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, plane: usize, y: usize, x: usize) -> ObjectId {
        self.labels[(plane * self.height + y) * self.width + x]
    }

    pub fn count(&self, plane: usize, id: ObjectId) -> usize {
        let n = self.height * self.width;
        self.labels[plane * n..(plane + 1) * n].iter().filter(|&&l| l == id).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.labels.iter().map(|&l| l as u8).collect()
    }
}

/// Labels the pixels of each state from its ground-truth geometry. Pixels
/// covered by several objects take the label of the one drawn last.
pub fn label_objects(history: &[EnvState; 4]) -> ObjectMask {
    let (w, h) = (WIDTH as usize, HEIGHT as usize);
    let mut mask = ObjectMask::new(4, h, w);
    for (plane, state) in history.iter().enumerate() {
        let base = plane * w * h;
        for (id, rects) in object_layers(state) {
            for r in &rects {
                for (x, y) in r.pixels() {
                    mask.labels[base + y as usize * w + x as usize] = id;
                }
            }
        }
    }
    mask
}

/// Axis-aligned boxes of every visible object in one state. Walls yield two
/// boxes; scores yield their fixed glyph region.
pub fn object_boxes(state: &EnvState) -> Vec<(ObjectId, Rect)> {
    use super::geometry::*;
    let mut boxes = vec![
        (ObjectId::Walls, TOP_WALL),
        (ObjectId::Walls, BOTTOM_WALL),
        (ObjectId::ScoreOpponent, score_region(OPPONENT_SCORE_X)),
        (ObjectId::ScoreAgent, score_region(AGENT_SCORE_X)),
        (ObjectId::OpponentPaddle, state.opponent_paddle_rect()),
        (ObjectId::AgentPaddle, state.agent_paddle_rect()),
        (ObjectId::B1, state.b1.rect()),
    ];
    if let Some(b2) = state.b2 {
        boxes.push((ObjectId::B2, b2.rect()));
    }
    boxes
}

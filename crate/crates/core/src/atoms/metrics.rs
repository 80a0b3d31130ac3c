use std::fmt;

use serde::{Deserialize, Serialize};

use super::InputSet;
use crate::env::{ObjectId, ObjectMask};
use crate::error::Result;
use crate::lrp::{select_neurons, LrpModel, RelevanceInit};
use crate::net::Network;
use crate::scalar::Scalar;

/// Mean relevance per object, over the object's pixels with nonzero
/// relevance.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectMeanRelevance {
    pub means: Vec<f64>,
    /// Nonzero-relevance pixels per object.
    pub counts: Vec<usize>,
}

/// `objects` fixes the order of the output.
pub fn object_mean_relevance<T: Scalar>(map: &[T], mask: &ObjectMask, objects: &[ObjectId]) -> ObjectMeanRelevance {
    assert_eq!(map.len(), mask.len(), "map and mask must be aligned");
    let mut slot = [usize::MAX; 8];
    for (i, &o) in objects.iter().enumerate() {
        slot[o as usize] = i;
    }
    let mut sums = vec![0.0f64; objects.len()];
    let mut counts = vec![0usize; objects.len()];
    for (&r, &label) in map.iter().zip(&mask.labels) {
        let s = slot[label as usize];
        if s != usize::MAX && r != T::zero() {
            sums[s] += r.to_f64_lossy();
            counts[s] += 1;
        }
    }
    let means = sums.iter().zip(&counts).map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    ObjectMeanRelevance { means, counts }
}

/// A subset of objects as a bit set over object ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct ObjectSet(pub u8);

impl ObjectSet {
    pub fn from_objects(objects: &[ObjectId]) -> Self {
        ObjectSet(objects.iter().fold(0, |acc, &o| acc | (1u8 << o as u8)))
    }

    pub fn contains(self, o: ObjectId) -> bool {
        self.0 & (1 << o as u8) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in ascending id order.
    pub fn objects(self) -> Vec<ObjectId> {
        ObjectId::ALL.into_iter().filter(|&o| self.contains(o)).collect()
    }

    /// Every nonempty subset of `objects`, ordered by their sorted id lists.
    pub fn all_subsets(objects: &[ObjectId]) -> Vec<ObjectSet> {
        let mut sorted = objects.to_vec();
        sorted.sort();
        let mut out: Vec<ObjectSet> = (1u32..1 << sorted.len())
            .map(|bits| ObjectSet::from_objects(&sorted.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &o)| o).collect::<Vec<_>>()))
            .collect();
        out.sort_by_key(|s| s.objects());
        out
    }
}

impl fmt::Display for ObjectSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.objects().iter().map(|o| o.name()).collect();
        f.write_str(&names.join("+"))
    }
}

/// The subset a neuron attends to at threshold `alpha`: every object above
/// `alpha` times the largest mean, provided all other objects are exactly
/// zero. `None` means the neuron's relevance counts as noise.
pub fn attention_subset(means: &[f64], objects: &[ObjectId], alpha: f64) -> Option<ObjectSet> {
    let m = means.iter().copied().fold(0.0f64, f64::max);
    let beta = alpha * m;
    let mut set = 0u8;
    for (&v, &o) in means.iter().zip(objects) {
        if v > beta {
            set |= 1 << o as u8;
        } else if v != 0.0 {
            return None;
        }
    }
    (set != 0).then_some(ObjectSet(set))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuronProfile {
    pub neuron: usize,
    /// F_c relevance of the neuron for this input.
    pub relevance: f64,
    /// Object means of the neuron's normalized map, aligned with the object
    /// list of the profiles.
    pub means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputProfile {
    pub neurons: Vec<NeuronProfile>,
}

/// Everything the metrics need from the relevance pass, computed once per
/// input set and reused across thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionProfiles {
    pub objects: Vec<ObjectId>,
    pub inputs: Vec<InputProfile>,
    /// Inputs skipped because no logit was positive.
    pub degenerate: usize,
}

impl AttentionProfiles {
    /// Average over used inputs of the selected neurons' relevance.
    pub fn selected_mass(&self) -> f64 {
        let n = self.inputs.len();
        if n == 0 {
            return 0.0;
        }
        self.inputs.iter().flat_map(|x| &x.neurons).map(|p| p.relevance).sum::<f64>() / n as f64
    }
}

pub fn compute_profiles<T: Scalar>(net: &Network<T>, inputs: &InputSet, fraction: f64, init: RelevanceInit) -> Result<AttentionProfiles> {
    let objects = inputs.objects();
    let model = LrpModel::new(net);
    let mut out = AttentionProfiles { objects: objects.clone(), inputs: Vec::new(), degenerate: 0 };
    for (obs, mask) in inputs.observations.iter().zip(&inputs.masks) {
        let trace = net.forward(obs, true)?;
        let fc = model.relevance_fc(&trace, init)?;
        if fc.degenerate || fc.total() <= T::zero() {
            out.degenerate += 1;
            continue;
        }
        let selection = select_neurons(&fc.values, fraction)?;
        let prepared = model.prepare(&trace)?;
        let mut neurons = Vec::with_capacity(selection.indices.len());
        for &k in &selection.indices {
            let map = model.neuron_map(&prepared, k)?;
            let means = object_mean_relevance(&map.normalized(), mask, &objects).means;
            neurons.push(NeuronProfile { neuron: k, relevance: fc.values[k].to_f64_lossy(), means });
        }
        out.inputs.push(InputProfile { neurons });
    }
    Ok(out)
}

/// Relevance-weighted mean attention per object.
pub fn hierarchical_attention(profiles: &AttentionProfiles) -> Vec<(ObjectId, f64)> {
    let mut h = vec![0.0f64; profiles.objects.len()];
    for p in profiles.inputs.iter().flat_map(|x| &x.neurons) {
        for (acc, &m) in h.iter_mut().zip(&p.means) {
            *acc += p.relevance * m;
        }
    }
    let n = profiles.inputs.len().max(1) as f64;
    profiles.objects.iter().copied().zip(h.into_iter().map(|v| v / n)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombinatorialAttention {
    pub alpha: f64,
    /// Every nonempty subset of the object set, in canonical order.
    pub c: Vec<(ObjectSet, f64)>,
    pub noise: f64,
}

impl CombinatorialAttention {
    pub fn get(&self, set: ObjectSet) -> f64 {
        self.c.iter().find(|(s, _)| *s == set).map_or(0.0, |(_, v)| *v)
    }

    pub fn total(&self) -> f64 {
        self.c.iter().map(|(_, v)| v).sum::<f64>() + self.noise
    }
}

pub fn combinatorial_attention(profiles: &AttentionProfiles, alpha: f64) -> CombinatorialAttention {
    let subsets = ObjectSet::all_subsets(&profiles.objects);
    let mut mass = vec![0.0f64; 256];
    let mut noise = 0.0;
    for p in profiles.inputs.iter().flat_map(|x| &x.neurons) {
        match attention_subset(&p.means, &profiles.objects, alpha) {
            Some(t) => mass[t.0 as usize] += p.relevance,
            None => noise += p.relevance,
        }
    }
    let n = profiles.inputs.len().max(1) as f64;
    CombinatorialAttention { alpha, c: subsets.into_iter().map(|s| (s, mass[s.0 as usize] / n)).collect(), noise: noise / n }
}

/// `0, 0.05, ..., 1`.
pub fn alpha_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn alpha_sweep(profiles: &AttentionProfiles, grid: &[f64]) -> Vec<CombinatorialAttention> {
    grid.iter().map(|&a| combinatorial_attention(profiles, a)).collect()
}

/// Coarse grouping of subsets for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Noise,
    BallsOnly,
    OpponentAndBalls,
    AgentInclusive,
    ScoreInclusive,
    /// Subsets outside the groups above, such as walls or the opponent alone.
    Other,
}

impl Category {
    pub const ALL: [Category; 6] =
        [Category::Noise, Category::BallsOnly, Category::OpponentAndBalls, Category::AgentInclusive, Category::ScoreInclusive, Category::Other];

    pub fn of(set: ObjectSet) -> Category {
        use ObjectId::*;
        let has_ball = set.contains(B1) || set.contains(B2);
        let balls_and_opponent = ObjectSet::from_objects(&[B1, B2, OpponentPaddle]).0;
        if set.contains(ScoreAgent) || set.contains(ScoreOpponent) {
            Category::ScoreInclusive
        } else if set.contains(AgentPaddle) {
            Category::AgentInclusive
        } else if has_ball && set.0 & !balls_and_opponent == 0 {
            if set.contains(OpponentPaddle) {
                Category::OpponentAndBalls
            } else {
                Category::BallsOnly
            }
        } else {
            Category::Other
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Noise => "noise",
            Category::BallsOnly => "balls_only",
            Category::OpponentAndBalls => "opponent_and_balls",
            Category::AgentInclusive => "agent_inclusive",
            Category::ScoreInclusive => "score_inclusive",
            Category::Other => "other",
        }
    }
}

pub fn category_rollup(c: &CombinatorialAttention) -> Vec<(Category, f64)> {
    let mut sums = [0.0f64; 6];
    sums[0] = c.noise;
    for &(set, v) in &c.c {
        sums[Category::ALL.iter().position(|&k| k == Category::of(set)).expect("listed")] += v;
    }
    Category::ALL.into_iter().zip(sums).collect()
}

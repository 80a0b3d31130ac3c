use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{choose, PolicyMode};
use crate::env::{
    label_objects, object_boxes, Action, EnvConfig, EnvState, GameVariant, ObjectId, ObjectMask, Observation, PongEnv, STACK,
};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::net::Network;
use crate::scalar::Scalar;
use crate::seed::derive_seed;

/// Sampled observations with their pixel labels.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSet {
    pub variant: GameVariant,
    pub observations: Vec<Observation>,
    pub masks: Vec<ObjectMask>,
    /// `(episode, frame index)` of each sample.
    pub provenance: Vec<(usize, u64)>,
    /// Frames that passed the filter before sampling.
    pub survivors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSetManifest {
    pub variant: GameVariant,
    pub count: usize,
    pub shape: [usize; 3],
    pub survivors: usize,
    pub provenance: Vec<(usize, u64)>,
}

impl InputSet {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn objects(&self) -> Vec<ObjectId> {
        ObjectId::variant_objects(self.variant)
    }

    /// Writes `observations.bin`, `masks.bin` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let shape = self.observations.first().map(|o| [o.planes, o.height, o.width]).unwrap_or([0; 3]);
        let obs: Vec<u8> = self.observations.iter().flat_map(|o| o.data.iter().copied()).collect();
        let masks: Vec<u8> = self.masks.iter().flat_map(|m| m.to_bytes()).collect();
        write_atomic(&dir.join("observations.bin"), &obs)?;
        write_atomic(&dir.join("masks.bin"), &masks)?;
        let manifest = InputSetManifest {
            variant: self.variant,
            count: self.len(),
            shape,
            survivors: self.survivors,
            provenance: self.provenance.clone(),
        };
        write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: InputSetManifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
        let [p, h, w] = manifest.shape;
        let n = p * h * w;
        let obs = std::fs::read(dir.join("observations.bin"))?;
        let masks = std::fs::read(dir.join("masks.bin"))?;
        if obs.len() != n * manifest.count || masks.len() != n * manifest.count || manifest.provenance.len() != manifest.count {
            return Err(Error::Shape("input set files disagree with manifest".into()));
        }
        let observations = obs.chunks_exact(n.max(1)).take(manifest.count).map(|c| Observation { planes: p, height: h, width: w, data: c.to_vec() }).collect();
        let masks = masks
            .chunks_exact(n.max(1))
            .take(manifest.count)
            .map(|c| {
                let labels = c
                    .iter()
                    .map(|&b| ObjectId::from_u8(b).ok_or_else(|| Error::Validation(format!("bad object label {b}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ObjectMask { planes: p, height: h, width: w, labels })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InputSet { variant: manifest.variant, observations, masks, provenance: manifest.provenance, survivors: manifest.survivors })
    }
}

/// Every object of the variant is visible and no two objects' boxes overlap,
/// in each of the stacked states.
pub fn frame_passes_filter(history: &[EnvState; STACK], mask: &ObjectMask, objects: &[ObjectId]) -> bool {
    for (plane, state) in history.iter().enumerate() {
        if objects.iter().any(|&o| mask.count(plane, o) == 0) {
            return false;
        }
        let boxes: Vec<_> = object_boxes(state).into_iter().filter(|(id, _)| objects.contains(id)).collect();
        for (i, (a, ra)) in boxes.iter().enumerate() {
            for (b, rb) in &boxes[i + 1..] {
                if a != b && ra.intersects(rb) {
                    return false;
                }
            }
        }
    }
    true
}

/// Plays `episodes` games with `net` and samples `n` filtered frames
/// uniformly without replacement.
pub fn record_input_set<T: Scalar>(
    net: &Network<T>,
    variant: GameVariant,
    config: &EnvConfig,
    episodes: usize,
    n: usize,
    policy: PolicyMode,
    seed: u64,
) -> Result<InputSet> {
    let objects = ObjectId::variant_objects(variant);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut policy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut reservoir: Vec<(usize, u64, Observation, ObjectMask)> = Vec::with_capacity(n);
    let mut survivors = 0usize;

    for episode in 0..episodes {
        let mut env = PongEnv::new(variant, config, derive_seed(seed, 2 + episode as u64))?;
        loop {
            let history = env.history_array();
            let mask = label_objects(&history);
            let obs = env.observation();
            if frame_passes_filter(&history, &mask, &objects) {
                let item = (episode, env.state.frame_index, obs.clone(), mask);
                if reservoir.len() < n {
                    reservoir.push(item);
                } else {
                    let j = sample_rng.random_range(0..=survivors);
                    if j < n {
                        reservoir[j] = item;
                    }
                }
                survivors += 1;
            }
            let trace = net.forward(&obs, true)?;
            let action = Action::from_index(choose(&trace.logits, policy, &mut policy_rng)).unwrap_or(Action::Noop);
            if env.step(action)?.done {
                break;
            }
        }
    }
    if survivors < n {
        return Err(Error::InsufficientFrames { found: survivors, needed: n });
    }
    reservoir.sort_by_key(|r| (r.0, r.1));
    let mut set = InputSet { variant, observations: Vec::with_capacity(n), masks: Vec::with_capacity(n), provenance: Vec::with_capacity(n), survivors };
    for (e, f, o, m) in reservoir {
        set.provenance.push((e, f));
        set.observations.push(o);
        set.masks.push(m);
    }
    Ok(set)
}

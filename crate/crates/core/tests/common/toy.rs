//! A 6x6 toy playfield with random object layouts, and a direct evaluation
//! of the attention metrics from their definitions.

use atomlab::atoms::InputSet;
use atomlab::env::{GameVariant, ObjectId, ObjectMask, Observation};
use atomlab::net::{Network, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{arch, brute_fc_relevance, brute_neuron_map, jittered_net};

pub const SIDE: usize = 6;

pub fn toy_net(seed: u64) -> Network<f64> {
    let a = arch(Volume { channels: 4, height: SIDE, width: SIDE }, [(3, 2, 1), (4, 2, 1), (4, 2, 1)], 12);
    let mut net = jittered_net(&a, seed, 0.2);
    let actor_bias = net.params().len() - 3;
    net.params_mut()[actor_bias].iter_mut().for_each(|b| *b += 0.3);
    net
}

/// Random labels per pixel; a random subset of objects is dark in every
/// plane so that exact zeros occur.
pub fn toy_inputs(seed: u64, n: usize) -> InputSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = 4 * SIDE * SIDE;
    let mut set = InputSet { variant: GameVariant::V1, observations: vec![], masks: vec![], provenance: vec![], survivors: n };
    for i in 0..n {
        let labels: Vec<ObjectId> = (0..len).map(|_| ObjectId::ALL[rng.random_range(0..8)]).collect();
        let dark: Vec<bool> = (0..8).map(|_| rng.random_bool(0.45)).collect();
        let data = labels.iter().map(|&l| if dark[l as usize] { 0 } else { rng.random_range(1..=255) }).collect();
        set.observations.push(Observation { planes: 4, height: SIDE, width: SIDE, data });
        set.masks.push(ObjectMask { planes: 4, height: SIDE, width: SIDE, labels });
        set.provenance.push((0, i as u64));
    }
    set
}

pub struct Definitional {
    pub h: Vec<f64>,
    /// Mass per subset bit pattern over object ids.
    pub c: Vec<f64>,
    pub noise: f64,
    pub selected_mass: f64,
    pub used: usize,
}

/// Evaluates the metrics straight from their definitions with explicit
/// loops, using the dense relevance oracle.
pub fn definitional(net: &Network<f64>, inputs: &InputSet, alpha: f64, fraction: f64) -> Definitional {
    let objects = ObjectId::variant_objects(inputs.variant);
    let mut h = vec![0.0; objects.len()];
    let mut c = vec![0.0; 256];
    let mut noise = 0.0;
    let mut selected = 0.0;
    let mut used = 0;
    for (obs, mask) in inputs.observations.iter().zip(&inputs.masks) {
        let t = net.forward(obs, true).unwrap();
        if t.logits.iter().all(|&l| l <= 0.0) {
            continue;
        }
        used += 1;
        let r = brute_fc_relevance(net, &t);
        let total: f64 = r.iter().sum();
        // Selection: greedily add the largest remaining relevance.
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).unwrap().then(a.cmp(&b)));
        let mut s = Vec::new();
        let mut acc = 0.0;
        for &k in &order {
            s.push(k);
            acc += r[k];
            if acc >= fraction * total {
                break;
            }
        }
        for &k in &s {
            let (map, _) = brute_neuron_map(net, &t, k);
            let sum: f64 = map.iter().sum();
            let map: Vec<f64> = if sum > 0.0 { map.iter().map(|v| v / sum).collect() } else { map };
            let mut means = vec![0.0; objects.len()];
            for (g, &o) in objects.iter().enumerate() {
                let mut acc = 0.0;
                let mut v = 0;
                for p in 0..map.len() {
                    if mask.labels[p] == o && map[p] != 0.0 {
                        acc += map[p];
                        v += 1;
                    }
                }
                means[g] = if v > 0 { acc / v as f64 } else { 0.0 };
                h[g] += r[k] * means[g];
            }
            selected += r[k];
            let m = means.iter().copied().fold(0.0, f64::max);
            let beta = alpha * m;
            // Every subset T of the object set, checked independently.
            let mut hits = 0;
            for bits in 1u32..1 << objects.len() {
                let in_t = |g: usize| bits >> g & 1 == 1;
                let qualifies = (0..objects.len()).all(|g| if in_t(g) { means[g] > beta } else { means[g] == 0.0 });
                if qualifies {
                    hits += 1;
                    let key = (0..objects.len()).filter(|&g| in_t(g)).fold(0usize, |acc, g| acc | 1 << objects[g] as usize);
                    c[key] += r[k];
                }
            }
            assert!(hits <= 1, "more than one subset qualified");
            if hits == 0 {
                noise += r[k];
            }
        }
    }
    let n = used.max(1) as f64;
    Definitional {
        h: h.iter().map(|v| v / n).collect(),
        c: c.iter().map(|v| v / n).collect(),
        noise: noise / n,
        selected_mass: selected / n,
        used,
    }
}

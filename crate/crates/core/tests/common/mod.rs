//! Shared builders and brute-force oracles for the integration tests.
#![allow(dead_code)]

pub mod fd;
pub mod toy;

use atomlab::net::{conv_output, ConvSpec, ForwardTrace, Network, NetworkArch, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn arch(input: Volume, convs: [(usize, usize, usize); 3], fc_width: usize) -> NetworkArch {
    NetworkArch {
        input,
        conv_layers: convs.iter().map(|&(out_channels, kernel, stride)| ConvSpec { out_channels, kernel, stride }).collect(),
        fc_width,
        n_actions: 3,
    }
}

/// A random small architecture with at most `max_params` parameters.
pub fn random_tiny_arch(rng: &mut ChaCha8Rng, max_params: usize) -> NetworkArch {
    loop {
        let c = rng.random_range(1..=2);
        let s = rng.random_range(5..=8);
        let input = Volume { channels: c, height: s, width: s };
        let mut convs = [(0, 0, 0); 3];
        let mut vol = input;
        let mut ok = true;
        for conv in &mut convs {
            let k = rng.random_range(1..=3);
            let st = rng.random_range(1..=2);
            if k > vol.height {
                ok = false;
                break;
            }
            *conv = (rng.random_range(1..=3), k, st);
            vol = conv_output(vol, &ConvSpec { out_channels: conv.0, kernel: k, stride: st });
        }
        if !ok {
            continue;
        }
        let a = arch(input, convs, rng.random_range(2..=6));
        if a.validate().is_ok() && a.param_count() <= max_params {
            return a;
        }
    }
}

/// Orthogonally initialised network with every parameter jittered so that
/// biases are nonzero and activations vary.
pub fn jittered_net(arch: &NetworkArch, seed: u64, scale: f64) -> Network<f64> {
    let mut net = Network::<f64>::init(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    for p in net.params_mut() {
        for v in p.iter_mut() {
            *v += rng.random_range(-scale..scale);
        }
    }
    net
}

pub fn random_input(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() }).collect()
}

/// Dense `n_out x n_in` matrix of a convolution layer.
pub fn unfold_conv(weight: &[f64], input: Volume, conv: &ConvSpec) -> Vec<Vec<f64>> {
    let out = conv_output(input, conv);
    let k = conv.kernel;
    let mut m = vec![vec![0.0; input.len()]; out.len()];
    for oc in 0..out.channels {
        for oy in 0..out.height {
            for ox in 0..out.width {
                let j = (oc * out.height + oy) * out.width + ox;
                for c in 0..input.channels {
                    for ky in 0..k {
                        for kx in 0..k {
                            let i = (c * input.height + oy * conv.stride + ky) * input.width + ox * conv.stride + kx;
                            m[j][i] = weight[((oc * input.channels + c) * k + ky) * k + kx];
                        }
                    }
                }
            }
        }
    }
    m
}

pub fn dense(weight: &[f64], n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    (0..n_out).map(|j| weight[j * n_in..(j + 1) * n_in].to_vec()).collect()
}

/// Explicit z+ step: materialises `q_ij = x_i w+_ij` and divides by the
/// column sums. Returns the lower relevance and the absorbed mass.
pub fn brute_step(w: &[Vec<f64>], x: &[f64], upper: &[f64]) -> (Vec<f64>, f64) {
    let mut lower = vec![0.0; x.len()];
    let mut absorbed = 0.0;
    for (j, row) in w.iter().enumerate() {
        let q: Vec<f64> = x.iter().zip(row).map(|(&xi, &wij)| xi * wij.max(0.0)).collect();
        let z: f64 = q.iter().sum();
        if z == 0.0 {
            absorbed += upper[j];
            continue;
        }
        for (l, qi) in lower.iter_mut().zip(&q) {
            *l += qi / z * upper[j];
        }
    }
    (lower, absorbed)
}

/// Dense matrices of the three convolutions, F_c and the actor.
pub fn dense_layers(net: &Network<f64>) -> Vec<Vec<Vec<f64>>> {
    let a = net.arch();
    let mut layers: Vec<_> = (0..3).map(|i| unfold_conv(net.conv_weight(i), a.conv_input(i), &a.conv_layers[i])).collect();
    layers.push(dense(net.fc_weight(), a.fc_width, a.flat_dim()));
    layers.push(dense(net.actor_weight(), a.n_actions, a.fc_width));
    layers
}

/// F_c relevance from clamped logits.
pub fn brute_fc_relevance(net: &Network<f64>, t: &ForwardTrace<f64>) -> Vec<f64> {
    let layers = dense_layers(net);
    let seed: Vec<f64> = t.logits.iter().map(|v| v.max(0.0)).collect();
    brute_step(&layers[4], &t.fc_post, &seed).0
}

/// Input relevance of F_c neuron `k`, starting from unit mass.
pub fn brute_neuron_map(net: &Network<f64>, t: &ForwardTrace<f64>, k: usize) -> (Vec<f64>, f64) {
    let layers = dense_layers(net);
    let mut r = vec![0.0; net.arch().fc_width];
    if t.fc_post[k] == 0.0 {
        return (vec![0.0; t.input.len()], 0.0);
    }
    r[k] = 1.0;
    let mut absorbed = 0.0;
    for i in (0..4).rev() {
        let (lower, a) = brute_step(&layers[i], t.layer_input(i), &r);
        absorbed += a;
        r = lower;
    }
    (r, absorbed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

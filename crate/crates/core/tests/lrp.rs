mod common;

use atomlab::env::{PongEnv, GameVariant, EnvConfig};
use atomlab::lrp::{
    lrp_backward_step, neuron_relevance_map, read_map, relevance_fc, select_neurons, write_map, Layer, LrpModel, RelevanceInit,
};
use atomlab::net::{conv_output, ConvSpec, Network, NetworkArch, Volume};
use atomlab::Error;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn conv_step_conserves_relevance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let input = Volume { channels: 2, height: 6, width: 6 };
        let conv = ConvSpec { out_channels: 3, kernel: 3, stride: rng.random_range(1..=2) };
        let out = conv_output(input, &conv);
        let w: Vec<f64> = (0..3 * 2 * 9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..input.len()).map(|_| rng.random_range(0.1..1.0)).collect();
        let upper: Vec<f64> = (0..out.len()).map(|_| rng.random::<f64>()).collect();
        let s = lrp_backward_step(&Layer::Conv { weight: &w, conv, input }, &x, &upper);
        let total: f64 = upper.iter().sum();
        let lower: f64 = s.lower.iter().sum();
        assert!(((lower + s.absorbed) - total).abs() <= 1e-9 * total);
        if s.absorbed == 0.0 {
            assert!((lower - total).abs() <= 1e-9 * total);
        }
        assert!(s.lower.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn pipeline_matches_dense_oracle_on_random_tiny_nets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let arch = random_tiny_arch(&mut rng, 500);
        let net = jittered_net(&arch, case, 0.3);
        let trace = net.forward_scaled(vec![random_input(&mut rng, arch.input.len())]).unwrap().pop().unwrap();
        let fc = relevance_fc(&net, &trace, RelevanceInit::ClampedLogits).unwrap();
        if !fc.degenerate {
            assert!(max_abs_diff(&fc.values, &brute_fc_relevance(&net, &trace)) <= 1e-9, "case {case}");
        }
        for k in 0..arch.fc_width {
            let map = neuron_relevance_map(&net, &trace, k).unwrap();
            let (oracle, absorbed) = brute_neuron_map(&net, &trace, k);
            assert!(max_abs_diff(&map.values, &oracle) <= 1e-9, "case {case} neuron {k}");
            assert!((map.absorbed - absorbed).abs() <= 1e-9);
            if !map.inactive {
                assert!((map.total() + map.absorbed - 1.0).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn single_layer_map_is_one_rule_application() {
    let w = [1.0f64, 2.0, -1.0, 0.5, 0.5, 3.0];
    let x = [0.2, 0.4, 0.6];
    let s = lrp_backward_step(&Layer::Linear { weight: &w, n_out: 2, n_in: 3 }, &x, &[1.0, 0.0]);
    let z: f64 = 0.2 * 1.0 + 0.4 * 2.0;
    assert!((s.lower[0] - 0.2 / z).abs() < 1e-15);
    assert!((s.lower[1] - 0.8 / z).abs() < 1e-15);
    assert_eq!(s.lower[2], 0.0);
}

#[test]
fn one_hot_logit_concentrates_on_positive_weights() {
    let arch = arch(Volume { channels: 1, height: 3, width: 3 }, [(1, 1, 1), (1, 1, 1), (1, 1, 1)], 3);
    let mut net = Network::<f64>::init(&arch, 0).unwrap();
    let specs = net.tensor_specs();
    for (spec, p) in specs.iter().zip(net.params_mut()) {
        for v in p.iter_mut() {
            *v = if spec.name.ends_with("bias") { 0.0 } else { 1.0 };
        }
        if spec.name == "actor.weight" {
            p.copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        }
        if spec.name == "actor.bias" {
            p.copy_from_slice(&[2.0, -5.0, -5.0]);
        }
    }
    let trace = net.forward_scaled(vec![vec![0.5; 9]]).unwrap().pop().unwrap();
    let fc = relevance_fc(&net, &trace, RelevanceInit::ClampedLogits).unwrap();
    assert!(fc.values[0] > 0.0);
    assert_eq!(&fc.values[1..], &[0.0, 0.0]);
    assert!((fc.values[0] - trace.logits[0]).abs() < 1e-12);
}

#[test]
fn negative_logits_are_degenerate() {
    let arch = arch(Volume { channels: 1, height: 4, width: 4 }, [(1, 2, 1), (1, 2, 1), (1, 1, 1)], 2);
    let mut net = jittered_net(&arch, 3, 0.1);
    let last = net.params().len() - 3;
    net.params_mut()[last].iter_mut().for_each(|b| *b = -100.0);
    let trace = net.forward_scaled(vec![vec![0.5; 16]]).unwrap().pop().unwrap();
    let fc = relevance_fc(&net, &trace, RelevanceInit::ClampedLogits).unwrap();
    assert!(fc.degenerate);
    assert!(matches!(select_neurons(&fc.values, 0.9), Err(Error::Degenerate(_))));
    let fc = relevance_fc(&net, &trace, RelevanceInit::ArgmaxLogit).unwrap();
    assert!(fc.degenerate);
}

#[test]
fn inactive_neuron_gives_zero_map() {
    let arch = arch(Volume { channels: 1, height: 4, width: 4 }, [(1, 2, 1), (1, 2, 1), (1, 1, 1)], 2);
    let mut net = jittered_net(&arch, 3, 0.1);
    let fc_bias = 7;
    assert_eq!(net.tensor_specs()[fc_bias].name, "fc.bias");
    net.params_mut()[fc_bias][1] = -100.0;
    let trace = net.forward_scaled(vec![vec![0.5; 16]]).unwrap().pop().unwrap();
    let map = neuron_relevance_map(&net, &trace, 1).unwrap();
    assert!(map.inactive);
    assert!(map.values.iter().all(|&v| v == 0.0));
}

#[test]
fn default_arch_map_sums_to_one() {
    let net = Network::<f64>::init(&NetworkArch::default(), 4).unwrap();
    let mut env = PongEnv::new(GameVariant::V1, &EnvConfig::default(), 2).unwrap();
    for _ in 0..6 {
        env.step(atomlab::env::Action::Up).unwrap();
    }
    let trace = net.forward(&env.observation(), true).unwrap();
    let model = LrpModel::new(&net);
    let prepared = model.prepare(&trace).unwrap();
    let mut checked = 0;
    for k in (0..512).step_by(37) {
        let map = model.neuron_map(&prepared, k).unwrap();
        if map.inactive {
            continue;
        }
        checked += 1;
        assert!(map.values.iter().all(|&v| v >= 0.0));
        if map.absorbed == 0.0 {
            assert!((map.total() - 1.0).abs() <= 1e-6);
        } else {
            assert!((map.total() + map.absorbed - 1.0).abs() <= 1e-6);
        }
        for (v, &x) in map.values.iter().zip(&trace.input) {
            if x == 0.0 {
                assert_eq!(*v, 0.0);
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn stale_trace_is_rejected() {
    let arch = arch(Volume { channels: 1, height: 4, width: 4 }, [(1, 2, 1), (1, 2, 1), (1, 1, 1)], 2);
    let mut net = jittered_net(&arch, 3, 0.1);
    let trace = net.forward_scaled(vec![vec![0.5; 16]]).unwrap().pop().unwrap();
    net.params_mut()[0][0] += 1.0;
    assert!(matches!(neuron_relevance_map(&net, &trace, 0), Err(Error::StaleTrace { .. })));
}

#[test]
fn exported_map_round_trips() {
    let arch = arch(Volume { channels: 1, height: 4, width: 4 }, [(1, 2, 1), (1, 2, 1), (1, 1, 1)], 2);
    let net = jittered_net(&arch, 9, 0.1);
    let trace = net.forward_scaled(vec![vec![0.5; 16]]).unwrap().pop().unwrap();
    let map = neuron_relevance_map(&net, &trace, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.f32");
    write_map(&path, &map, 3).unwrap();
    let (values, sidecar) = read_map(&path).unwrap();
    assert_eq!(sidecar.input_id, 3);
    assert_eq!(sidecar.neuron, 0);
    assert_eq!(values.len(), 16);
    for (a, b) in values.iter().zip(&map.values) {
        assert_eq!(*a, *b as f32);
    }
}

/// Smallest prefix by exhaustive scan over subsets: the minimum subset size
/// reaching the fraction, which a sorted prefix must match.
fn min_covering_size(v: &[f64], fraction: f64) -> usize {
    let total: f64 = v.iter().sum();
    (0u32..1 << v.len())
        .filter(|m| (0..v.len()).filter(|i| m >> i & 1 == 1).map(|i| v[i]).sum::<f64>() >= fraction * total)
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap()
}

proptest! {
    #[test]
    fn selection_is_minimal(v in prop::collection::vec(0.0f64..1.0, 1..=12)) {
        prop_assume!(v.iter().sum::<f64>() > 0.0);
        let s = select_neurons(&v, 0.9).unwrap();
        prop_assert_eq!(s.indices.len(), min_covering_size(&v, 0.9));
        prop_assert!(s.covered_fraction >= 0.9 - 1e-12);
        for w in s.indices.windows(2) {
            prop_assert!(v[w[0]] > v[w[1]] || (v[w[0]] == v[w[1]] && w[0] < w[1]));
        }
        let total: f64 = v.iter().sum();
        let without_last: f64 = s.indices[..s.indices.len() - 1].iter().map(|&i| v[i]).sum();
        prop_assert!(without_last < 0.9 * total);
    }

    #[test]
    fn linear_step_conserves(
        w in prop::collection::vec(-1.0f64..1.0, 12),
        x in prop::collection::vec(0.0f64..1.0, 4),
        r in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let s = lrp_backward_step(&Layer::Linear { weight: &w, n_out: 3, n_in: 4 }, &x, &r);
        let total: f64 = r.iter().sum();
        let lower: f64 = s.lower.iter().sum();
        prop_assert!((lower + s.absorbed - total).abs() <= 1e-12 * (1.0 + total));
        prop_assert!(s.lower.iter().all(|&v| v >= 0.0));
    }
}

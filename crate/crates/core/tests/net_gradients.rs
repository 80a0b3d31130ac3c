use atomlab::env::Observation;
use atomlab::net::{backward, ConvSpec, Gradients, Network, NetworkArch, OutputGrad, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_arch() -> NetworkArch {
    NetworkArch {
        input: Volume { channels: 2, height: 7, width: 7 },
        conv_layers: vec![
            ConvSpec { out_channels: 3, kernel: 3, stride: 2 },
            ConvSpec { out_channels: 2, kernel: 2, stride: 1 },
            ConvSpec { out_channels: 2, kernel: 1, stride: 1 },
        ],
        fc_width: 4,
        n_actions: 3,
    }
}

fn random_obs(rng: &mut ChaCha8Rng, arch: &NetworkArch) -> Observation {
    let v = arch.input;
    Observation {
        planes: v.channels,
        height: v.height,
        width: v.width,
        data: (0..v.len()).map(|_| rng.random()).collect(),
    }
}

fn objective(net: &Network<f64>, obs: &[Observation], g: &[OutputGrad<f64>]) -> f64 {
    obs.iter()
        .zip(g)
        .map(|(o, g)| {
            let t = net.forward(o, true).unwrap();
            t.logits.iter().zip(&g.dlogits).map(|(a, b)| a * b).sum::<f64>() + t.value * g.dvalue
        })
        .sum()
}

fn sign_pattern(net: &Network<f64>, obs: &[Observation]) -> Vec<bool> {
    obs.iter()
        .flat_map(|o| {
            let t = net.forward(o, true).unwrap();
            let mut s: Vec<bool> = t.conv_pre.iter().flatten().map(|&v| v > 0.0).collect();
            s.extend(t.fc_pre.iter().map(|&v| v > 0.0));
            s
        })
        .collect()
}

/// Central differences over every parameter, step 1e-3. Coordinates whose
/// perturbation flips a rectifier are returned as `None`: the objective is
/// not differentiable across the kink.
fn finite_difference(net: &Network<f64>, obs: &[Observation], g: &[OutputGrad<f64>]) -> Vec<Vec<Option<f64>>> {
    let h = 1e-3;
    let base = sign_pattern(net, obs);
    let mut work = net.clone();
    let mut out = Vec::new();
    for ti in 0..net.params().len() {
        let mut grad = Vec::new();
        for pi in 0..net.params()[ti].len() {
            let orig = work.params()[ti][pi];
            work.params_mut()[ti][pi] = orig + h;
            let plus = objective(&work, obs, g);
            let smooth_plus = sign_pattern(&work, obs) == base;
            work.params_mut()[ti][pi] = orig - h;
            let minus = objective(&work, obs, g);
            let smooth_minus = sign_pattern(&work, obs) == base;
            work.params_mut()[ti][pi] = orig;
            grad.push((smooth_plus && smooth_minus).then(|| (plus - minus) / (2.0 * h)));
        }
        out.push(grad);
    }
    out
}

/// Norm-wise relative error over the coordinates where the oracle is defined.
/// Also returns how many coordinates were skipped.
fn rel_err(a: &[Vec<f64>], b: &[Vec<Option<f64>>]) -> (f64, usize) {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .filter_map(|(&x, y)| y.map(|y| (x, y)))
        .collect();
    let skipped = b.iter().flatten().filter(|v| v.is_none()).count();
    let diff: f64 = pairs.iter().map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = pairs.iter().map(|(x, _)| x * x).sum::<f64>().sqrt();
    let nb: f64 = pairs.iter().map(|(_, y)| y * y).sum::<f64>().sqrt();
    (diff / na.max(nb).max(1e-12), skipped)
}

#[test]
fn backward_matches_central_differences_over_seeds() {
    let arch = tiny_arch();
    assert!(arch.param_count() <= 500);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::<f64>::init(&arch, seed).unwrap();
        // Random biases and larger head weights make the objective less flat.
        for p in net.params_mut().iter_mut() {
            for v in p.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        let obs: Vec<_> = (0..3).map(|_| random_obs(&mut rng, &arch)).collect();
        let g: Vec<_> = (0..3)
            .map(|_| OutputGrad {
                dlogits: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                dvalue: rng.random_range(-1.0..1.0),
            })
            .collect();
        let traces: Vec<_> = obs.iter().map(|o| net.forward(o, true).unwrap()).collect();
        let refs: Vec<_> = traces.iter().collect();
        let mut grads = Gradients::zeros_like(&net);
        backward(&net, &refs, &g, &mut grads).unwrap();
        let fd = finite_difference(&net, &obs, &g);
        let (err, skipped) = rel_err(&grads.params, &fd);
        assert!(skipped * 10 < arch.param_count(), "seed {seed}: {skipped} kinked coordinates");
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn zero_output_gradients_give_zero_gradients() {
    let arch = tiny_arch();
    let net = Network::<f64>::init(&arch, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let obs = random_obs(&mut rng, &arch);
    let t = net.forward(&obs, true).unwrap();
    let mut grads = Gradients::zeros_like(&net);
    backward(&net, &[&t], &[OutputGrad { dlogits: vec![0.0; 3], dvalue: 0.0 }], &mut grads).unwrap();
    assert!(grads.is_zero());
}

#[test]
fn inactive_fc_unit_has_zero_incoming_gradient() {
    let arch = tiny_arch();
    let mut net = Network::<f64>::init(&arch, 2).unwrap();
    // Drive F_c unit 0 negative.
    let fc_bias = 2 * 3 + 1;
    net.params_mut()[fc_bias][0] = -100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let obs = random_obs(&mut rng, &arch);
    let t = net.forward(&obs, true).unwrap();
    assert_eq!(t.fc_post[0], 0.0);
    let mut grads = Gradients::zeros_like(&net);
    backward(&net, &[&t], &[OutputGrad { dlogits: vec![1.0, -1.0, 0.5], dvalue: 1.0 }], &mut grads).unwrap();
    let flat = arch.flat_dim();
    assert!(grads.params[2 * 3][..flat].iter().all(|&g| g == 0.0));
    assert_eq!(grads.params[fc_bias][0], 0.0);
}

#[test]
fn stale_trace_is_rejected() {
    let arch = tiny_arch();
    let mut net = Network::<f64>::init(&arch, 1).unwrap();
    let obs = Observation::zeros(2, 7, 7);
    let t = net.forward(&obs, true).unwrap();
    net.params_mut()[0][0] += 1.0;
    let mut grads = Gradients::zeros_like(&net);
    let err = backward(&net, &[&t], &[OutputGrad { dlogits: vec![0.0; 3], dvalue: 0.0 }], &mut grads);
    assert!(matches!(err, Err(atomlab::Error::StaleTrace { .. })));
}

//! Central-difference check of the full A2C loss gradient.

use atomlab::net::{backward, ForwardTrace, Gradients, Network, Volume};
use atomlab::train::{a2c_loss, LossCoefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{arch, jittered_net};

pub const COEFS: LossCoefficients = LossCoefficients { entropy: 0.01, value: 0.25 };

struct Batch {
    inputs: Vec<Vec<f64>>,
    actions: Vec<usize>,
    returns: Vec<f64>,
    advantages: Vec<f64>,
}

fn loss(net: &Network<f64>, b: &Batch) -> f64 {
    let traces = net.forward_scaled(b.inputs.clone()).unwrap();
    let refs: Vec<&ForwardTrace<f64>> = traces.iter().collect();
    a2c_loss(&refs, &b.actions, &b.returns, &b.advantages, COEFS).0.total
}

fn signs(net: &Network<f64>, b: &Batch) -> Vec<bool> {
    net.forward_scaled(b.inputs.clone())
        .unwrap()
        .iter()
        .flat_map(|t| t.conv_pre.iter().flatten().chain(&t.fc_pre).map(|&v| v > 0.0).collect::<Vec<_>>())
        .collect()
}

pub struct FdReport {
    pub relative_error: f64,
    pub skipped: usize,
    pub total: usize,
}

/// Analytic gradients of a random batch on a tiny network against central
/// differences with step `h`, skipping coordinates whose perturbation
/// crosses a rectifier kink.
pub fn a2c_fd_check(seed: u64, h: f64) -> FdReport {
    let a = arch(Volume { channels: 2, height: 7, width: 7 }, [(3, 3, 2), (2, 2, 1), (2, 1, 1)], 4);
    let net = jittered_net(&a, seed, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4;
    let b = Batch {
        inputs: (0..n).map(|_| (0..a.input.len()).map(|_| rng.random::<f64>()).collect()).collect(),
        actions: (0..n).map(|_| rng.random_range(0..3)).collect(),
        returns: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        advantages: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let traces = net.forward_scaled(b.inputs.clone()).unwrap();
    let refs: Vec<&ForwardTrace<f64>> = traces.iter().collect();
    let (_, out) = a2c_loss(&refs, &b.actions, &b.returns, &b.advantages, COEFS);
    let mut grads = Gradients::zeros_like(&net);
    backward(&net, &refs, &out, &mut grads).unwrap();

    let base = signs(&net, &b);
    let mut work = net.clone();
    let (mut num, mut den, mut skipped, mut total) = (0.0, 0.0, 0, 0);
    for ti in 0..net.params().len() {
        for pi in 0..net.params()[ti].len() {
            total += 1;
            let orig = work.params()[ti][pi];
            work.params_mut()[ti][pi] = orig + h;
            let (plus, sp) = (loss(&work, &b), signs(&work, &b) == base);
            work.params_mut()[ti][pi] = orig - h;
            let (minus, sm) = (loss(&work, &b), signs(&work, &b) == base);
            work.params_mut()[ti][pi] = orig;
            if !(sp && sm) {
                skipped += 1;
                continue;
            }
            let fd = (plus - minus) / (2.0 * h);
            let an = grads.params[ti][pi];
            num += (fd - an).powi(2);
            den += fd.powi(2).max(an.powi(2));
        }
    }
    FdReport { relative_error: (num / den.max(1e-300)).sqrt(), skipped, total }
}

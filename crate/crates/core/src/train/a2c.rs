use serde::{Deserialize, Serialize};

use super::{RolloutBatch, TrainConfig};
use crate::agent::log_softmax;
use crate::error::{Error, Result};
use crate::net::{backward, ForwardTrace, Gradients, Network, OutputGrad};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoefficients {
    pub entropy: f64,
    pub value: f64,
}

/// Batch-mean A2C loss `policy - entropy_coef * entropy + value_coef * mse`
/// and its gradient with respect to every logit and value. Advantages are
/// treated as constants.
pub fn a2c_loss<T: Scalar>(
    traces: &[&ForwardTrace<T>],
    actions: &[usize],
    returns: &[f64],
    advantages: &[f64],
    coefs: LossCoefficients,
) -> (Losses, Vec<OutputGrad<T>>) {
    let n = traces.len() as f64;
    let mut losses = Losses::default();
    let mut grads = Vec::with_capacity(traces.len());
    for (i, t) in traces.iter().enumerate() {
        let logits: Vec<f64> = t.logits.iter().map(|v| v.to_f64_lossy()).collect();
        let lp = log_softmax(&logits);
        let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
        let h: f64 = -p.iter().zip(&lp).map(|(a, b)| a * b).sum::<f64>();
        let v = t.value.to_f64_lossy();
        let adv = advantages[i];
        let a = actions[i];

        losses.policy -= adv * lp[a] / n;
        losses.entropy += h / n;
        losses.value += (returns[i] - v).powi(2) / n;

        let dlogits = (0..logits.len())
            .map(|j| {
                let onehot = if j == a { 1.0 } else { 0.0 };
                let pg = -adv * (onehot - p[j]);
                let ent = coefs.entropy * p[j] * (lp[j] + h);
                T::from_f64_lossy((pg + ent) / n)
            })
            .collect();
        let dvalue = T::from_f64_lossy(coefs.value * 2.0 * (v - returns[i]) / n);
        grads.push(OutputGrad { dlogits, dvalue });
    }
    losses.total = losses.policy - coefs.entropy * losses.entropy + coefs.value * losses.value;
    (losses, grads)
}

/// RMSProp with the squared-gradient average initialised at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsProp<T> {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    pub square_avg: Vec<Vec<T>>,
}

impl<T: Scalar> RmsProp<T> {
    pub fn new(net: &Network<T>, lr: f64, decay: f64, eps: f64) -> Self {
        RmsProp { lr, decay, eps, square_avg: net.params().iter().map(|p| vec![T::zero(); p.len()]).collect() }
    }

    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) {
        let decay = T::from_f64_lossy(self.decay);
        let keep = T::one() - decay;
        let lr = T::from_f64_lossy(self.lr);
        let eps = T::from_f64_lossy(self.eps);
        for ((p, g), s) in net.params_mut().iter_mut().zip(&grads.params).zip(&mut self.square_avg) {
            for ((pv, &gv), sv) in p.iter_mut().zip(g).zip(s.iter_mut()) {
                *sv = decay * *sv + keep * gv * gv;
                *pv -= lr * gv / (sv.sqrt() + eps);
            }
        }
    }
}

/// Scales gradients so that their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<T: Scalar>(grads: &mut Gradients<T>, max_norm: f64) -> f64 {
    let norm = grads.norm().to_f64_lossy();
    let coef = max_norm / (norm + 1e-6);
    if coef < 1.0 {
        grads.scale(T::from_f64_lossy(coef));
    }
    norm
}

/// One optimisation step on a collected batch.
pub fn a2c_update<T: Scalar>(
    net: &mut Network<T>,
    optimizer: &mut RmsProp<T>,
    batch: &RolloutBatch<T>,
    returns: &[f64],
    advantages: &[f64],
    config: &TrainConfig,
) -> Result<Losses> {
    let traces: Vec<&ForwardTrace<T>> = batch.traces.iter().collect();
    let coefs = LossCoefficients { entropy: config.entropy_coef, value: config.value_coef };
    let (mut losses, out_grads) = a2c_loss(&traces, &batch.actions, returns, advantages, coefs);
    if !losses.total.is_finite() {
        return Err(Error::NonFiniteLoss(format!(
            "policy {} value {} entropy {}",
            losses.policy, losses.value, losses.entropy
        )));
    }
    let mut grads = Gradients::zeros_like(net);
    backward(net, &traces, &out_grads, &mut grads)?;
    if !grads.is_finite() {
        return Err(Error::NonFiniteLoss("non-finite gradient".into()));
    }
    losses.grad_norm = clip_grad_norm(&mut grads, config.max_grad_norm);
    optimizer.step(net, &grads);
    Ok(losses)
}

//! Layer-wise relevance propagation with the z+ rule.
//!
//! The first stage moves output relevance onto the F_c layer, a subset of
//! F_c neurons carrying most of it is selected, and the second stage maps a
//! single neuron back onto the input planes.

mod export;
mod rule;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{ForwardTrace, Network, Volume};
use crate::scalar::Scalar;

pub use export::{read_map, write_map, MapSidecar};
pub use rule::{lrp_backward_step, positive_part, Denominators, Layer, PositiveLayer, StepOutcome};

/// How the output relevance is seeded from the logits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceInit {
    /// Every logit, negative ones clamped to zero.
    #[default]
    ClampedLogits,
    /// Only the largest logit (lowest index on ties), clamped to zero.
    ArgmaxLogit,
}

impl FromStr for RelevanceInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamped_logits" => Ok(RelevanceInit::ClampedLogits),
            "argmax_logit" => Ok(RelevanceInit::ArgmaxLogit),
            other => Err(Error::Config(format!("unknown relevance init `{other}`"))),
        }
    }
}

/// Relevance of every F_c neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct FcRelevance<T> {
    pub values: Vec<T>,
    pub absorbed: T,
    /// Set when no logit was positive; `values` is then all zero.
    pub degenerate: bool,
}

impl<T: Scalar> FcRelevance<T> {
    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuronSelection {
    /// Neuron indices by descending relevance.
    pub indices: Vec<usize>,
    pub covered_fraction: f64,
}

/// Input relevance of one F_c neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevanceMap<T> {
    pub values: Vec<T>,
    pub shape: Volume,
    pub neuron: usize,
    /// Mass lost to zero denominators; the map sums to `1 - absorbed`.
    pub absorbed: T,
    /// The neuron's activation was zero.
    pub inactive: bool,
}

impl<T: Scalar> RelevanceMap<T> {
    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// Copy scaled to unit L1 norm; all-zero maps stay zero.
    pub fn normalized(&self) -> Vec<T> {
        let s = self.total();
        if s > T::zero() {
            self.values.iter().map(|&v| v / s).collect()
        } else {
            self.values.clone()
        }
    }
}

fn seed_output<T: Scalar>(logits: &[T], init: RelevanceInit) -> Vec<T> {
    let clamp = |v: T| if v > T::zero() { v } else { T::zero() };
    match init {
        RelevanceInit::ClampedLogits => logits.iter().map(|&v| clamp(v)).collect(),
        RelevanceInit::ArgmaxLogit => {
            let mut best = 0;
            for (i, &v) in logits.iter().enumerate() {
                if v > logits[best] {
                    best = i;
                }
            }
            let mut out = vec![T::zero(); logits.len()];
            out[best] = clamp(logits[best]);
            out
        }
    }
}

/// Positive weights of a network, prepared once and reused across inputs.
#[derive(Clone, Debug)]
pub struct LrpModel<T> {
    convs: Vec<PositiveLayer<T>>,
    fc: PositiveLayer<T>,
    actor: PositiveLayer<T>,
    input: Volume,
    net_id: u64,
    net_version: u64,
}

/// Denominators of every layer for one input.
#[derive(Clone, Debug)]
pub struct LrpInput<'t, T> {
    trace: &'t ForwardTrace<T>,
    convs: Vec<Denominators<T>>,
    fc: Denominators<T>,
}

impl<T: Scalar> LrpModel<T> {
    pub fn new(net: &Network<T>) -> Self {
        let arch = net.arch();
        let convs = arch
            .conv_layers
            .iter()
            .enumerate()
            .map(|(i, &conv)| PositiveLayer::new(&Layer::Conv { weight: net.conv_weight(i), conv, input: arch.conv_input(i) }))
            .collect();
        let fc = PositiveLayer::new(&Layer::Linear { weight: net.fc_weight(), n_out: arch.fc_width, n_in: arch.flat_dim() });
        let actor = PositiveLayer::new(&Layer::Linear { weight: net.actor_weight(), n_out: arch.n_actions, n_in: arch.fc_width });
        let (net_id, net_version) = net.tags();
        LrpModel { convs, fc, actor, input: arch.input, net_id, net_version }
    }

    fn check(&self, trace: &ForwardTrace<T>) -> Result<()> {
        if (trace.net_id, trace.net_version) != (self.net_id, self.net_version) {
            return Err(Error::StaleTrace { trace: trace.net_version, network: self.net_version });
        }
        Ok(())
    }

    /// Output relevance moved onto the F_c layer.
    pub fn relevance_fc(&self, trace: &ForwardTrace<T>, init: RelevanceInit) -> Result<FcRelevance<T>> {
        self.check(trace)?;
        let seed = seed_output(&trace.logits, init);
        let n = self.fc.n_out();
        if seed.iter().all(|&v| v == T::zero()) {
            return Ok(FcRelevance { values: vec![T::zero(); n], absorbed: T::zero(), degenerate: true });
        }
        let den = self.actor.denominators(&trace.fc_post);
        let out = self.actor.propagate(&trace.fc_post, &den, &seed);
        Ok(FcRelevance { values: out.lower, absorbed: out.absorbed, degenerate: false })
    }

    /// Precomputes denominators so that many neurons can be mapped cheaply.
    pub fn prepare<'t>(&self, trace: &'t ForwardTrace<T>) -> Result<LrpInput<'t, T>> {
        self.check(trace)?;
        let convs = self.convs.iter().enumerate().map(|(i, l)| l.denominators(trace.layer_input(i))).collect();
        let fc = self.fc.denominators(trace.layer_input(self.convs.len()));
        Ok(LrpInput { trace, convs, fc })
    }

    /// Input relevance of F_c neuron `k`, starting from unit mass.
    pub fn neuron_map(&self, input: &LrpInput<'_, T>, k: usize) -> Result<RelevanceMap<T>> {
        let n = self.fc.n_out();
        if k >= n {
            return Err(Error::Validation(format!("neuron {k} out of range for F_c width {n}")));
        }
        let trace = input.trace;
        if trace.fc_post[k] == T::zero() {
            return Ok(RelevanceMap { values: vec![T::zero(); self.input.len()], shape: self.input, neuron: k, absorbed: T::zero(), inactive: true });
        }
        let top = self.convs.len();
        let step = self.fc.propagate_one_hot(trace.layer_input(top), &input.fc, k);
        let mut absorbed = step.absorbed;
        let mut r = step.lower;
        for i in (0..top).rev() {
            let s = self.convs[i].propagate(trace.layer_input(i), &input.convs[i], &r);
            absorbed += s.absorbed;
            r = s.lower;
        }
        Ok(RelevanceMap { values: r, shape: self.input, neuron: k, absorbed, inactive: false })
    }
}

/// Output relevance moved onto the F_c layer of `net`.
pub fn relevance_fc<T: Scalar>(net: &Network<T>, trace: &ForwardTrace<T>, init: RelevanceInit) -> Result<FcRelevance<T>> {
    if !net.owns(trace) {
        return Err(stale(net, trace));
    }
    let arch = net.arch();
    let actor = PositiveLayer::new(&Layer::Linear { weight: net.actor_weight(), n_out: arch.n_actions, n_in: arch.fc_width });
    let seed = seed_output(&trace.logits, init);
    if seed.iter().all(|&v| v == T::zero()) {
        return Ok(FcRelevance { values: vec![T::zero(); arch.fc_width], absorbed: T::zero(), degenerate: true });
    }
    let den = actor.denominators(&trace.fc_post);
    let out = actor.propagate(&trace.fc_post, &den, &seed);
    Ok(FcRelevance { values: out.lower, absorbed: out.absorbed, degenerate: false })
}

/// Input relevance map of F_c neuron `k` of `net`.
pub fn neuron_relevance_map<T: Scalar>(net: &Network<T>, trace: &ForwardTrace<T>, k: usize) -> Result<RelevanceMap<T>> {
    if !net.owns(trace) {
        return Err(stale(net, trace));
    }
    let model = LrpModel::new(net);
    let input = model.prepare(trace)?;
    model.neuron_map(&input, k)
}

fn stale<T: Scalar>(net: &Network<T>, trace: &ForwardTrace<T>) -> Error {
    Error::StaleTrace { trace: trace.net_version, network: net.version() }
}

/// Smallest set of top neurons whose relevance reaches `fraction` of the
/// total. Ties are broken by ascending index.
pub fn select_neurons<T: Scalar>(values: &[T], fraction: f64) -> Result<NeuronSelection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Validation(format!("selection fraction {fraction} outside (0, 1]")));
    }
    let vals: Vec<f64> = values.iter().map(|v| v.to_f64_lossy()).collect();
    if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Validation("neuron relevance must be finite and non-negative".into()));
    }
    let total: f64 = vals.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("zero total F_c relevance".into()));
    }
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let mut indices = Vec::new();
    let mut acc = 0.0;
    for i in order {
        indices.push(i);
        acc += vals[i];
        if acc >= fraction * total {
            break;
        }
    }
    Ok(NeuronSelection { indices, covered_fraction: acc / total })
}

use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::arch::{NetworkArch, TensorSpec, Volume};
use super::ops::{conv_from_cols, im2col, relu};
use crate::env::Observation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NET_ID.fetch_add(1, Ordering::Relaxed)
}

/// Actor-critic network. Parameters are stored in the order given by
/// [`NetworkArch::tensor_specs`].
#[derive(Debug)]
pub struct Network<T> {
    arch: NetworkArch,
    params: Vec<Vec<T>>,
    id: u64,
    version: u64,
}

impl<T: Clone> Clone for Network<T> {
    fn clone(&self) -> Self {
        Network { arch: self.arch.clone(), params: self.params.clone(), id: self.id, version: self.version }
    }
}

impl<T: PartialEq> PartialEq for Network<T> {
    /// Weight equality; identity tags are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch && self.params == other.params
    }
}

/// Cached activations of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<T> {
    /// Network input after optional scaling to `[0, 1]`.
    pub input: Vec<T>,
    pub conv_pre: Vec<Vec<T>>,
    pub conv_post: Vec<Vec<T>>,
    pub fc_pre: Vec<T>,
    /// Outputs of the F_c layer.
    pub fc_post: Vec<T>,
    pub logits: Vec<T>,
    pub value: T,
    pub(crate) net_id: u64,
    pub(crate) net_version: u64,
}

impl<T: Scalar> ForwardTrace<T> {
    /// Activations entering layer `i`, where layers are numbered conv1..conv3,
    /// fc, actor.
    pub fn layer_input(&self, i: usize) -> &[T] {
        match i {
            0 => &self.input,
            i if i <= self.conv_post.len() => &self.conv_post[i - 1],
            i if i == self.conv_post.len() + 1 => &self.fc_post,
            _ => panic!("layer index {i} out of range"),
        }
    }
}

impl<T: Scalar> Network<T> {
    /// Orthogonal initialisation: gain sqrt(2) for hidden layers, 0.01 for the
    /// actor head and 1 for the value head. Biases start at zero.
    pub fn init(arch: &NetworkArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = arch.tensor_specs();
        let mut params = Vec::with_capacity(specs.len());
        for spec in &specs {
            if spec.shape.len() == 1 {
                params.push(vec![T::zero(); spec.len()]);
                continue;
            }
            let gain = if spec.name.starts_with("actor") {
                0.01
            } else if spec.name.starts_with("critic") {
                1.0
            } else {
                std::f64::consts::SQRT_2
            };
            let rows = spec.shape[0];
            let cols = spec.len() / rows;
            params.push(orthogonal(rows, cols, gain, &mut rng).into_iter().map(T::from_f64_lossy).collect());
        }
        Ok(Network { arch: arch.clone(), params, id: fresh_id(), version: 0 })
    }

    pub fn from_params(arch: &NetworkArch, params: Vec<Vec<T>>) -> Result<Self> {
        arch.validate()?;
        let specs = arch.tensor_specs();
        if specs.len() != params.len() {
            return Err(Error::Shape(format!("expected {} tensors, got {}", specs.len(), params.len())));
        }
        for (s, p) in specs.iter().zip(&params) {
            if s.len() != p.len() {
                return Err(Error::Shape(format!("{} has {} values, expected {}", s.name, p.len(), s.len())));
            }
        }
        Ok(Network { arch: arch.clone(), params, id: fresh_id(), version: 0 })
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    pub fn params(&self) -> &[Vec<T>] {
        &self.params
    }

    /// Mutable access to the weights. Invalidates existing traces.
    pub fn params_mut(&mut self) -> &mut [Vec<T>] {
        self.version += 1;
        &mut self.params
    }

    pub fn tensor_specs(&self) -> Vec<TensorSpec> {
        self.arch.tensor_specs()
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().flatten().all(|v| v.is_finite())
    }

    pub fn conv_weight(&self, i: usize) -> &[T] {
        &self.params[2 * i]
    }

    pub fn conv_bias(&self, i: usize) -> &[T] {
        &self.params[2 * i + 1]
    }

    fn head(&self, offset: usize) -> usize {
        2 * self.arch.conv_layers.len() + offset
    }

    pub fn fc_weight(&self) -> &[T] {
        &self.params[self.head(0)]
    }

    pub fn fc_bias(&self) -> &[T] {
        &self.params[self.head(1)]
    }

    pub fn actor_weight(&self) -> &[T] {
        &self.params[self.head(2)]
    }

    pub fn actor_bias(&self) -> &[T] {
        &self.params[self.head(3)]
    }

    pub fn critic_weight(&self) -> &[T] {
        &self.params[self.head(4)]
    }

    pub fn critic_bias(&self) -> T {
        self.params[self.head(5)][0]
    }

    pub(crate) fn tags(&self) -> (u64, u64) {
        (self.id, self.version)
    }

    /// Converts every weight to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let params = self
            .params
            .iter()
            .map(|p| p.iter().map(|v| U::from_f64_lossy(v.to_f64_lossy())).collect())
            .collect();
        Network { arch: self.arch.clone(), params, id: fresh_id(), version: 0 }
    }

    fn check_input(&self, obs: &Observation) -> Result<()> {
        let v = self.arch.input;
        if obs.shape() != (v.channels, v.height, v.width) {
            return Err(Error::Shape(format!(
                "observation {:?} does not match network input {}x{}x{}",
                obs.shape(),
                v.channels,
                v.height,
                v.width
            )));
        }
        Ok(())
    }

    fn scaled_input(obs: &Observation, normalize: bool) -> Vec<T> {
        let scale = if normalize { 1.0 / 255.0 } else { 1.0 };
        obs.data.iter().map(|&p| T::from_f64_lossy(p as f64 * scale)).collect()
    }

    /// Convolution stack for one scaled input: `(pre, post)` per layer.
    fn conv_stack(&self, input: &[T]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        let mut pre = Vec::with_capacity(3);
        let mut post: Vec<Vec<T>> = Vec::with_capacity(3);
        let mut cols = Vec::new();
        let mut vol = self.arch.input;
        for (i, (conv, out)) in self.arch.conv_layers.iter().zip(self.arch.conv_volumes()).enumerate() {
            let x = if i == 0 { input } else { &post[i - 1] };
            im2col(x, vol, conv, out, &mut cols);
            let mut z = Vec::new();
            conv_from_cols(self.conv_weight(i), Some(self.conv_bias(i)), &cols, out.channels, out.spatial(), &mut z);
            post.push(relu(&z));
            pre.push(z);
            vol = out;
        }
        (pre, post)
    }

    /// Forward pass of a single observation with the full activation cache.
    pub fn forward(&self, obs: &Observation, normalize: bool) -> Result<ForwardTrace<T>> {
        Ok(self.forward_batch(&[obs], normalize)?.pop().expect("one trace per input"))
    }

    /// Forward pass of a batch; the dense layers run as one matrix product.
    pub fn forward_batch(&self, batch: &[&Observation], normalize: bool) -> Result<Vec<ForwardTrace<T>>> {
        for obs in batch {
            self.check_input(obs)?;
        }
        let inputs: Vec<Vec<T>> = batch.iter().map(|o| Self::scaled_input(o, normalize)).collect();
        self.forward_scaled(inputs)
    }

    /// Forward pass on inputs that are already scaled.
    pub fn forward_scaled(&self, inputs: Vec<Vec<T>>) -> Result<Vec<ForwardTrace<T>>> {
        let b = inputs.len();
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.arch.input.len()) {
            return Err(Error::Shape(format!("input of length {} expected {}", bad.len(), self.arch.input.len())));
        }
        let flat = self.arch.flat_dim();
        let fcw = self.arch.fc_width;
        let na = self.arch.n_actions;

        let stacks: Vec<_> = inputs.iter().map(|x| self.conv_stack(x)).collect();
        let mut xmat = Vec::with_capacity(b * flat);
        for (_, post) in &stacks {
            xmat.extend_from_slice(post.last().expect("three conv layers"));
        }

        let mut fc_pre = Vec::with_capacity(b * fcw);
        for _ in 0..b {
            fc_pre.extend_from_slice(self.fc_bias());
        }
        T::gemm(b, flat, fcw, T::one(), &xmat, flat as isize, 1, self.fc_weight(), 1, flat as isize, T::one(), &mut fc_pre, fcw as isize, 1);
        let fc_post = relu(&fc_pre);

        let mut logits = Vec::with_capacity(b * na);
        for _ in 0..b {
            logits.extend_from_slice(self.actor_bias());
        }
        T::gemm(b, fcw, na, T::one(), &fc_post, fcw as isize, 1, self.actor_weight(), 1, fcw as isize, T::one(), &mut logits, na as isize, 1);

        let cw = self.critic_weight();
        let (id, version) = self.tags();
        Ok(inputs
            .into_iter()
            .zip(stacks)
            .enumerate()
            .map(|(i, (input, (pre, post)))| {
                let h = &fc_post[i * fcw..(i + 1) * fcw];
                let value = self.critic_bias() + h.iter().zip(cw).map(|(&a, &w)| a * w).sum::<T>();
                ForwardTrace {
                    input,
                    conv_pre: pre,
                    conv_post: post,
                    fc_pre: fc_pre[i * fcw..(i + 1) * fcw].to_vec(),
                    fc_post: h.to_vec(),
                    logits: logits[i * na..(i + 1) * na].to_vec(),
                    value,
                    net_id: id,
                    net_version: version,
                }
            })
            .collect())
    }

    /// Returns whether `trace` was produced by this network's current weights.
    pub fn owns(&self, trace: &ForwardTrace<T>) -> bool {
        (trace.net_id, trace.net_version) == self.tags()
    }

    pub fn input_volume(&self) -> Volume {
        self.arch.input
    }
}

/// Gaussian matrix with orthonormal rows (or columns when taller than wide),
/// scaled by `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..len).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    for i in 0..n {
        let (done, rest) = vecs.split_at_mut(i);
        let v = &mut rest[0];
        for q in done.iter() {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    out
}

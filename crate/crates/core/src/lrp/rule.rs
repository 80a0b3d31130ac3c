//! The z+ propagation rule for dense and convolution layers.
//!
//! For non-negative lower activations `x` and the positive part `w+` of the
//! weights, relevance moves down as
//! `R_i = sum_j x_i w+_ij / (sum_i' x_i' w+_i'j) * R_j`.
//! Biases receive nothing. Relevance arriving at a unit whose denominator is
//! zero is absorbed and reported.

use crate::net::ops::{col2im, im2col};
use crate::net::{conv_output, ConvSpec, Volume};
use crate::scalar::Scalar;

/// A layer as seen by the relevance pass.
#[derive(Clone, Copy, Debug)]
pub enum Layer<'a, T> {
    /// Row-major `n_out x n_in` weights.
    Linear { weight: &'a [T], n_out: usize, n_in: usize },
    /// `OC x C x k x k` weights over an input volume.
    Conv { weight: &'a [T], conv: ConvSpec, input: Volume },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<T> {
    pub lower: Vec<T>,
    /// Upper relevance that met a zero denominator.
    pub absorbed: T,
}

pub fn positive_part<T: Scalar>(w: &[T]) -> Vec<T> {
    w.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

/// Layer with its positive weights precomputed, ready for repeated passes.
#[derive(Clone, Debug)]
pub struct PositiveLayer<T> {
    kind: Kind,
    weight: Vec<T>,
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Linear { n_out: usize, n_in: usize },
    Conv { conv: ConvSpec, input: Volume, output: Volume },
}

/// Denominators of one layer for a fixed lower activation vector.
#[derive(Clone, Debug)]
pub struct Denominators<T> {
    z: Vec<T>,
}

impl<T: Scalar> PositiveLayer<T> {
    pub fn new(layer: &Layer<'_, T>) -> Self {
        match *layer {
            Layer::Linear { weight, n_out, n_in } => {
                assert_eq!(weight.len(), n_out * n_in, "linear weight shape");
                PositiveLayer { kind: Kind::Linear { n_out, n_in }, weight: positive_part(weight) }
            }
            Layer::Conv { weight, conv, input } => {
                let output = conv_output(input, &conv);
                assert_eq!(weight.len(), conv.out_channels * input.channels * conv.kernel * conv.kernel);
                PositiveLayer { kind: Kind::Conv { conv, input, output }, weight: positive_part(weight) }
            }
        }
    }

    pub fn n_in(&self) -> usize {
        match self.kind {
            Kind::Linear { n_in, .. } => n_in,
            Kind::Conv { input, .. } => input.len(),
        }
    }

    pub fn n_out(&self) -> usize {
        match self.kind {
            Kind::Linear { n_out, .. } => n_out,
            Kind::Conv { output, .. } => output.len(),
        }
    }

    /// `z_j = sum_i x_i w+_ij`.
    pub fn denominators(&self, x: &[T]) -> Denominators<T> {
        assert_eq!(x.len(), self.n_in(), "lower activation length");
        let z = match self.kind {
            Kind::Linear { n_out, n_in } => {
                let mut z = vec![T::zero(); n_out];
                T::gemm(n_out, n_in, 1, T::one(), &self.weight, n_in as isize, 1, x, 1, 1, T::zero(), &mut z, 1, 1);
                z
            }
            Kind::Conv { conv, input, output } => {
                let mut cols = Vec::new();
                im2col(x, input, &conv, output, &mut cols);
                let mut z = Vec::new();
                crate::net::ops::conv_from_cols(&self.weight, None, &cols, output.channels, output.spatial(), &mut z);
                z
            }
        };
        Denominators { z }
    }

    /// Redistributes `upper` onto the lower units given precomputed
    /// denominators for `x`.
    pub fn propagate(&self, x: &[T], den: &Denominators<T>, upper: &[T]) -> StepOutcome<T> {
        assert_eq!(upper.len(), self.n_out(), "upper relevance length");
        let mut absorbed = T::zero();
        let s: Vec<T> = upper
            .iter()
            .zip(&den.z)
            .map(|(&r, &z)| {
                if z > T::zero() {
                    r / z
                } else {
                    absorbed += r;
                    T::zero()
                }
            })
            .collect();
        let c = match self.kind {
            Kind::Linear { n_out, n_in } => {
                let mut c = vec![T::zero(); n_in];
                T::gemm(n_in, n_out, 1, T::one(), &self.weight, 1, n_in as isize, &s, 1, 1, T::zero(), &mut c, 1, 1);
                c
            }
            Kind::Conv { conv, input, output } => {
                let ckk = input.channels * conv.kernel * conv.kernel;
                let ohw = output.spatial();
                let mut cols = vec![T::zero(); ckk * ohw];
                T::gemm(ckk, output.channels, ohw, T::one(), &self.weight, 1, ckk as isize, &s, ohw as isize, 1, T::zero(), &mut cols, ohw as isize, 1);
                let mut c = vec![T::zero(); input.len()];
                col2im(&cols, input, &conv, output, &mut c);
                c
            }
        };
        let lower = x.iter().zip(&c).map(|(&xi, &ci)| xi * ci).collect();
        StepOutcome { lower, absorbed }
    }

    /// Relevance of the lower units when all upper relevance sits on unit
    /// `j` with mass one. Cheaper than a full pass for dense layers.
    pub fn propagate_one_hot(&self, x: &[T], den: &Denominators<T>, j: usize) -> StepOutcome<T> {
        match self.kind {
            Kind::Linear { n_in, .. } => {
                let z = den.z[j];
                if z > T::zero() {
                    let row = &self.weight[j * n_in..(j + 1) * n_in];
                    StepOutcome { lower: x.iter().zip(row).map(|(&xi, &w)| xi * w / z).collect(), absorbed: T::zero() }
                } else {
                    StepOutcome { lower: vec![T::zero(); n_in], absorbed: T::one() }
                }
            }
            Kind::Conv { .. } => {
                let mut upper = vec![T::zero(); self.n_out()];
                upper[j] = T::one();
                self.propagate(x, den, &upper)
            }
        }
    }
}

/// One z+ step: `lower_activations` must be non-negative.
pub fn lrp_backward_step<T: Scalar>(layer: &Layer<'_, T>, lower_activations: &[T], upper_relevance: &[T]) -> StepOutcome<T> {
    let pl = PositiveLayer::new(layer);
    let den = pl.denominators(lower_activations);
    pl.propagate(lower_activations, &den, upper_relevance)
}

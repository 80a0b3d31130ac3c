//! Convolution lowering helpers shared by the forward, backward and
//! relevance passes.

use super::arch::{ConvSpec, Volume};
use crate::scalar::Scalar;

/// Unfolds `input` into a `(C*k*k) x (OH*OW)` row-major matrix.
pub fn im2col<T: Scalar>(input: &[T], vol: Volume, conv: &ConvSpec, out: Volume, cols: &mut Vec<T>) {
    let k = conv.kernel;
    let s = conv.stride;
    let ohw = out.spatial();
    cols.clear();
    cols.resize(vol.channels * k * k * ohw, T::zero());
    for c in 0..vol.channels {
        let plane = &input[c * vol.spatial()..(c + 1) * vol.spatial()];
        for ky in 0..k {
            for kx in 0..k {
                let row = ((c * k + ky) * k + kx) * ohw;
                for oy in 0..out.height {
                    let src = (oy * s + ky) * vol.width + kx;
                    let dst = row + oy * out.width;
                    for ox in 0..out.width {
                        cols[dst + ox] = plane[src + ox * s];
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters-adds a column matrix back onto a volume.
pub fn col2im<T: Scalar>(cols: &[T], vol: Volume, conv: &ConvSpec, out: Volume, input: &mut [T]) {
    let k = conv.kernel;
    let s = conv.stride;
    let ohw = out.spatial();
    input.iter_mut().for_each(|v| *v = T::zero());
    for c in 0..vol.channels {
        let base = c * vol.spatial();
        for ky in 0..k {
            for kx in 0..k {
                let row = ((c * k + ky) * k + kx) * ohw;
                for oy in 0..out.height {
                    let dst = base + (oy * s + ky) * vol.width + kx;
                    let src = row + oy * out.width;
                    for ox in 0..out.width {
                        input[dst + ox * s] += cols[src + ox];
                    }
                }
            }
        }
    }
}

/// `out = W * cols + bias`, with `W` of shape `OC x (C*k*k)`.
pub fn conv_from_cols<T: Scalar>(weight: &[T], bias: Option<&[T]>, cols: &[T], oc: usize, ohw: usize, out: &mut Vec<T>) {
    let ckk = weight.len() / oc;
    out.clear();
    match bias {
        Some(b) => {
            for &bv in b.iter().take(oc) {
                out.extend(std::iter::repeat_n(bv, ohw));
            }
        }
        None => out.resize(oc * ohw, T::zero()),
    }
    T::gemm(oc, ckk, ohw, T::one(), weight, ckk as isize, 1, cols, ohw as isize, 1, T::one(), out, ohw as isize, 1);
}

pub fn relu<T: Scalar>(v: &[T]) -> Vec<T> {
    v.iter().map(|&x| if x > T::zero() { x } else { T::zero() }).collect()
}

use super::network::{ForwardTrace, Network};
use super::ops::{col2im, im2col};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gradient of a scalar loss with respect to one sample's outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputGrad<T> {
    pub dlogits: Vec<T>,
    pub dvalue: T,
}

/// Parameter gradients, laid out exactly like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Gradients { params: net.params().iter().map(|p| vec![T::zero(); p.len()]).collect() }
    }

    pub fn norm(&self) -> T {
        self.params.iter().flatten().map(|&g| g * g).sum::<T>().sqrt()
    }

    pub fn scale(&mut self, s: T) {
        self.params.iter_mut().flatten().for_each(|g| *g *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().flatten().all(|g| g.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.params.iter().flatten().all(|g| g.is_zero())
    }
}

/// Accumulates into `grads` the exact gradient of `sum_b <out_grads[b], f(x_b)>`.
///
/// Every trace must come from `net` in its current state.
pub fn backward<T: Scalar>(
    net: &Network<T>,
    traces: &[&ForwardTrace<T>],
    out_grads: &[OutputGrad<T>],
    grads: &mut Gradients<T>,
) -> Result<()> {
    if traces.len() != out_grads.len() {
        return Err(Error::Shape(format!("{} traces but {} output gradients", traces.len(), out_grads.len())));
    }
    for t in traces {
        if !net.owns(t) {
            return Err(Error::StaleTrace { trace: t.net_version, network: net.version() });
        }
    }
    let arch = net.arch();
    let b = traces.len();
    let fcw = arch.fc_width;
    let na = arch.n_actions;
    let flat = arch.flat_dim();
    let layers = arch.conv_layers.len();
    if let Some(g) = out_grads.iter().find(|g| g.dlogits.len() != na) {
        return Err(Error::Shape(format!("dlogits of length {} expected {na}", g.dlogits.len())));
    }
    if b == 0 {
        return Ok(());
    }
    let one = T::one();

    let dlog: Vec<T> = out_grads.iter().flat_map(|g| g.dlogits.iter().copied()).collect();
    let h: Vec<T> = traces.iter().flat_map(|t| t.fc_post.iter().copied()).collect();

    // Heads.
    let (ia, ic, ifc) = (2 * layers + 2, 2 * layers + 4, 2 * layers);
    T::gemm(na, b, fcw, one, &dlog, 1, na as isize, &h, fcw as isize, 1, one, &mut grads.params[ia], fcw as isize, 1);
    for g in out_grads {
        for (acc, &d) in grads.params[ia + 1].iter_mut().zip(&g.dlogits) {
            *acc += d;
        }
    }
    for (bi, g) in out_grads.iter().enumerate() {
        let hb = &h[bi * fcw..(bi + 1) * fcw];
        for (acc, &x) in grads.params[ic].iter_mut().zip(hb) {
            *acc += g.dvalue * x;
        }
        grads.params[ic + 1][0] += g.dvalue;
    }

    // dH = dlogits * Wa + dv * Wc, masked by the F_c rectifier.
    let mut dz = vec![T::zero(); b * fcw];
    T::gemm(b, na, fcw, one, &dlog, na as isize, 1, net.actor_weight(), fcw as isize, 1, T::zero(), &mut dz, fcw as isize, 1);
    let cw = net.critic_weight();
    for (bi, (g, t)) in out_grads.iter().zip(traces).enumerate() {
        let row = &mut dz[bi * fcw..(bi + 1) * fcw];
        for j in 0..fcw {
            row[j] += g.dvalue * cw[j];
            if t.fc_pre[j] <= T::zero() {
                row[j] = T::zero();
            }
        }
    }

    let x: Vec<T> = traces.iter().flat_map(|t| t.conv_post[layers - 1].iter().copied()).collect();
    T::gemm(fcw, b, flat, one, &dz, 1, fcw as isize, &x, flat as isize, 1, one, &mut grads.params[ifc], flat as isize, 1);
    for bi in 0..b {
        for (acc, &d) in grads.params[ifc + 1].iter_mut().zip(&dz[bi * fcw..(bi + 1) * fcw]) {
            *acc += d;
        }
    }
    let mut dx = vec![T::zero(); b * flat];
    T::gemm(b, fcw, flat, one, &dz, fcw as isize, 1, net.fc_weight(), flat as isize, 1, T::zero(), &mut dx, flat as isize, 1);

    // Convolution stack, one sample at a time.
    let vols = arch.conv_volumes();
    let mut cols = Vec::new();
    let mut dcols = Vec::new();
    for (bi, t) in traces.iter().enumerate() {
        let mut dpost = dx[bi * flat..(bi + 1) * flat].to_vec();
        for i in (0..layers).rev() {
            let conv = &arch.conv_layers[i];
            let out = vols[i];
            let vin = arch.conv_input(i);
            let ohw = out.spatial();
            let ckk = vin.channels * conv.kernel * conv.kernel;
            let dpre: Vec<T> = dpost
                .iter()
                .zip(&t.conv_pre[i])
                .map(|(&d, &z)| if z > T::zero() { d } else { T::zero() })
                .collect();
            let input = t.layer_input(i);
            im2col(input, vin, conv, out, &mut cols);
            T::gemm(out.channels, ohw, ckk, one, &dpre, ohw as isize, 1, &cols, 1, ohw as isize, one, &mut grads.params[2 * i], ckk as isize, 1);
            for c in 0..out.channels {
                grads.params[2 * i + 1][c] += dpre[c * ohw..(c + 1) * ohw].iter().copied().sum::<T>();
            }
            if i > 0 {
                dcols.clear();
                dcols.resize(ckk * ohw, T::zero());
                T::gemm(ckk, out.channels, ohw, one, net.conv_weight(i), 1, ckk as isize, &dpre, ohw as isize, 1, T::zero(), &mut dcols, ohw as isize, 1);
                dpost = vec![T::zero(); vin.len()];
                col2im(&dcols, vin, conv, out, &mut dpost);
            }
        }
    }
    Ok(())
}

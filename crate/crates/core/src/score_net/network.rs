//! Fully connected score network with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer: the `out × in` weight
//! matrix (row-major) followed by the `out` biases. Hidden layers apply the
//! activation; the output layer is linear.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::whiten::Whitening;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Relu => 1,
        }
    }

    pub(crate) fn from_code(code: u64) -> Option<Self> {
        match code {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreNetwork {
    widths: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    whitening: Whitening,
}

/// Per-layer activations kept for the backward pass.
pub(crate) struct Trace {
    acts: Vec<Vec<f64>>,
}

impl ScoreNetwork {
    /// Network `dim → hidden… → dim` with all parameters zero and identity
    /// whitening.
    pub fn zeros(dim: usize, hidden: &[usize], activation: Activation) -> Result<Self> {
        if dim == 0 || hidden.contains(&0) {
            return Err(Error::invalid("widths", "layer widths must be positive"));
        }
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(dim);
        widths.extend_from_slice(hidden);
        widths.push(dim);
        let count = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            widths,
            activation,
            params: vec![0.0; count],
            whitening: Whitening::identity(dim),
        })
    }

    /// Uniform Glorot initialization of weights, zero biases.
    pub fn random(
        dim: usize,
        hidden: &[usize],
        activation: Activation,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut net = Self::zeros(dim, hidden, activation)?;
        let mut off = 0;
        for l in 0..net.num_layers() {
            let (n_in, n_out) = (net.widths[l], net.widths[l + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for w in &mut net.params[off..off + n_in * n_out] {
                *w = rng.random_range(-limit..limit);
            }
            off += n_in * n_out + n_out;
        }
        Ok(net)
    }

    pub(crate) fn from_parts(
        widths: Vec<usize>,
        activation: Activation,
        params: Vec<f64>,
        whitening: Whitening,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::invalid("widths", "need at least input and output layers"));
        }
        let d = widths[0];
        if widths[widths.len() - 1] != d || whitening.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: widths[widths.len() - 1],
            });
        }
        let count: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                found: params.len(),
            });
        }
        Ok(Self {
            widths,
            activation,
            params,
            whitening,
        })
    }

    pub fn dim(&self) -> usize {
        self.widths[0]
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.widths[1..self.widths.len() - 1]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn whitening(&self) -> &Whitening {
        &self.whitening
    }

    pub fn set_whitening(&mut self, whitening: Whitening) -> Result<()> {
        if whitening.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: whitening.dim(),
            });
        }
        self.whitening = whitening;
        Ok(())
    }

    /// Weight matrix and bias of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(l);
        let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
        (
            &self.params[off..off + n_in * n_out],
            &self.params[off + n_in * n_out..off + n_in * n_out + n_out],
        )
    }

    fn layer_offset(&self, l: usize) -> usize {
        self.widths[..l + 1]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Evaluates the network in whitened coordinates.
    pub fn forward_raw(&self, z: &[f64], out: &mut [f64]) {
        let max_w = *self.widths.iter().max().unwrap_or(&1);
        let mut a = vec![0.0; max_w];
        let mut b = vec![0.0; max_w];
        a[..z.len()].copy_from_slice(z);
        let last = self.num_layers() - 1;
        let mut off = 0;
        for l in 0..=last {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let input = &a[..n_in];
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let s = bias[j] + row.iter().zip(input).map(|(p, q)| p * q).sum::<f64>();
                b[j] = if l == last { s } else { self.activation.apply(s) };
            }
            core::mem::swap(&mut a, &mut b);
            off += n_in * n_out + n_out;
        }
        out.copy_from_slice(&a[..self.dim()]);
    }

    /// Score in original coordinates: `raw((x - μ) / σ) / σ`, component-wise.
    pub fn forward(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        self.score_unchecked(x, out);
        Ok(())
    }

    #[inline]
    pub(crate) fn score_unchecked(&self, x: &[f64], out: &mut [f64]) {
        let mut z = vec![0.0; self.dim()];
        self.whitening.apply(x, &mut z);
        self.forward_raw(&z, out);
        for (o, s) in out.iter_mut().zip(&self.whitening.scale) {
            *o /= s;
        }
    }

    pub(crate) fn new_trace(&self) -> Trace {
        Trace {
            acts: self.widths.iter().map(|&w| vec![0.0; w]).collect(),
        }
    }

    /// Forward pass that records every layer output in `trace`.
    pub(crate) fn forward_traced(&self, z: &[f64], trace: &mut Trace) {
        trace.acts[0].copy_from_slice(z);
        let last = self.num_layers() - 1;
        let mut off = 0;
        for l in 0..=last {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let (head, tail) = trace.acts.split_at_mut(l + 1);
            let input = &head[l];
            let output = &mut tail[0];
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let s = bias[j] + row.iter().zip(input.iter()).map(|(p, q)| p * q).sum::<f64>();
                output[j] = if l == last { s } else { self.activation.apply(s) };
            }
            off += n_in * n_out + n_out;
        }
    }

    pub(crate) fn output<'a>(&self, trace: &'a Trace) -> &'a [f64] {
        &trace.acts[self.num_layers()]
    }

    /// Accumulates `∂(gᵀ out)/∂θ` into `grad`, where `g = d_out` is the
    /// gradient of the loss with respect to the network output.
    pub(crate) fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64], scratch: &mut [Vec<f64>; 2]) {
        let [delta, prev] = scratch;
        delta.clear();
        delta.extend_from_slice(d_out);
        let mut off_end = self.params.len();
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let off = off_end - (n_in * n_out + n_out);
            let input = &trace.acts[l];
            {
                let (gw, gb) = grad[off..off_end].split_at_mut(n_in * n_out);
                for j in 0..n_out {
                    let dj = delta[j];
                    gb[j] += dj;
                    for (g, a) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(input) {
                        *g += dj * a;
                    }
                }
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                prev.clear();
                prev.resize(n_in, 0.0);
                for j in 0..n_out {
                    let dj = delta[j];
                    for (p, wv) in prev.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *p += wv * dj;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(input) {
                    *p *= self.activation.derivative_from_output(a);
                }
                core::mem::swap(delta, prev);
            }
            off_end = off;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn zero_network_outputs_zero() {
        let net = ScoreNetwork::zeros(3, &[8, 8], Activation::Sigmoid).unwrap();
        let mut out = [1.0; 3];
        net.forward(&[0.3, -2.0, 7.0], &mut out).unwrap();
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn identity_whitening_returns_raw_output() {
        let net = ScoreNetwork::random(2, &[5], Activation::Sigmoid, &mut substream(1, &[])).unwrap();
        let x = [0.4, -1.1];
        let mut raw = [0.0; 2];
        let mut s = [0.0; 2];
        net.forward_raw(&x, &mut raw);
        net.forward(&x, &mut s).unwrap();
        assert_eq!(raw, s);
    }

    #[test]
    fn scaled_whitening_divides_output() {
        let mut net = ScoreNetwork::random(1, &[4], Activation::Relu, &mut substream(2, &[])).unwrap();
        net.set_whitening(Whitening {
            shift: vec![1.0],
            scale: vec![2.0],
        })
        .unwrap();
        let x = [2.2];
        let z = [(2.2 - 1.0) / 2.0];
        let mut raw = [0.0];
        let mut s = [0.0];
        net.forward_raw(&z, &mut raw);
        net.forward(&x, &mut s).unwrap();
        assert!((s[0] - raw[0] / 2.0).abs() <= 1e-12 * raw[0].abs().max(1.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = ScoreNetwork::zeros(2, &[3], Activation::Sigmoid).unwrap();
        let mut out = [0.0; 2];
        assert!(net.forward(&[1.0], &mut out).is_err());
    }

    #[test]
    fn traced_and_plain_forward_agree() {
        let net = ScoreNetwork::random(3, &[6, 4], Activation::Sigmoid, &mut substream(3, &[])).unwrap();
        let z = [0.1, 0.2, -0.7];
        let mut tr = net.new_trace();
        net.forward_traced(&z, &mut tr);
        let mut out = [0.0; 3];
        net.forward_raw(&z, &mut out);
        assert_eq!(net.output(&tr), &out);
    }
}

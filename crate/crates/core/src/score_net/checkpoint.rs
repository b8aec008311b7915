//! Flat weight dump.
//!
//! Layout, all little-endian 8-byte words:
//! `L` (number of widths), `L` widths, activation code, `d` whitening shifts,
//! `d` whitening scales, then for each layer its row-major weights followed by
//! its biases.

use alloc::vec::Vec;

use super::network::{Activation, ScoreNetwork};
use super::whiten::Whitening;
use crate::error::{Error, Result};

pub fn encode(net: &ScoreNetwork) -> Vec<u8> {
    let d = net.dim();
    let words = 2 + net.widths().len() + 2 * d + net.params().len();
    let mut out = Vec::with_capacity(8 * words);
    out.extend_from_slice(&(net.widths().len() as u64).to_le_bytes());
    for &w in net.widths() {
        out.extend_from_slice(&(w as u64).to_le_bytes());
    }
    out.extend_from_slice(&net.activation().code().to_le_bytes());
    let w = net.whitening();
    for v in w.shift.iter().chain(&w.scale).chain(net.params()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn word(&mut self) -> Result<[u8; 8]> {
        if self.bytes.len() < 8 {
            return Err(Error::Checkpoint("truncated"));
        }
        let (head, tail) = self.bytes.split_at(8);
        self.bytes = tail;
        let mut w = [0u8; 8];
        w.copy_from_slice(head);
        Ok(w)
    }

    fn u64(&mut self) -> Result<u64> {
        self.word().map(u64::from_le_bytes)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.word().map(f64::from_le_bytes)).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<ScoreNetwork> {
    let mut r = Reader { bytes };
    let len = r.u64()? as usize;
    if !(2..=64).contains(&len) {
        return Err(Error::Checkpoint("bad width header"));
    }
    let widths = (0..len)
        .map(|_| r.u64().map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    if widths.iter().any(|&w| w == 0 || w > 1 << 24) {
        return Err(Error::Checkpoint("bad layer width"));
    }
    let activation = Activation::from_code(r.u64()?).ok_or(Error::Checkpoint("unknown activation"))?;
    let d = widths[0];
    let shift = r.f64s(d)?;
    let scale = r.f64s(d)?;
    let count: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let params = r.f64s(count)?;
    if !r.bytes.is_empty() {
        return Err(Error::Checkpoint("trailing bytes"));
    }
    ScoreNetwork::from_parts(widths, activation, params, Whitening { shift, scale })
}

use alloc::vec::Vec;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;

/// Standard deviations below this use unit scale.
pub const DEGENERATE_STD: f64 = 1e-8;

/// Diagonal affine map `z = (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Whitening {
    pub fn identity(dim: usize) -> Self {
        Self {
            shift: alloc::vec![0.0; dim],
            scale: alloc::vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (((o, &v), &m), &s) in out.iter_mut().zip(x).zip(&self.shift).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }
}

/// Normalizes an ensemble to zero mean and unit (population) variance per
/// dimension.
pub fn whiten(ensemble: &StateEnsemble) -> Result<(StateEnsemble, Whitening)> {
    if ensemble.len() < 2 {
        return Err(Error::EnsembleTooSmall {
            required: 2,
            found: ensemble.len(),
        });
    }
    let shift = ensemble.mean();
    let scale: Vec<f64> = ensemble
        .variance(0)
        .into_iter()
        .map(|v| {
            let s = v.sqrt();
            if s < DEGENERATE_STD {
                1.0
            } else {
                s
            }
        })
        .collect();
    let w = Whitening { shift, scale };
    let mut out = StateEnsemble::zeros(ensemble.len(), ensemble.dim());
    for (o, x) in out.particles_mut().zip(ensemble.particles()) {
        w.apply(x, o);
    }
    Ok((out, w))
}

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;

/// `n` particles of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    dim: usize,
    data: Vec<f64>,
}

impl StateEnsemble {
    pub fn zeros(len: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; len * dim],
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "state dimension must be positive"));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim * (data.len() / dim + 1),
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(dim.max(1), data)
    }

    /// Builds a one-dimensional ensemble from scalar samples.
    pub fn from_scalars(values: &[f64]) -> Self {
        Self {
            dim: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn particle(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn particle_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particles(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn particles_mut(&mut self) -> core::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Values of coordinate `j` across all particles.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        self.particles().map(|p| p[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.particles() {
            for (a, &b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Per-dimension variance with denominator `n - ddof`.
    pub fn variance(&self, ddof: usize) -> Vec<f64> {
        let mean = self.mean();
        let mut v = vec![0.0; self.dim];
        for p in self.particles() {
            for ((a, &x), &m) in v.iter_mut().zip(p).zip(&mean) {
                *a += (x - m) * (x - m);
            }
        }
        let denom = self.len().saturating_sub(ddof).max(1) as f64;
        v.iter_mut().for_each(|a| *a /= denom);
        v
    }

    /// Per-dimension unbiased standard deviation.
    pub fn std(&self) -> Vec<f64> {
        self.variance(1).into_iter().map(|v| v.sqrt()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Gathers particles by index, e.g. after resampling.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.particle(i));
        }
        Self {
            dim: self.dim,
            data,
        }
    }
}

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `X_{k+1} = A X_k + N(0, Q)`, `Y_k = H X_k + N(0, R)`, `X_1 ~ N(m₀, P₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianSpec {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub m0: DVector<f64>,
    pub p0: DMatrix<f64>,
}

impl LinearGaussianSpec {
    pub fn new(
        a: DMatrix<f64>,
        q: DMatrix<f64>,
        h: DMatrix<f64>,
        r: DMatrix<f64>,
        m0: DVector<f64>,
        p0: DMatrix<f64>,
    ) -> Result<Self> {
        let d = m0.len();
        let p = h.nrows();
        let square = |m: &DMatrix<f64>, n: usize| m.nrows() == n && m.ncols() == n;
        if !square(&a, d) || !square(&q, d) || !square(&p0, d) || h.ncols() != d || !square(&r, p) {
            return Err(Error::invalid("linear_gaussian", "inconsistent matrix dimensions"));
        }
        for (name, m) in [("q", &q), ("r", &r), ("p0", &p0)] {
            if (m - m.transpose()).abs().max() > 1e-12 {
                return Err(Error::invalid(name, "covariance must be symmetric"));
            }
            let min_eig = m.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-12 {
                return Err(Error::invalid(name, "covariance must be positive semi-definite"));
            }
        }
        Ok(Self { a, q, h, r, m0, p0 })
    }

    pub fn scalar(a: f64, q: f64, h: f64, r: f64, m0: f64, p0: f64) -> Self {
        let s = |v| DMatrix::from_element(1, 1, v);
        Self {
            a: s(a),
            q: s(q),
            h: s(h),
            r: s(r),
            m0: DVector::from_element(1, m0),
            p0: s(p0),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.m0.len()
    }
}

/// Gaussian belief `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn kalman_predict(belief: &Gaussian, spec: &LinearGaussianSpec) -> Gaussian {
    Gaussian {
        mean: &spec.a * &belief.mean,
        cov: &spec.a * &belief.cov * spec.a.transpose() + &spec.q,
    }
}

pub fn kalman_update(prior: &Gaussian, spec: &LinearGaussianSpec, y: &[f64]) -> Result<Gaussian> {
    if y.len() != spec.h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: spec.h.nrows(),
            found: y.len(),
        });
    }
    let y = DVector::from_column_slice(y);
    let s = &spec.h * &prior.cov * spec.h.transpose() + &spec.r;
    let s_inv = s.cholesky().ok_or(Error::SingularInnovation)?.inverse();
    let gain = &prior.cov * spec.h.transpose() * s_inv;
    let mean = &prior.mean + &gain * (y - &spec.h * &prior.mean);
    let d = prior.mean.len();
    let cov = (DMatrix::identity(d, d) - &gain * &spec.h) * &prior.cov;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(Gaussian { mean, cov })
}

/// Predict then update.
pub fn kalman_step(belief: &Gaussian, spec: &LinearGaussianSpec, y: &[f64]) -> Result<Gaussian> {
    kalman_update(&kalman_predict(belief, spec), spec, y)
}

/// Filtering distributions for `y_1, …, y_K`, starting from the prior `N(m₀, P₀)`.
pub fn kalman_filter(spec: &LinearGaussianSpec, observations: &[alloc::vec::Vec<f64>]) -> Result<alloc::vec::Vec<Gaussian>> {
    let mut out = alloc::vec::Vec::with_capacity(observations.len());
    let mut belief = Gaussian {
        mean: spec.m0.clone(),
        cov: spec.p0.clone(),
    };
    for (k, y) in observations.iter().enumerate() {
        belief = if k == 0 {
            kalman_update(&belief, spec, y)?
        } else {
            kalman_step(&belief, spec, y)?
        };
        out.push(belief.clone());
    }
    Ok(out)
}

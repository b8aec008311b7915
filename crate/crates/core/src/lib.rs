//! Score-based sequential Langevin sampling for data assimilation.
//!
//! The filter alternates three stages per observation:
//!
//! 1. **Prediction** pushes the posterior ensemble through the dynamics model.
//! 2. **Score matching** fits a small neural network to the score of the
//!    Gaussian-smoothed prediction ensemble by denoising score matching.
//! 3. **Update** runs annealed Langevin Monte Carlo with drift
//!    `β ∇log g(y|x) + ŝ(x)` over an inverse-temperature ladder ending at 1.
//!
//! Alongside it the crate carries the usual comparison filters (Kalman,
//! stochastic EnKF, auxiliary particle filter), the testbed models and the
//! verification metrics. It is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod assimilator;
pub mod baselines;
pub mod ensemble;
mod error;
pub mod math;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod sampler;
pub mod score_net;

pub use assimilator::{assimilate, AssimilationRecord, Ssls, SslsConfig};
pub use ensemble::StateEnsemble;
pub use error::{Error, Result};
pub use models::{ReferenceRun, StateSpaceModel};

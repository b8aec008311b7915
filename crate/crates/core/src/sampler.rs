//! Langevin Monte Carlo and its annealed variant.
//!
//! At inverse temperature `β_m` the chain targets
//! `π^m ∝ g(y|x)^{β_m} q(x)`, whose score is `β_m ∇log g + ∇log q`. Each particle
//! runs `K` Euler–Maruyama steps `z ← z + h b(z) + √(2h) ξ` per temperature and
//! hands its final position to the next temperature.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::math::norm2;
#[allow(unused_imports)]
use crate::math::Float as _;
use crate::rng::{purpose, standard_normal, substream};
use crate::score_net::ScoreNetwork;

/// Anything that maps a state to an estimated score.
pub trait ScoreFunction {
    fn dim(&self) -> usize;
    fn score(&self, x: &[f64], out: &mut [f64]);
}

impl ScoreFunction for ScoreNetwork {
    fn dim(&self) -> usize {
        ScoreNetwork::dim(self)
    }

    fn score(&self, x: &[f64], out: &mut [f64]) {
        self.score_unchecked(x, out);
    }
}

/// Adapts a closure into a [`ScoreFunction`].
pub struct FnScore<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> ScoreFunction for FnScore<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
}

/// Inverse temperatures `β_1 < … < β_M = 1`.
pub fn make_schedule(levels: usize, kind: ScheduleKind) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::invalid("temperatures", "need at least one level"));
    }
    Ok(match kind {
        ScheduleKind::Linear => (1..=levels)
            .map(|m| if m == levels { 1.0 } else { m as f64 / levels as f64 })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealPlan {
    temperatures: Vec<f64>,
    inner_steps: usize,
    step_size: f64,
    clip: Option<f64>,
}

impl AnnealPlan {
    pub fn new(temperatures: Vec<f64>, inner_steps: usize, step_size: f64, clip: Option<f64>) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::invalid("temperatures", "need at least one level"));
        }
        if temperatures.iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
            return Err(Error::invalid("temperatures", "must lie in (0, 1]"));
        }
        if temperatures.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("temperatures", "must be strictly increasing"));
        }
        if temperatures[temperatures.len() - 1] != 1.0 {
            return Err(Error::invalid("temperatures", "last level must be exactly 1"));
        }
        if inner_steps == 0 {
            return Err(Error::invalid("inner_steps", "must be at least 1"));
        }
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::invalid("step_size", "must be positive"));
        }
        if let Some(c) = clip {
            if !(c > 0.0) {
                return Err(Error::invalid("clip", "must be positive"));
            }
        }
        Ok(Self {
            temperatures,
            inner_steps,
            step_size,
            clip,
        })
    }

    /// `levels` linearly spaced temperatures.
    pub fn linear(levels: usize, inner_steps: usize, step_size: f64, clip: Option<f64>) -> Result<Self> {
        Self::new(make_schedule(levels, ScheduleKind::Linear)?, inner_steps, step_size, clip)
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn inner_steps(&self) -> usize {
        self.inner_steps
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn clip(&self) -> Option<f64> {
        self.clip
    }
}

impl Default for AnnealPlan {
    fn default() -> Self {
        Self::linear(10, 20, 0.01, Some(100.0)).expect("valid default plan")
    }
}

/// Rescales `v` in place so that `‖v‖₂ ≤ max_norm`.
pub fn clip_score(v: &mut [f64], max_norm: f64) {
    let n = norm2(v);
    if n > max_norm {
        let s = max_norm / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// `β ∇log g + ŝ`, clipped as a whole when `clip` is set.
pub fn annealed_drift(beta: f64, grad_loglik: &[f64], score: &[f64], clip: Option<f64>, out: &mut [f64]) {
    for ((o, g), s) in out.iter_mut().zip(grad_loglik).zip(score) {
        *o = beta * g + s;
    }
    if let Some(c) = clip {
        clip_score(out, c);
    }
}

/// One Euler–Maruyama step for every particle with drift `drift`.
pub fn lmc_step<D>(particles: &mut StateEnsemble, drift: D, step_size: f64, rng: &mut dyn RngCore)
where
    D: Fn(&[f64], &mut [f64]),
{
    let mut b = vec![0.0; particles.dim()];
    let noise = (2.0 * step_size).sqrt();
    for p in particles.particles_mut() {
        drift(p, &mut b);
        for (x, bi) in p.iter_mut().zip(&b) {
            *x += step_size * bi + noise * standard_normal(rng);
        }
    }
}

/// Annealed Langevin update from a prediction ensemble towards the posterior.
///
/// Particle `i` at temperature index `m` draws its noise from the substream
/// `(seed, LANGEVIN, m, i)`, so the output does not depend on the order in
/// which particles are advanced.
pub fn almc_update<S, G>(
    predicted: &StateEnsemble,
    score: &S,
    grad_loglik: G,
    plan: &AnnealPlan,
    seed: u64,
) -> Result<StateEnsemble>
where
    S: ScoreFunction + ?Sized,
    G: Fn(&[f64], &mut [f64]),
{
    if predicted.is_empty() {
        return Err(Error::EnsembleTooSmall { required: 1, found: 0 });
    }
    let d = predicted.dim();
    if score.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: score.dim(),
        });
    }
    let h = plan.step_size;
    let noise = (2.0 * h).sqrt();
    let mut z = predicted.clone();
    let mut s = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut b = vec![0.0; d];

    for (m, &beta) in plan.temperatures.iter().enumerate() {
        for i in 0..z.len() {
            let mut rng = substream(seed, &[purpose::LANGEVIN, m as u64, i as u64]);
            let p = z.particle_mut(i);
            for iteration in 0..plan.inner_steps {
                score.score(p, &mut s);
                grad_loglik(p, &mut g);
                annealed_drift(beta, &g, &s, plan.clip, &mut b);
                for (x, bi) in p.iter_mut().zip(&b) {
                    *x += h * bi + noise * standard_normal(&mut rng);
                }
                if !p.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFiniteParticle {
                        temperature: m,
                        iteration,
                        particle: i,
                    });
                }
            }
        }
    }
    Ok(z)
}

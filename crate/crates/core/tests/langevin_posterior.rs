//! Annealed Langevin sampling against closed-form Gaussian posteriors.

use ssls_core::rng::{fill_standard_normal, substream};
use ssls_core::sampler::{almc_update, AnnealPlan, FnScore};
use ssls_core::StateEnsemble;

fn standard_normal_prior(n: usize, seed: u64) -> StateEnsemble {
    let mut x = vec![0.0; n];
    fill_standard_normal(&mut substream(seed, &[]), &mut x);
    StateEnsemble::from_scalars(&x)
}

fn prior_score() -> FnScore<impl Fn(&[f64], &mut [f64])> {
    FnScore {
        dim: 1,
        f: |x: &[f64], o: &mut [f64]| o[0] = -x[0],
    }
}

#[test]
fn conjugate_gaussian_posterior() {
    let n = 2000;
    let (y, obs_var) = (0.5f64, 0.2f64);
    let post_var = 1.0 / (1.0 + 1.0 / obs_var);
    let post_mean = post_var * y / obs_var;
    assert!((post_mean - 0.416_666_666_666_666_7f64).abs() < 1e-12);
    assert!((post_var - 0.166_666_666_666_666_7).abs() < 1e-12);

    let plan = AnnealPlan::linear(10, 50, 0.01, Some(100.0)).unwrap();
    let lik = move |x: &[f64], o: &mut [f64]| o[0] = (y - x[0]) / obs_var;
    let out = almc_update(&standard_normal_prior(n, 1), &prior_score(), lik, &plan, 2).unwrap();
    assert_eq!(out.len(), n);
    let mean = out.mean()[0];
    let var = out.variance(1)[0];
    let se = (post_var / n as f64).sqrt();
    assert!((mean - post_mean).abs() < 3.0 * se, "mean {mean}");
    assert!((var / post_var - 1.0).abs() < 0.15, "var {var}");
}

#[test]
fn flat_likelihood_keeps_prior() {
    let n = 2000;
    let plan = AnnealPlan::linear(10, 50, 0.01, None).unwrap();
    let out = almc_update(
        &standard_normal_prior(n, 3),
        &prior_score(),
        |_: &[f64], o: &mut [f64]| o[0] = 0.0,
        &plan,
        4,
    )
    .unwrap();
    let mean = out.mean()[0];
    let var = out.variance(1)[0];
    assert!(mean.abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 0.15, "var {var}");
}

#[test]
fn output_independent_of_particle_order() {
    let prior = StateEnsemble::from_scalars(&[0.3, -1.2, 2.0, 0.7]);
    let plan = AnnealPlan::linear(3, 5, 0.05, Some(10.0)).unwrap();
    let lik = |x: &[f64], o: &mut [f64]| o[0] = 1.0 - x[0];
    let full = almc_update(&prior, &prior_score(), lik, &plan, 8).unwrap();
    // running a prefix of the ensemble reproduces the same particles
    let head = StateEnsemble::from_scalars(&prior.as_flat()[..2]);
    let part = almc_update(&head, &prior_score(), lik, &plan, 8).unwrap();
    assert_eq!(part.as_flat(), &full.as_flat()[..2]);
}

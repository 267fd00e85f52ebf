//! Seeded random instances.
//!
//! Each marginal is `n` independent unit-exponential draws divided by their
//! sum (a flat Dirichlet sample), then sorted nonincreasing. Trial `t` of a
//! run with seed `s` draws from ChaCha8 seeded with `s` on stream `t`, so
//! trials are reproducible independently of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::distribution::{Distribution, Instance};
use crate::scalar::Tolerance;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Distribution {
    assert!(n >= 1, "support size must be positive");
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    Distribution::new(draws, true, Tolerance::DEFAULT).expect("exponential draws are positive")
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> Instance {
    assert!(m >= 1, "instance needs at least one marginal");
    let marginals = (0..m).map(|_| random_distribution(rng, n)).collect();
    Instance::new(marginals).expect("nonempty marginals")
}

/// The instance for trial `trial` of a seeded run.
pub fn trial_instance(seed: u64, trial: u64, m: usize, n: usize) -> Instance {
    random_instance(&mut trial_rng(seed, trial), m, n)
}

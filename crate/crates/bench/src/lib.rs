//! Shared fixtures for the benchmark targets.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qcts::weighing::BiasEnsemble;
use qcts::{ExponentMatrix, SupportVector};

/// Random exponent matrix with roughly 15% zero blocks.
pub fn random_matrix(m: usize, n: usize, z: usize, seed: u64) -> ExponentMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let entries = (0..m * n)
        .map(|_| {
            if rng.random_bool(0.15) {
                -1
            } else {
                rng.random_range(0..z as i32)
            }
        })
        .collect();
    ExponentMatrix::new(m, n, z, entries).expect("valid matrix")
}

/// Random support of the given weight over a length-`len` vector.
pub fn random_support(len: usize, weight: usize, seed: u64) -> SupportVector {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut picked = std::collections::BTreeSet::new();
    while picked.len() < weight {
        picked.insert(rng.random_range(0..len as u32));
    }
    SupportVector::new(len, picked.into_iter().collect()).expect("valid support")
}

/// Ensemble of `p` shift-inequivalent random supports.
pub fn random_ensemble(
    p: usize,
    n: usize,
    z: usize,
    weight: usize,
    mu: f64,
    sigma: f64,
    seed: u64,
) -> BiasEnsemble {
    let mut supports = Vec::new();
    let mut salt = 0u64;
    while supports.len() < p {
        let candidate = random_support(n * z, weight, seed.wrapping_add(salt));
        salt += 1;
        let mut trial = supports.clone();
        trial.push(candidate);
        if let Ok(ens) = BiasEnsemble::new(trial, mu, sigma, n, z) {
            supports = (0..ens.p()).map(|k| ens.support(k).clone()).collect();
        }
    }
    BiasEnsemble::new(supports, mu, sigma, n, z).expect("valid ensemble")
}

/// Gaussian noise vector with deterministic seed.
pub fn noise(len: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    // Box-Muller keeps the dependency surface small here
    (0..len)
        .map(|_| {
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}

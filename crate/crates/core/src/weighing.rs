//! Importance-sampling estimation of the frame-failure probability near the
//! error floor.
//!
//! Samples are drawn from a Gaussian mixture centered on trapping-set bias
//! points `c - mu * x_b` instead of on the transmitted point `c`, and each
//! sample is reweighted by the density ratio `w(y) = f(y, c) / f*(y)` so the
//! estimate stays unbiased. Because the blockwise shifts commute with the
//! decoder, the mixture only needs one bias point per shift orbit: the full
//! orbit enters through the denominator sum
//!
//! `S(y) = sum_j sum_k exp(-|mu (shift_j x_k - x_b) + xi|^2 / (2 sigma^2) + delta)`
//!
//! and the weight is `z * p * R / S` with `R` the numerator kernel at `c`.
//! The tabular path expands every term with precomputed set differences
//! between shifted supports, splitting shifts whose supports overlap the bias
//! support from the (typically far more numerous) disjoint ones; the naive
//! double sum is kept as the authoritative oracle for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::decoder::{Decoder, DecoderConfig};
use crate::error::{Error, Result};
use crate::exponent::ExponentMatrix;
use crate::rng::derive_seed;
use crate::support::SupportVector;
use crate::transforms::canonical_form;

/// The bias basis: one trapping-set support per shift orbit, plus the
/// displacement and noise parameters of the mixture.
#[derive(Debug, Clone)]
pub struct BiasEnsemble {
    supports: Vec<SupportVector>,
    pub mu: f64,
    pub sigma: f64,
    n: usize,
    z: usize,
}

impl BiasEnsemble {
    pub fn new(
        supports: Vec<SupportVector>,
        mu: f64,
        sigma: f64,
        n: usize,
        z: usize,
    ) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::InvalidArgument(
                "bias ensemble needs at least one support".into(),
            ));
        }
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation {sigma} must be positive"
            )));
        }
        if mu < 0.0 || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "displacement {mu} must be non-negative"
            )));
        }
        let len = n * z;
        let mut keys = std::collections::BTreeSet::new();
        for support in &supports {
            if support.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    got: support.len(),
                });
            }
            if support.is_zero() {
                return Err(Error::InvalidArgument(
                    "bias supports must be nonzero".into(),
                ));
            }
            let (key, _) = canonical_form(support, n, z)?;
            if !keys.insert(key) {
                return Err(Error::InvalidArgument(
                    "bias supports must be pairwise shift-inequivalent".into(),
                ));
            }
        }
        Ok(Self {
            supports,
            mu,
            sigma,
            n,
            z,
        })
    }

    /// Number of basis elements `p`.
    pub fn p(&self) -> usize {
        self.supports.len()
    }

    /// Vector length `N = n * z`.
    pub fn vector_len(&self) -> usize {
        self.n * self.z
    }

    pub fn circulant(&self) -> usize {
        self.z
    }

    pub fn block_cols(&self) -> usize {
        self.n
    }

    pub fn support(&self, k: usize) -> &SupportVector {
        &self.supports[k]
    }
}

/// Precomputed set differences between every shifted basis support and every
/// basis support, with the shift index set split by overlap.
pub struct TableSet {
    p: usize,
    z: usize,
    /// `t1[(k*p + l)*z + j]`: indices in `shift_j(x_k)` but not `x_l`.
    t1: Vec<Vec<u32>>,
    /// `t2[(k*p + l)*z + j]`: indices in `x_l` but not `shift_j(x_k)`.
    t2: Vec<Vec<u32>>,
    /// shifts whose supports overlap: `j1[l*p + k]` lists `j` with
    /// `shift_j(x_k)` meeting `x_l`.
    j1: Vec<Vec<u32>>,
    /// complementary (disjoint) shifts.
    j2: Vec<Vec<u32>>,
}

impl TableSet {
    fn idx(&self, k: usize, l: usize, j: usize) -> usize {
        (k * self.p + l) * self.z + j
    }

    pub fn t1(&self, k: usize, l: usize, j: usize) -> &[u32] {
        &self.t1[self.idx(k, l, j)]
    }

    pub fn t2(&self, k: usize, l: usize, j: usize) -> &[u32] {
        &self.t2[self.idx(k, l, j)]
    }

    pub fn overlapping_shifts(&self, l: usize, k: usize) -> &[u32] {
        &self.j1[l * self.p + k]
    }

    pub fn disjoint_shifts(&self, l: usize, k: usize) -> &[u32] {
        &self.j2[l * self.p + k]
    }

    /// Fraction of `(k, l, j)` cells whose supports do not meet; on sparse
    /// ensembles this is most of them, which is what makes the split pay off.
    pub fn disjoint_fraction(&self) -> f64 {
        let disjoint: usize = self.j2.iter().map(Vec::len).sum();
        disjoint as f64 / (self.p * self.p * self.z) as f64
    }
}

fn gaussian(rng: &mut impl rand::Rng, sigma: f64) -> f64 {
    let g: f64 = StandardNormal.sample(rng);
    sigma * g
}

fn shifted_support(x: &SupportVector, s: usize, z: usize) -> Vec<u32> {
    let mut out: Vec<u32> = x
        .support()
        .iter()
        .map(|&i| {
            let q = i as usize / z;
            let r = i as usize % z;
            (q * z + (r + s) % z) as u32
        })
        .collect();
    out.sort_unstable();
    out
}

/// Builds the set-difference tables for an ensemble.
pub fn build_tables(ens: &BiasEnsemble) -> TableSet {
    let p = ens.p();
    let z = ens.circulant();
    let cells = p * p * z;
    let mut t1 = Vec::with_capacity(cells);
    let mut t2 = Vec::with_capacity(cells);
    let mut j1 = vec![Vec::new(); p * p];
    let mut j2 = vec![Vec::new(); p * p];

    for k in 0..p {
        for l in 0..p {
            for j in 0..z {
                let shifted = shifted_support(ens.support(k), j, z);
                let base = ens.support(l).support();
                let mut only_shifted = Vec::new();
                let mut only_base = Vec::new();
                let (mut a, mut b) = (0usize, 0usize);
                let mut met = false;
                while a < shifted.len() && b < base.len() {
                    match shifted[a].cmp(&base[b]) {
                        std::cmp::Ordering::Less => {
                            only_shifted.push(shifted[a]);
                            a += 1;
                        }
                        std::cmp::Ordering::Greater => {
                            only_base.push(base[b]);
                            b += 1;
                        }
                        std::cmp::Ordering::Equal => {
                            met = true;
                            a += 1;
                            b += 1;
                        }
                    }
                }
                only_shifted.extend_from_slice(&shifted[a..]);
                only_base.extend_from_slice(&base[b..]);
                t1.push(only_shifted);
                t2.push(only_base);
                if met {
                    j1[l * p + k].push(j as u32);
                } else {
                    j2[l * p + k].push(j as u32);
                }
            }
        }
    }

    TableSet {
        p,
        z,
        t1,
        t2,
        j1,
        j2,
    }
}

/// Draws one bias-point sample: returns `(y, xi)` with
/// `y = c - mu * x_{l mod p} + xi` and `xi ~ N(0, sigma^2 I)`.
pub fn sample_bias_point(
    ens: &BiasEnsemble,
    l: usize,
    rng: &mut impl rand::Rng,
) -> (Vec<f64>, Vec<f64>) {
    let len = ens.vector_len();
    let xi: Vec<f64> = (0..len).map(|_| gaussian(rng, ens.sigma)).collect();
    let mut y = vec![1.0f64; len];
    for (yi, &x) in y.iter_mut().zip(&xi) {
        *yi += x;
    }
    for &i in ens.support(l % ens.p()).support() {
        y[i as usize] -= ens.mu;
    }
    (y, xi)
}

/// Numerator kernel `R = exp(-|mu x_b - xi|^2 / (2 sigma^2) + delta)` for the
/// basis element `l mod p`, expanded over the support so only `w` coordinates
/// of the noise are touched.
pub fn weight_numerator(ens: &BiasEnsemble, l: usize, xi: &[f64], delta: f64) -> Result<f64> {
    let b = l % ens.p();
    let inv2s2 = 1.0 / (2.0 * ens.sigma * ens.sigma);
    let xi_norm2: f64 = xi.iter().map(|v| v * v).sum();
    let w = ens.support(b).weight() as f64;
    let dot: f64 = ens
        .support(b)
        .support()
        .iter()
        .map(|&i| xi[i as usize])
        .sum();
    // |mu x - xi|^2 = mu^2 w - 2 mu <x, xi> + |xi|^2
    let exponent = -(ens.mu * ens.mu * w - 2.0 * ens.mu * dot + xi_norm2) * inv2s2 + delta;
    finite(exponent.exp(), 0)
}

/// Denominator `S` via the precomputed tables.
///
/// Every term shares the factor `exp(delta - |xi|^2/(2 sigma^2))`. For shifts
/// whose supports overlap the bias support, the remaining exponent is built
/// from the symmetric-difference size and signed partial sums of the noise
/// over the two difference sets; for disjoint shifts the bias-side part is
/// hoisted out of the shift loop and only the partial sum over the shifted
/// support varies.
pub fn weight_denominator_tabular(
    ens: &BiasEnsemble,
    tables: &TableSet,
    l: usize,
    xi: &[f64],
    delta: f64,
) -> Result<f64> {
    let p = ens.p();
    let b = l % p;
    let sigma2 = ens.sigma * ens.sigma;
    let inv2s2 = 1.0 / (2.0 * sigma2);
    let mu_over_s2 = ens.mu / sigma2;
    let xi_norm2: f64 = xi.iter().map(|v| v * v).sum();
    let common = delta - xi_norm2 * inv2s2;

    let w_b = ens.support(b).weight() as f64;
    let bias_sum: f64 = ens
        .support(b)
        .support()
        .iter()
        .map(|&i| xi[i as usize])
        .sum();

    let mut total = 0.0f64;
    for k in 0..p {
        // overlapping shifts: full symmetric-difference expansion
        for &j in tables.overlapping_shifts(b, k) {
            let t1 = tables.t1(k, b, j as usize);
            let t2 = tables.t2(k, b, j as usize);
            let sym_diff = (t1.len() + t2.len()) as f64;
            let sum1: f64 = t1.iter().map(|&i| xi[i as usize]).sum();
            let sum2: f64 = t2.iter().map(|&i| xi[i as usize]).sum();
            let exponent =
                common - ens.mu * ens.mu * sym_diff * inv2s2 - mu_over_s2 * (sum1 - sum2);
            total += exponent.exp();
        }

        // disjoint shifts: the bias-side factor is shift-independent
        let disjoint = tables.disjoint_shifts(b, k);
        if !disjoint.is_empty() {
            let w_k = ens.support(k).weight() as f64;
            let hoisted = common - ens.mu * ens.mu * (w_k + w_b) * inv2s2 + mu_over_s2 * bias_sum;
            let mut inner = 0.0f64;
            for &j in disjoint {
                // shifted support = t1 set, since the overlap is empty
                let shifted = tables.t1(k, b, j as usize);
                let sum: f64 = shifted.iter().map(|&i| xi[i as usize]).sum();
                inner += (-mu_over_s2 * sum).exp();
            }
            total += hoisted.exp() * inner;
        }
    }
    finite(total, 0)
}

/// Denominator `S` by the direct double sum over all shifts and basis
/// elements, materializing each difference vector. Authoritative oracle for
/// the tabular path.
pub fn weight_denominator_naive(
    ens: &BiasEnsemble,
    l: usize,
    xi: &[f64],
    delta: f64,
) -> Result<f64> {
    let p = ens.p();
    let z = ens.circulant();
    let b = l % p;
    let inv2s2 = 1.0 / (2.0 * ens.sigma * ens.sigma);
    let len = ens.vector_len();

    let mut total = 0.0f64;
    let mut diff = vec![0.0f64; len];
    for j in 0..z {
        for k in 0..p {
            diff.copy_from_slice(xi);
            for &i in &shifted_support(ens.support(k), j, z) {
                diff[i as usize] += ens.mu;
            }
            for &i in ens.support(b).support() {
                diff[i as usize] -= ens.mu;
            }
            let norm2: f64 = diff.iter().map(|v| v * v).sum();
            total += (-norm2 * inv2s2 + delta).exp();
        }
    }
    finite(total, 0)
}

fn finite(value: f64, sample: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteWeight { sample })
    }
}

/// Which mixture the sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasSchedule {
    /// Cycle through the `p` orbit representatives only; the orbits enter
    /// through the weights.
    #[default]
    Reduced,
    /// Cycle through all `z * p` shifted bias points explicitly. Same target,
    /// kept for cross-checking the reduced form.
    FullOrbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenominatorPath {
    #[default]
    Tabular,
    Naive,
}

/// What to do when a sample's weight is not finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonFinitePolicy {
    /// Abort the run; something is wrong with the normalization.
    #[default]
    Abort,
    /// Drop the sample and keep going, counting it as skipped.
    Skip,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EstimateOptions {
    pub schedule: BiasSchedule,
    pub denominator: DenominatorPath,
    pub nonfinite: NonFinitePolicy,
}

/// Per-basis-element accounting of an estimate.
#[derive(Debug, Clone, Serialize)]
pub struct PointStat {
    pub index: usize,
    pub samples: usize,
    pub failures: usize,
    pub weight_sum: f64,
}

/// Importance-sampling estimate of the frame-failure probability.
///
/// Serializes to the report format: estimate, standard error, sample count,
/// mixture geometry, failures, the per-bias-point breakdown, the exponent
/// normalization policy and the root seed.
#[derive(Debug, Clone, Serialize)]
pub struct PfEstimate {
    pub estimate: f64,
    pub stderr: f64,
    #[serde(rename = "L")]
    pub samples: usize,
    pub p: usize,
    pub z: usize,
    pub mu: f64,
    pub sigma: f64,
    pub failures: usize,
    pub per_point: Vec<PointStat>,
    pub delta_policy: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "is_zero")]
    pub skipped: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

const DELTA_POLICY: &str = "per-sample |xi|^2/(2 sigma^2) exponent shift";

/// Estimates the failure probability with the default options (reduced bias
/// schedule, tabular denominator, abort on non-finite weights).
pub fn estimate_pf(
    e: &ExponentMatrix,
    ens: &BiasEnsemble,
    cfg: &DecoderConfig,
    samples: usize,
    seed: u64,
) -> Result<PfEstimate> {
    estimate_pf_with(e, ens, cfg, samples, seed, EstimateOptions::default())
}

/// Estimates the failure probability of decoding the zero codeword over AWGN
/// with the ensemble's `sigma`, sampling `samples` bias points.
///
/// Sample `l` draws its noise from a generator seeded by `(seed, l)`, so
/// prefixes of the stream coincide across runs and the result is independent
/// of the number of worker threads.
pub fn estimate_pf_with(
    e: &ExponentMatrix,
    ens: &BiasEnsemble,
    cfg: &DecoderConfig,
    samples: usize,
    seed: u64,
    opts: EstimateOptions,
) -> Result<PfEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    if e.n_vars() != ens.vector_len() || e.circulant() != ens.circulant() {
        return Err(Error::DimensionMismatch(format!(
            "ensemble is for n*z = {} (z = {}), matrix has n*z = {} (z = {})",
            ens.vector_len(),
            ens.circulant(),
            e.n_vars(),
            e.circulant()
        )));
    }

    let decoder = Decoder::new(e, *cfg);
    let tables = build_tables(ens);
    let p = ens.p();
    let z = ens.circulant();
    let len = ens.vector_len();
    let llr_scale = 2.0 / (ens.sigma * ens.sigma);

    enum SampleOutcome {
        Value {
            weight: f64,
            failed: bool,
            basis: usize,
        },
        Skipped {
            basis: usize,
        },
    }

    let outcomes: Vec<SampleOutcome> = (0..samples)
        .into_par_iter()
        .map(|l| -> Result<SampleOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, l as u64));
            let (basis, orbit_shift) = match opts.schedule {
                BiasSchedule::Reduced => (l % p, 0usize),
                BiasSchedule::FullOrbit => {
                    let idx = l % (z * p);
                    (idx % p, idx / p)
                }
            };

            let xi: Vec<f64> = (0..len).map(|_| gaussian(&mut rng, ens.sigma)).collect();

            // received point: c - mu * shift(x_basis, orbit_shift) + xi
            let mut y: Vec<f64> = xi.iter().map(|&v| 1.0 + v).collect();
            for &i in &shifted_support(ens.support(basis), orbit_shift, z) {
                y[i as usize] -= ens.mu;
            }
            let llr: Vec<f64> = y.iter().map(|&v| llr_scale * v).collect();
            let failed = decoder.decode(&llr)?.failed(cfg.criterion);

            // the weight of a shifted bias point equals the weight of the
            // unshifted point with counter-rotated noise
            let xi_eff = if orbit_shift == 0 {
                xi
            } else {
                let mut rotated = vec![0.0f64; len];
                let back = z - orbit_shift;
                for (j, &v) in xi.iter().enumerate() {
                    let q = j / z;
                    let r = j % z;
                    rotated[q * z + (r + back) % z] = v;
                }
                rotated
            };

            let xi_norm2: f64 = xi_eff.iter().map(|v| v * v).sum();
            let delta = xi_norm2 / (2.0 * ens.sigma * ens.sigma);
            let weight = (|| -> Result<f64> {
                let r = weight_numerator(ens, basis, &xi_eff, delta)?;
                let s = match opts.denominator {
                    DenominatorPath::Tabular => {
                        weight_denominator_tabular(ens, &tables, basis, &xi_eff, delta)?
                    }
                    DenominatorPath::Naive => weight_denominator_naive(ens, basis, &xi_eff, delta)?,
                };
                finite((z * p) as f64 * r / s, l)
            })();

            match weight {
                Ok(weight) => Ok(SampleOutcome::Value {
                    weight,
                    failed,
                    basis,
                }),
                Err(Error::NonFiniteWeight { .. }) => match opts.nonfinite {
                    NonFinitePolicy::Abort => Err(Error::NonFiniteWeight { sample: l }),
                    NonFinitePolicy::Skip => Ok(SampleOutcome::Skipped { basis }),
                },
                Err(other) => Err(other),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    // sequential reduction in sample order keeps the result bit-stable
    let mut per_point: Vec<PointStat> = (0..p)
        .map(|index| PointStat {
            index,
            samples: 0,
            failures: 0,
            weight_sum: 0.0,
        })
        .collect();
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut failures = 0usize;
    let mut skipped = 0usize;
    for outcome in &outcomes {
        match *outcome {
            SampleOutcome::Value {
                weight,
                failed,
                basis,
            } => {
                per_point[basis].samples += 1;
                let value = if failed {
                    failures += 1;
                    per_point[basis].failures += 1;
                    per_point[basis].weight_sum += weight;
                    weight
                } else {
                    0.0
                };
                sum += value;
                sum_sq += value * value;
            }
            SampleOutcome::Skipped { basis } => {
                per_point[basis].samples += 1;
                skipped += 1;
            }
        }
    }

    let used = samples - skipped;
    if used == 0 {
        return Err(Error::NonFiniteWeight { sample: 0 });
    }
    let mean = sum / used as f64;
    let stderr = if used > 1 {
        let variance = (sum_sq - sum * sum / used as f64) / (used as f64 - 1.0);
        (variance.max(0.0) / used as f64).sqrt()
    } else {
        0.0
    };

    Ok(PfEstimate {
        estimate: mean,
        stderr,
        samples,
        p,
        z,
        mu: ens.mu,
        sigma: ens.sigma,
        failures,
        per_point,
        delta_policy: DELTA_POLICY.to_string(),
        seed,
        skipped,
    })
}

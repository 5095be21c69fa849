//! Projection and lifting between circulant sizes, quasi-cyclic shifts, and
//! shift-orbit canonicalization.
//!
//! When the circulant size factors as `z = l * z_star`, reducing every
//! exponent modulo `z_star` projects the parity-check matrix onto a smaller
//! one with the same base matrix; the matching vector operation folds each
//! length-`z` block onto length `z_star` by XOR-ing the `l` coordinates that
//! share a residue. Lifting runs the other way: adding `b_ij * z` to each
//! exponent produces a degree-`l` cover of the original Tanner graph.

use crate::digest;
use crate::error::{Error, Result};
use crate::exponent::ExponentMatrix;
use crate::rng::splitmix64;
use crate::support::SupportVector;

/// Recipe for lifting an exponent matrix by a factor `l > 1`: one offset
/// `b_ij` in `[0, l)` per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftSpec {
    factor: usize,
    m: usize,
    n: usize,
    bits: Vec<u32>, // row-major, entries in [0, factor)
    seed: Option<u64>,
}

impl LiftSpec {
    pub fn new(factor: usize, m: usize, n: usize, bits: Vec<u32>) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidArgument(format!(
                "lift factor must be at least 2, got {factor}"
            )));
        }
        if bits.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "lift offsets: expected {} entries, got {}",
                m * n,
                bits.len()
            )));
        }
        if let Some(&b) = bits.iter().find(|&&b| b as usize >= factor) {
            return Err(Error::InvalidArgument(format!(
                "lift offset {b} not below factor {factor}"
            )));
        }
        Ok(Self {
            factor,
            m,
            n,
            bits,
            seed: None,
        })
    }

    /// Pseudo-random offsets, reproducible from `(seed, factor, m, n)` alone:
    /// entry `(i, j)` depends only on the seed and its own position.
    pub fn random(factor: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        if factor < 2 {
            return Err(Error::InvalidArgument(format!(
                "lift factor must be at least 2, got {factor}"
            )));
        }
        let bits = (0..m * n)
            .map(|k| (splitmix64(seed ^ splitmix64(k as u64)) % factor as u64) as u32)
            .collect();
        Ok(Self {
            factor,
            m,
            n,
            bits,
            seed: Some(seed),
        })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn offset(&self, i: usize, j: usize) -> u32 {
        assert!(i < self.m && j < self.n, "lift offset index out of range");
        self.bits[i * self.n + j]
    }

    /// Digest of the offset grid, recorded in run manifests so two lifts can
    /// be told apart without storing the grid itself.
    pub fn digest(&self) -> String {
        let mut text = format!("{} {} {}", self.factor, self.m, self.n);
        for b in &self.bits {
            text.push(' ');
            text.push_str(&b.to_string());
        }
        digest::short_hex(text.as_bytes())
    }
}

/// Reduces every non-negative exponent modulo `z_star`; `-1` blocks stay zero.
pub fn project_exponents(e: &ExponentMatrix, z_star: usize) -> Result<ExponentMatrix> {
    let z = e.circulant();
    if z_star == 0 || !z.is_multiple_of(z_star) {
        return Err(Error::NotADivisor { z, z_star });
    }
    let entries = e
        .entries()
        .iter()
        .map(|&a| if a < 0 { -1 } else { a % z_star as i32 })
        .collect();
    ExponentMatrix::new(e.rows(), e.cols(), z_star, entries)
}

/// Index map of the projection: `q*z + r` goes to `q*z_star + (r mod z_star)`.
///
/// Total for every `j >= 0`; panics if `z_star` is zero or does not divide `z`.
pub fn pi_index(j: usize, z: usize, z_star: usize) -> usize {
    assert!(z_star > 0 && z.is_multiple_of(z_star), "z_star must divide z");
    let q = j / z;
    let r = j % z;
    q * z_star + r % z_star
}

/// Folds a length-`n*z` vector onto length `n*z_star`: each output bit is the
/// XOR of the `l = z / z_star` input bits that project onto it.
pub fn project_vector(
    x: &SupportVector,
    z: usize,
    z_star: usize,
    n: usize,
) -> Result<SupportVector> {
    if z_star == 0 || !z.is_multiple_of(z_star) {
        return Err(Error::NotADivisor { z, z_star });
    }
    if x.len() != n * z {
        return Err(Error::LengthMismatch {
            expected: n * z,
            got: x.len(),
        });
    }
    let toggles = x
        .support()
        .iter()
        .map(|&j| pi_index(j as usize, z, z_star) as u32)
        .collect();
    SupportVector::from_toggles(n * z_star, toggles)
}

/// Adds `b_ij * z` to every non-negative exponent and multiplies the circulant
/// size by the lift factor; `-1` blocks stay zero.
pub fn lift_exponents(e: &ExponentMatrix, spec: &LiftSpec) -> Result<ExponentMatrix> {
    if spec.m != e.rows() || spec.n != e.cols() {
        return Err(Error::DimensionMismatch(format!(
            "lift offsets are {}x{} but matrix is {}x{}",
            spec.m,
            spec.n,
            e.rows(),
            e.cols()
        )));
    }
    let z = e.circulant();
    let entries = e
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if a < 0 {
                -1
            } else {
                a + (spec.bits[k] as usize * z) as i32
            }
        })
        .collect();
    ExponentMatrix::new(e.rows(), e.cols(), spec.factor * z, entries)
}

/// Applies `s` steps of the blockwise cyclic shift: `q*z + r` moves to
/// `q*z + ((r + s) mod z)`. The shifts form a group of order `z` inside the
/// automorphism group of every code with circulant `z`.
pub fn shift(x: &SupportVector, s: usize, n: usize, z: usize) -> Result<SupportVector> {
    if x.len() != n * z {
        return Err(Error::LengthMismatch {
            expected: n * z,
            got: x.len(),
        });
    }
    let s = s % z;
    let toggles = x
        .support()
        .iter()
        .map(|&j| {
            let q = j as usize / z;
            let r = j as usize % z;
            (q * z + (r + s) % z) as u32
        })
        .collect();
    SupportVector::from_toggles(n * z, toggles)
}

/// Canonical representative of a shift orbit: the lexicographically smallest
/// support list over all `z` shifts, its serialized key, and the smallest
/// shift that attains it.
pub fn canonical_form(x: &SupportVector, n: usize, z: usize) -> Result<(Vec<u8>, usize)> {
    if x.len() != n * z {
        return Err(Error::LengthMismatch {
            expected: n * z,
            got: x.len(),
        });
    }
    if x.is_zero() {
        return Ok((Vec::new(), 0));
    }
    let mut best: Option<(Vec<u32>, usize)> = None;
    let mut scratch: Vec<u32> = Vec::with_capacity(x.weight());
    for s in 0..z {
        scratch.clear();
        scratch.extend(x.support().iter().map(|&j| {
            let q = j as usize / z;
            let r = j as usize % z;
            (q * z + (r + s) % z) as u32
        }));
        scratch.sort_unstable();
        match &best {
            Some((b, _)) if *b <= scratch => {}
            _ => best = Some((scratch.clone(), s)),
        }
    }
    let (support, s) = best.expect("nonzero vector has a canonical shift");
    Ok((encode_key(&support), s))
}

/// Canonical shifted copy of `x` (the support behind its canonical key).
pub fn canonical_support(x: &SupportVector, n: usize, z: usize) -> Result<SupportVector> {
    let (_, s) = canonical_form(x, n, z)?;
    shift(x, s, n, z)
}

/// Serializes a support list as big-endian 32-bit words, so byte order equals
/// index order.
pub fn encode_key(support: &[u32]) -> Vec<u8> {
    let mut key = Vec::with_capacity(support.len() * 4);
    for &i in support {
        key.extend_from_slice(&i.to_be_bytes());
    }
    key
}

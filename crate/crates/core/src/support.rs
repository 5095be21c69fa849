//! Sparse binary vectors over GF(2), stored as sorted support index lists.

use crate::error::{Error, Result};

/// A binary vector of fixed length whose support is kept as a strictly
/// increasing list of indices.
///
/// This is the working representation for codewords, trapping sets and
/// syndromes; dense bit arrays appear only inside test oracles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportVector {
    len: usize,
    support: Vec<u32>,
}

impl SupportVector {
    /// Builds a vector from a strictly increasing index list.
    pub fn new(len: usize, support: Vec<u32>) -> Result<Self> {
        for (pos, &idx) in support.iter().enumerate() {
            if idx as usize >= len {
                return Err(Error::InvalidArgument(format!(
                    "support index {idx} out of range for length {len}"
                )));
            }
            if pos > 0 && support[pos - 1] >= idx {
                return Err(Error::InvalidArgument(format!(
                    "support indices must be strictly increasing (saw {} then {idx})",
                    support[pos - 1]
                )));
            }
        }
        Ok(Self { len, support })
    }

    /// The all-zero vector.
    pub fn zero(len: usize) -> Self {
        Self {
            len,
            support: Vec::new(),
        }
    }

    /// Builds a vector from an arbitrary list of index toggles; an index that
    /// appears an even number of times cancels out.
    pub fn from_toggles(len: usize, mut toggles: Vec<u32>) -> Result<Self> {
        toggles.sort_unstable();
        if let Some(&max) = toggles.last() {
            if max as usize >= len {
                return Err(Error::InvalidArgument(format!(
                    "toggle index {max} out of range for length {len}"
                )));
            }
        }
        let mut support = Vec::with_capacity(toggles.len());
        let mut i = 0;
        while i < toggles.len() {
            let mut run = 1;
            while i + run < toggles.len() && toggles[i + run] == toggles[i] {
                run += 1;
            }
            if run % 2 == 1 {
                support.push(toggles[i]);
            }
            i += run;
        }
        Ok(Self { len, support })
    }

    pub(crate) fn from_sorted_unchecked(len: usize, support: Vec<u32>) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(support.last().is_none_or(|&i| (i as usize) < len));
        Self { len, support }
    }

    /// Vector length N (number of coordinates, not the support size).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn contains(&self, index: u32) -> bool {
        self.support.binary_search(&index).is_ok()
    }

    /// Coordinate-wise XOR of two vectors of equal length.
    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        let mut out = Vec::with_capacity(self.support.len() + other.support.len());
        let (mut a, mut b) = (0, 0);
        while a < self.support.len() && b < other.support.len() {
            match self.support[a].cmp(&other.support[b]) {
                std::cmp::Ordering::Less => {
                    out.push(self.support[a]);
                    a += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.support[b]);
                    b += 1;
                }
                std::cmp::Ordering::Equal => {
                    a += 1;
                    b += 1;
                }
            }
        }
        out.extend_from_slice(&self.support[a..]);
        out.extend_from_slice(&other.support[b..]);
        Ok(Self {
            len: self.len,
            support: out,
        })
    }

    /// Dense 0/1 expansion; test oracles only.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut v = vec![0u8; self.len];
        for &i in &self.support {
            v[i as usize] = 1;
        }
        v
    }
}

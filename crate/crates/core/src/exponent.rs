//! Exponent-matrix representation of quasi-cyclic parity-check matrices.
//!
//! A QC parity-check matrix is an `m x n` grid of `z x z` circulant blocks.
//! Block `(i, q)` is the `a_iq`-th power of the single-shift circulant, or the
//! all-zero block when `a_iq = -1`. The integer grid `a` together with `z` is
//! all this crate ever stores; the binary matrix is never expanded outside of
//! test oracles.
//!
//! With the shift convention used here, the circulant power `Q^a` has a one at
//! `(row, col)` exactly when `row + a = col (mod z)`, so the variable with
//! block column `q` and offset `r` participates in check `(r - a_iq) mod z` of
//! block row `i`.

use crate::digest;
use crate::error::{Error, Result};
use crate::support::SupportVector;

/// Compact representation of a QC parity-check matrix: block dimensions,
/// circulant size, and one shift exponent per block (`-1` = zero block).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentMatrix {
    m: usize,
    n: usize,
    z: usize,
    entries: Vec<i32>, // row-major, m*n values in [-1, z)
}

impl ExponentMatrix {
    /// Builds a matrix from row-major entries, rejecting anything outside
    /// `[-1, z - 1]`.
    pub fn new(m: usize, n: usize, z: usize, entries: Vec<i32>) -> Result<Self> {
        if m == 0 || n == 0 || z == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive (m={m}, n={n}, z={z})"
            )));
        }
        if z > i32::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "circulant size {z} too large"
            )));
        }
        if entries.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                m * n,
                entries.len()
            )));
        }
        for &a in &entries {
            if a < -1 || a as i64 >= z as i64 {
                return Err(Error::InvalidArgument(format!(
                    "entry {a} outside [-1, {}]",
                    z - 1
                )));
            }
        }
        Ok(Self { m, n, z, entries })
    }

    /// Like [`ExponentMatrix::new`] but explicitly reduces non-negative
    /// entries modulo `z` instead of rejecting them.
    pub fn new_mod(m: usize, n: usize, z: usize, entries: Vec<i32>) -> Result<Self> {
        if z == 0 || z > i32::MAX as usize {
            return Err(Error::InvalidArgument(format!("bad circulant size {z}")));
        }
        let reduced = entries
            .into_iter()
            .map(|a| {
                if a < 0 {
                    -1
                } else {
                    (a as i64).rem_euclid(z as i64) as i32
                }
            })
            .collect();
        Self::new(m, n, z, reduced)
    }

    /// Parses the on-disk text format: a `m n z` header line, then `m` lines
    /// of `n` entries in `[-1, z - 1]`, single-space separated, LF-terminated,
    /// with no comments or extra whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let body = text.strip_suffix('\n').ok_or_else(|| Error::Parse {
            line: 0,
            msg: "file must end with a newline".into(),
        })?;
        let mut lines = body.split('\n');
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
        let fields = strict_fields(header, 1)?;
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header must be `m n z`, got {} fields", fields.len()),
            });
        }
        let m = parse_dim(fields[0], "m")?;
        let n = parse_dim(fields[1], "n")?;
        let z = parse_dim(fields[2], "z")?;

        let mut entries = Vec::with_capacity(m * n);
        let mut rows = 0usize;
        for (lineno, line) in lines.enumerate() {
            let lineno = lineno + 2;
            let fields = strict_fields(line, lineno)?;
            if fields.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {n} entries, got {}", fields.len()),
                });
            }
            for f in fields {
                let a = parse_entry(f, lineno)?;
                if a < -1 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("entry {a} is below -1"),
                    });
                }
                if a as i64 >= z as i64 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("entry {a} is not below the circulant size {z}"),
                    });
                }
                entries.push(a);
            }
            rows += 1;
        }
        if rows != m {
            return Err(Error::Parse {
                line: rows + 1,
                msg: format!("expected {m} matrix rows, got {rows}"),
            });
        }
        Self::new(m, n, z, entries)
    }

    /// Canonical text serialization; [`ExponentMatrix::parse`] of the result
    /// reproduces the matrix and the bytes round-trip exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.m, self.n, self.z);
        for i in 0..self.m {
            let row: Vec<String> = (0..self.n)
                .map(|j| self.entries[i * self.n + j].to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Truncated hash of the canonical serialization; used to pair databases
    /// and reports with the matrix they were computed from.
    pub fn digest(&self) -> String {
        digest::short_hex(self.to_text().as_bytes())
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn circulant(&self) -> usize {
        self.z
    }

    /// Number of variable nodes, `n * z`.
    pub fn n_vars(&self) -> usize {
        self.n * self.z
    }

    /// Number of check nodes, `m * z`.
    pub fn n_checks(&self) -> usize {
        self.m * self.z
    }

    pub fn entry(&self, i: usize, j: usize) -> i32 {
        assert!(i < self.m && j < self.n, "block index out of range");
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    /// The base (protograph) matrix: 0 where the block is zero, 1 elsewhere.
    pub fn mother_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.m)
            .map(|i| {
                (0..self.n)
                    .map(|j| u8::from(self.entries[i * self.n + j] != -1))
                    .collect()
            })
            .collect()
    }

    /// Within-block check row hit by variable `j` in block row `block_row`.
    ///
    /// For `j = q*z + r` with exponent `a = a_{block_row,q}`, this is
    /// `(r - a) mod z`. The block must be nonzero.
    pub fn check_index_map(&self, block_row: usize, j: usize) -> Result<usize> {
        if block_row >= self.m {
            return Err(Error::InvalidArgument(format!(
                "block row {block_row} out of range for {} rows",
                self.m
            )));
        }
        if j >= self.n_vars() {
            return Err(Error::InvalidArgument(format!(
                "variable index {j} out of range for length {}",
                self.n_vars()
            )));
        }
        let q = j / self.z;
        let r = j % self.z;
        let a = self.entries[block_row * self.n + q];
        if a == -1 {
            return Err(Error::InvalidArgument(format!(
                "variable {j} lies in a zero block of block row {block_row}"
            )));
        }
        Ok((r + self.z - a as usize % self.z) % self.z)
    }

    /// Support of `H x^T`, computed from the exponents without expanding any
    /// circulant: variable `q*z + r` toggles check `i*z + ((r - a_iq) mod z)`
    /// in every block row `i` with `a_iq >= 0`.
    pub fn syndrome(&self, x: &SupportVector) -> Result<SupportVector> {
        if x.len() != self.n_vars() {
            return Err(Error::LengthMismatch {
                expected: self.n_vars(),
                got: x.len(),
            });
        }
        let z = self.z;
        let mut toggles = Vec::with_capacity(x.weight() * self.m);
        for &j in x.support() {
            let q = j as usize / z;
            let r = j as usize % z;
            for i in 0..self.m {
                let a = self.entries[i * self.n + q];
                if a >= 0 {
                    let c = (r + z - a as usize) % z;
                    toggles.push((i * z + c) as u32);
                }
            }
        }
        SupportVector::from_toggles(self.n_checks(), toggles)
    }

    /// `(w, v)` of a vector: its Hamming weight and the weight of its
    /// syndrome. The zero vector classifies as `(0, 0)`; callers that need a
    /// trapping set proper filter on `w > 0`.
    pub fn classify_ts(&self, x: &SupportVector) -> Result<(usize, usize)> {
        let syn = self.syndrome(x)?;
        Ok((x.weight(), syn.weight()))
    }

    pub fn is_codeword(&self, x: &SupportVector) -> Result<bool> {
        Ok(self.syndrome(x)?.is_zero())
    }
}

fn strict_fields(line: &str, lineno: usize) -> Result<Vec<&str>> {
    if line.is_empty() {
        return Err(Error::Parse {
            line: lineno,
            msg: "empty line".into(),
        });
    }
    let fields: Vec<&str> = line.split(' ').collect();
    for f in &fields {
        if f.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                msg: "repeated, leading or trailing space".into(),
            });
        }
    }
    Ok(fields)
}

fn parse_dim(token: &str, name: &str) -> Result<usize> {
    let value: usize = token.parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad {name} value {token:?}"),
    })?;
    if value == 0 || token != value.to_string() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("bad {name} value {token:?}"),
        });
    }
    Ok(value)
}

fn parse_entry(token: &str, lineno: usize) -> Result<i32> {
    let value: i32 = token.parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: format!("bad entry {token:?}"),
    })?;
    // canonical decimal only: no leading zeros, plus signs or minus-zero
    if token != value.to_string() {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("bad entry {token:?}"),
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn small() -> ExponentMatrix {
        // two block rows with a zero block and a repeated exponent
        ExponentMatrix::new(2, 3, 4, vec![0, 1, -1, 2, 0, 3]).unwrap()
    }

    /// Dense expansion of the full parity-check matrix; oracle only.
    fn dense(e: &ExponentMatrix) -> Vec<Vec<u8>> {
        let (m, n, z) = (e.rows(), e.cols(), e.circulant());
        let mut h = vec![vec![0u8; n * z]; m * z];
        for i in 0..m {
            for q in 0..n {
                let a = e.entry(i, q);
                if a < 0 {
                    continue;
                }
                for row in 0..z {
                    let col = (row + a as usize) % z;
                    h[i * z + row][q * z + col] = 1;
                }
            }
        }
        h
    }

    fn dense_syndrome(e: &ExponentMatrix, x: &SupportVector) -> Vec<u8> {
        let h = dense(e);
        let xd = x.to_dense();
        h.iter()
            .map(|row| {
                row.iter()
                    .zip(&xd)
                    .map(|(a, b)| a & b)
                    .fold(0, |s, t| s ^ t)
            })
            .collect()
    }

    #[test]
    fn parse_minimal() {
        let e = ExponentMatrix::parse("1 2 4\n0 1\n").unwrap();
        assert_eq!((e.rows(), e.cols(), e.circulant()), (1, 2, 4));
        assert_eq!(e.entries(), &[0, 1]);
    }

    #[test]
    fn parse_rejects_entry_at_or_above_z() {
        let err = ExponentMatrix::parse("1 1 4\n7\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(ExponentMatrix::parse("1 1 4\n4\n").is_err());
        assert!(ExponentMatrix::parse("1 1 4\n-2\n").is_err());
    }

    #[test]
    fn parse_rejects_sloppy_whitespace() {
        assert!(ExponentMatrix::parse("1 2 4\n0  1\n").is_err());
        assert!(ExponentMatrix::parse("1 2 4\n0 1 \n").is_err());
        assert!(ExponentMatrix::parse("1 2 4\n0 1").is_err());
        assert!(ExponentMatrix::parse("1 2 4\n0 1\n\n").is_err());
        assert!(ExponentMatrix::parse("1 2 4\n0 +1\n").is_err());
        assert!(ExponentMatrix::parse("1 2\n0 1\n").is_err());
        assert!(ExponentMatrix::parse("1 2 4\n0 1\n0 1\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let e = small();
        assert_eq!(ExponentMatrix::parse(&e.to_text()).unwrap(), e);
    }

    #[test]
    fn mother_matrix_substitution() {
        let e = ExponentMatrix::new(1, 1, 4, vec![-1]).unwrap();
        assert_eq!(e.mother_matrix(), vec![vec![0]]);
        let e = ExponentMatrix::new(2, 2, 32, vec![21, -1, 0, 5]).unwrap();
        assert_eq!(e.mother_matrix(), vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn syndrome_zero_and_identity() {
        let e = small();
        assert!(e.syndrome(&SupportVector::zero(12)).unwrap().is_zero());

        let id = ExponentMatrix::new(1, 1, 2, vec![0]).unwrap();
        let x = SupportVector::new(2, vec![0]).unwrap();
        assert_eq!(id.syndrome(&x).unwrap().support(), &[0]);
    }

    #[test]
    fn syndrome_rejects_length_mismatch() {
        let e = small();
        assert!(e.syndrome(&SupportVector::zero(13)).is_err());
    }

    #[test]
    fn syndrome_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let z = rng.random_range(2..=6usize);
            let m = rng.random_range(1..=2usize);
            let n = rng.random_range(2..=4usize);
            let entries: Vec<i32> = (0..m * n)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        -1
                    } else {
                        rng.random_range(0..z as i32)
                    }
                })
                .collect();
            let e = ExponentMatrix::new(m, n, z, entries).unwrap();
            let support: Vec<u32> = (0..(n * z) as u32)
                .filter(|_| rng.random_bool(0.4))
                .collect();
            let x = SupportVector::new(n * z, support).unwrap();
            let sparse = e.syndrome(&x).unwrap().to_dense();
            assert_eq!(sparse, dense_syndrome(&e, &x));
        }
    }

    #[test]
    fn syndrome_is_linear() {
        let e = small();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10_000 {
            let xs: Vec<u32> = (0..12u32).filter(|_| rng.random_bool(0.5)).collect();
            let ys: Vec<u32> = (0..12u32).filter(|_| rng.random_bool(0.5)).collect();
            let x = SupportVector::new(12, xs).unwrap();
            let y = SupportVector::new(12, ys).unwrap();
            let lhs = e.syndrome(&x.xor(&y).unwrap()).unwrap();
            let rhs = e
                .syndrome(&x)
                .unwrap()
                .xor(&e.syndrome(&y).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn syndrome_commutes_with_blockwise_shift() {
        // shifts are code automorphisms: shifting the input shifts the
        // syndrome blockwise on the check side
        let e = small();
        let (m, n, z) = (e.rows(), e.cols(), e.circulant());
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..500 {
            let support: Vec<u32> = (0..(n * z) as u32)
                .filter(|_| rng.random_bool(0.4))
                .collect();
            let x = SupportVector::new(n * z, support).unwrap();
            for s in 0..z {
                let shifted = crate::transforms::shift(&x, s, n, z).unwrap();
                let lhs = e.syndrome(&shifted).unwrap();
                let rhs = crate::transforms::shift(&e.syndrome(&x).unwrap(), s, m, z).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn classify_zero_vector() {
        let e = small();
        assert_eq!(e.classify_ts(&SupportVector::zero(12)).unwrap(), (0, 0));
    }

    #[test]
    fn classify_codeword_has_zero_v() {
        // both columns of [[0, 0]] are identity circulants, so equal offsets cancel
        let e = ExponentMatrix::new(1, 2, 4, vec![0, 0]).unwrap();
        let x = SupportVector::new(8, vec![1, 5]).unwrap();
        assert_eq!(e.classify_ts(&x).unwrap(), (2, 0));
        assert!(e.is_codeword(&x).unwrap());
    }

    #[test]
    fn check_index_map_identity_and_errors() {
        let e = ExponentMatrix::new(1, 1, 4, vec![0]).unwrap();
        assert_eq!(e.check_index_map(0, 3).unwrap(), 3);
        assert!(e.check_index_map(0, 4).is_err());
        assert!(e.check_index_map(1, 0).is_err());
        let ez = ExponentMatrix::new(1, 1, 4, vec![-1]).unwrap();
        assert!(ez.check_index_map(0, 0).is_err());
    }

    #[test]
    fn single_bit_syndrome_is_check_index() {
        // m = 1: the syndrome of a one-bit vector is exactly the mapped check
        let e = ExponentMatrix::new(1, 3, 5, vec![2, 4, 0]).unwrap();
        for j in 0..15usize {
            let x = SupportVector::new(15, vec![j as u32]).unwrap();
            let syn = e.syndrome(&x).unwrap();
            assert_eq!(syn.support(), &[e.check_index_map(0, j).unwrap() as u32]);
        }
    }

    #[test]
    fn codeword_count_matches_rank_oracle() {
        // |C(H)| = 2^(n*z - rank H) by exhaustive scan
        let e = ExponentMatrix::new(2, 3, 3, vec![0, 1, 2, -1, 0, 1]).unwrap();
        let nz = e.n_vars();
        let h = dense(&e);

        // rank over GF(2) by Gaussian elimination
        let mut rows: Vec<u64> = h
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
            })
            .collect();
        let mut rank = 0;
        for col in 0..nz {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r] >> col & 1 == 1) {
                rows.swap(rank, p);
                for r in 0..rows.len() {
                    if r != rank && rows[r] >> col & 1 == 1 {
                        rows[r] ^= rows[rank];
                    }
                }
                rank += 1;
            }
        }

        let mut count = 0u64;
        for bits in 0..1u32 << nz {
            let support: Vec<u32> = (0..nz as u32).filter(|i| bits >> i & 1 == 1).collect();
            let x = SupportVector::new(nz, support).unwrap();
            if e.is_codeword(&x).unwrap() {
                count += 1;
            }
        }
        assert_eq!(count, 1 << (nz - rank));
    }
}

//! Normalized min-sum decoding over a BPSK/AWGN channel.
//!
//! The decoder uses a flooding schedule with an order-invariant check-node
//! reduction (min / second-min and a sign product), so its hard decisions,
//! unsatisfied-check trajectory and even its soft outputs commute exactly with
//! the blockwise cyclic shifts of the code. That equivariance is what lets
//! trapping-set searches and the importance-sampling estimator work with one
//! representative per shift orbit.
//!
//! Bits are mapped to channel symbols as `0 -> +1`, `1 -> -1`; the transmitted
//! word is always the all-ones symbol vector (the image of the zero codeword),
//! and positive LLRs vote for bit 0.

use crate::error::{Error, Result};
use crate::exponent::ExponentMatrix;
use crate::support::SupportVector;

/// How a decoding attempt is judged to have failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailureCriterion {
    /// The final hard decision is not a codeword (detected error).
    NonCodeword,
    /// The final hard decision differs from the transmitted zero word; counts
    /// undetected errors as failures too.
    #[default]
    NotTransmitted,
}

#[derive(Debug, Clone, Copy)]
pub struct DecoderConfig {
    /// Maximum number of message-passing iterations. Zero is accepted by the
    /// decoder itself and degenerates to the channel hard decision.
    pub iterations: usize,
    /// Scale factor applied to every check-to-variable message, in (0, 1].
    pub normalization: f64,
    pub criterion: FailureCriterion,
    /// Stop as soon as the hard decision satisfies every check. Cannot change
    /// the failure indicator, only the iteration count.
    pub early_exit: bool,
}

impl DecoderConfig {
    pub fn new(iterations: usize, normalization: f64) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidArgument(
                "iteration count must be positive".into(),
            ));
        }
        if !(normalization > 0.0 && normalization <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "normalization factor {normalization} outside (0, 1]"
            )));
        }
        Ok(Self {
            iterations,
            normalization,
            ..Self::default()
        })
    }
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            normalization: 0.75,
            criterion: FailureCriterion::default(),
            early_exit: true,
        }
    }
}

/// AWGN channel with noise standard deviation `sigma`; symbols are `+-1`.
#[derive(Debug, Clone, Copy)]
pub struct ChannelModel {
    pub sigma: f64,
}

impl ChannelModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation {sigma} must be positive"
            )));
        }
        Ok(Self { sigma })
    }

    /// Channel symbols of the transmitted zero codeword: all `+1`.
    pub fn transmitted(&self, len: usize) -> Vec<f64> {
        vec![1.0; len]
    }

    pub fn llr(&self, received: &[f64]) -> Result<Vec<f64>> {
        awgn_llr(received, self.sigma)
    }
}

/// Per-sample LLRs for AWGN with the `0 -> +1` mapping: `2 * y / sigma^2`.
pub fn awgn_llr(received: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise standard deviation {sigma} must be positive"
        )));
    }
    let scale = 2.0 / (sigma * sigma);
    Ok(received.iter().map(|&y| scale * y).collect())
}

/// Result of one decoding attempt.
#[derive(Debug, Clone)]
pub struct DecoderOutput {
    /// Support of the final hard decision.
    pub hard: SupportVector,
    /// Final posterior LLRs.
    pub soft: Vec<f64>,
    /// Unsatisfied-check count after each iteration actually run. For zero
    /// iterations this holds the single count of the channel hard decision.
    pub unsat_per_iter: Vec<usize>,
    /// Whether the final hard decision satisfies every check.
    pub converged: bool,
}

impl DecoderOutput {
    pub fn failed(&self, criterion: FailureCriterion) -> bool {
        match criterion {
            FailureCriterion::NonCodeword => !self.converged,
            FailureCriterion::NotTransmitted => !self.hard.is_zero(),
        }
    }
}

/// Message-passing engine for one parity-check matrix.
///
/// Holds the Tanner graph in CSR form so repeated decodes (searches, sampling
/// loops) do not rebuild adjacency. All state is per-call; a `Decoder` is
/// freely shared across threads.
pub struct Decoder {
    cfg: DecoderConfig,
    n_vars: usize,
    n_checks: usize,
    // edge e: variable var_of[e], check chk_of[e]; CSR over both sides
    var_ptr: Vec<usize>,
    var_edges: Vec<u32>,
    chk_ptr: Vec<usize>,
    chk_edges: Vec<u32>,
    var_of: Vec<u32>,
}

impl Decoder {
    pub fn new(e: &ExponentMatrix, cfg: DecoderConfig) -> Self {
        let (m, n, z) = (e.rows(), e.cols(), e.circulant());
        let n_vars = n * z;
        let n_checks = m * z;

        // Edges in (block row, block column, offset) order: every variable
        // sees its checks in block-row order and every check sees its
        // variables in block-column order, independent of any shift.
        let mut var_of = Vec::new();
        let mut chk_of = Vec::new();
        for i in 0..m {
            for q in 0..n {
                let a = e.entry(i, q);
                if a < 0 {
                    continue;
                }
                let a = a as usize;
                for r in 0..z {
                    var_of.push((q * z + r) as u32);
                    chk_of.push((i * z + (r + z - a) % z) as u32);
                }
            }
        }
        let n_edges = var_of.len();

        let mut var_ptr = vec![0usize; n_vars + 1];
        for &v in &var_of {
            var_ptr[v as usize + 1] += 1;
        }
        for i in 0..n_vars {
            var_ptr[i + 1] += var_ptr[i];
        }
        let mut var_edges = vec![0u32; n_edges];
        let mut cursor = var_ptr.clone();
        for (eid, &v) in var_of.iter().enumerate() {
            var_edges[cursor[v as usize]] = eid as u32;
            cursor[v as usize] += 1;
        }

        let mut chk_ptr = vec![0usize; n_checks + 1];
        for &c in &chk_of {
            chk_ptr[c as usize + 1] += 1;
        }
        for i in 0..n_checks {
            chk_ptr[i + 1] += chk_ptr[i];
        }
        let mut chk_edges = vec![0u32; n_edges];
        let mut cursor = chk_ptr.clone();
        for (eid, &c) in chk_of.iter().enumerate() {
            chk_edges[cursor[c as usize]] = eid as u32;
            cursor[c as usize] += 1;
        }

        Self {
            cfg,
            n_vars,
            n_checks,
            var_ptr,
            var_edges,
            chk_ptr,
            chk_edges,
            var_of,
        }
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn decode(&self, llr: &[f64]) -> Result<DecoderOutput> {
        Ok(self.run(llr, None)?.0)
    }

    /// Like [`Decoder::decode`] but also returns the hard-decision support
    /// after every iteration; searches harvest oscillating error patterns
    /// from this trace.
    pub fn decode_trace(&self, llr: &[f64]) -> Result<(DecoderOutput, Vec<Vec<u32>>)> {
        let mut trace = Vec::new();
        let out = self.run(llr, Some(&mut trace))?.0;
        Ok((out, trace))
    }

    fn run(
        &self,
        llr: &[f64],
        mut trace: Option<&mut Vec<Vec<u32>>>,
    ) -> Result<(DecoderOutput, ())> {
        if llr.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: llr.len(),
            });
        }
        if let Some(bad) = llr.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index: bad });
        }

        let n_edges = self.var_of.len();
        let mut hard: Vec<bool> = llr.iter().map(|&v| v < 0.0).collect();
        let mut unsat_per_iter = Vec::new();

        if self.cfg.iterations == 0 {
            // channel hard decision, no message passing
            let unsat = self.count_unsat(&hard);
            unsat_per_iter.push(unsat);
            let soft = llr.to_vec();
            return Ok((self.finish(hard, soft, unsat_per_iter, unsat == 0), ()));
        }

        let mut v2c = vec![0.0f64; n_edges];
        for (eid, &v) in self.var_of.iter().enumerate() {
            v2c[eid] = llr[v as usize];
        }
        let mut c2v = vec![0.0f64; n_edges];
        let mut soft = llr.to_vec();

        for _ in 0..self.cfg.iterations {
            // check pass: normalized min with excluded self, sign product
            for c in 0..self.n_checks {
                let edges = &self.chk_edges[self.chk_ptr[c]..self.chk_ptr[c + 1]];
                if edges.len() < 2 {
                    // a degree-one check carries no extrinsic information
                    for &e in edges {
                        c2v[e as usize] = 0.0;
                    }
                    continue;
                }
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut argmin = 0u32;
                let mut sign = 1.0f64;
                for &e in edges {
                    let m = v2c[e as usize];
                    if m < 0.0 {
                        sign = -sign;
                    }
                    let mag = m.abs();
                    if mag < min1 {
                        min2 = min1;
                        min1 = mag;
                        argmin = e;
                    } else if mag < min2 {
                        min2 = mag;
                    }
                }
                for &e in edges {
                    let m = v2c[e as usize];
                    let mag = if e == argmin { min2 } else { min1 };
                    let s = if m < 0.0 { -sign } else { sign };
                    c2v[e as usize] = self.cfg.normalization * s * mag;
                }
            }

            // variable pass: totals in fixed block-row order, then extrinsic
            for v in 0..self.n_vars {
                let edges = &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]];
                let mut total = llr[v];
                for &e in edges {
                    total += c2v[e as usize];
                }
                for &e in edges {
                    v2c[e as usize] = total - c2v[e as usize];
                }
                soft[v] = total;
                hard[v] = total < 0.0;
            }

            let unsat = self.count_unsat(&hard);
            unsat_per_iter.push(unsat);
            if let Some(t) = trace.as_deref_mut() {
                t.push(support_of(&hard));
            }
            if self.cfg.early_exit && unsat == 0 {
                break;
            }
        }

        let converged = *unsat_per_iter.last().expect("at least one iteration") == 0;
        Ok((self.finish(hard, soft, unsat_per_iter, converged), ()))
    }

    fn finish(
        &self,
        hard: Vec<bool>,
        soft: Vec<f64>,
        unsat_per_iter: Vec<usize>,
        converged: bool,
    ) -> DecoderOutput {
        DecoderOutput {
            hard: SupportVector::from_sorted_unchecked(self.n_vars, support_of(&hard)),
            soft,
            unsat_per_iter,
            converged,
        }
    }

    fn count_unsat(&self, hard: &[bool]) -> usize {
        let mut unsat = 0;
        for c in 0..self.n_checks {
            let edges = &self.chk_edges[self.chk_ptr[c]..self.chk_ptr[c + 1]];
            let parity = edges
                .iter()
                .fold(false, |p, &e| p ^ hard[self.var_of[e as usize] as usize]);
            if parity {
                unsat += 1;
            }
        }
        unsat
    }
}

fn support_of(hard: &[bool]) -> Vec<u32> {
    hard.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u32))
        .collect()
}

/// One-shot decode without keeping the graph around.
pub fn decode(e: &ExponentMatrix, llr: &[f64], cfg: DecoderConfig) -> Result<DecoderOutput> {
    Decoder::new(e, cfg).decode(llr)
}

/// Indicator of decoding failure for a received symbol vector: 1 when the
/// decoder, fed the channel LLRs of `received`, fails under the configured
/// criterion.
pub fn failure_indicator(
    e: &ExponentMatrix,
    received: &[f64],
    cfg: DecoderConfig,
    channel: &ChannelModel,
) -> Result<bool> {
    let llr = channel.llr(received)?;
    let out = decode(e, &llr, cfg)?;
    Ok(out.failed(cfg.criterion))
}

/// Outcome of the failure-boundary probe along a trapping-set direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryDistance {
    Bounded {
        /// Squared Euclidean distance from the transmitted point to the first
        /// failing point on the ray.
        d_squared: f64,
        /// Ray parameter of the boundary; the displacement there is
        /// `2 * t * x_ts` in symbol space.
        t: f64,
        /// Set when failure was observed to be non-monotone along the ray.
        non_monotone: bool,
    },
    /// No failure up to the scan limit.
    Unbounded,
}

const BOUNDARY_T_MAX: f64 = 8.0;
const BOUNDARY_T_STEP: f64 = 0.25;

/// Squared distance from the transmitted point to the decoder-failure
/// boundary along the ray that flips the coordinates of `x_ts`.
///
/// The ray is `y(t) = c - 2 t x_ts` in symbol space (`t = 1` is the full flip
/// of the trapping set). Failure is assumed monotone in `t`; the first failing
/// `t` is located by scan plus bisection to absolute tolerance `tol`, and spot
/// checks on both sides mark the result when monotonicity visibly fails.
pub fn error_boundary_distance(
    e: &ExponentMatrix,
    x_ts: &SupportVector,
    cfg: DecoderConfig,
    channel: &ChannelModel,
    tol: f64,
) -> Result<BoundaryDistance> {
    if x_ts.is_zero() {
        return Err(Error::InvalidArgument(
            "boundary distance needs a nonzero direction".into(),
        ));
    }
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("bad tolerance {tol}")));
    }
    let decoder = Decoder::new(e, cfg);
    let n = e.n_vars();
    if x_ts.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x_ts.len(),
        });
    }

    let fails = |t: f64| -> Result<bool> {
        let mut y = vec![1.0f64; n];
        for &i in x_ts.support() {
            y[i as usize] -= 2.0 * t;
        }
        let llr = channel.llr(&y)?;
        let out = decoder.decode(&llr)?;
        Ok(out.failed(cfg.criterion))
    };

    // scan for the first failing step
    let mut t_lo = 0.0f64;
    let mut t_hi = None;
    let mut t = BOUNDARY_T_STEP;
    while t <= BOUNDARY_T_MAX + 1e-12 {
        if fails(t)? {
            t_hi = Some(t);
            break;
        }
        t_lo = t;
        t += BOUNDARY_T_STEP;
    }
    let Some(mut t_hi) = t_hi else {
        return Ok(BoundaryDistance::Unbounded);
    };

    while t_hi - t_lo > tol {
        let mid = 0.5 * (t_lo + t_hi);
        if fails(mid)? {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }

    // monotonicity spot checks around the located boundary
    let mut non_monotone = false;
    for frac in [0.25, 0.5, 0.75] {
        let probe = frac * t_lo;
        if probe > 0.0 && fails(probe)? {
            non_monotone = true;
        }
    }
    for step in [1.0, 2.0] {
        let probe = t_hi + step * BOUNDARY_T_STEP;
        if probe <= BOUNDARY_T_MAX && !fails(probe)? {
            non_monotone = true;
        }
    }

    let w = x_ts.weight() as f64;
    Ok(BoundaryDistance::Bounded {
        d_squared: 4.0 * t_hi * t_hi * w,
        t: t_hi,
        non_monotone,
    })
}

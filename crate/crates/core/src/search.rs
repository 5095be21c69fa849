//! Trapping-set search and enumeration.
//!
//! A `(w, v)` trapping set is any nonzero vector together with its Hamming
//! weight and the weight of its syndrome; the searches here hunt for the low
//! `(w, v)` classes that dominate the decoder error floor. Results are kept
//! one representative per shift orbit, since the blockwise shifts are code
//! automorphisms and everything downstream (boundary distances, sampling
//! weights) is constant on an orbit.
//!
//! Three search backends are built in behind the [`Solver`] trait: an
//! exhaustive weight-bounded scan for small codes, a random-impulse decoder
//! probe, and a cycle-seeded impulse probe that biases the variable sets of
//! short Tanner-graph cycles. The lift-based enumeration runs a solver on
//! degree-2 covers of the code, folds every hit back down, reclassifies it,
//! and merges the orbit representatives across covers.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{
    error_boundary_distance, BoundaryDistance, ChannelModel, Decoder, DecoderConfig,
};
use crate::error::{Error, Result};
use crate::exponent::ExponentMatrix;
use crate::rng::derive_seed;
use crate::support::SupportVector;
use crate::transforms::{
    canonical_support, encode_key, lift_exponents, project_vector, shift, LiftSpec,
};

/// Flag set on a merged record whose weight shrank when folded down from a
/// cover (the projected weight differs from the weight found on the cover).
pub const FLAG_WEIGHT_CHANGED: &str = "wchange";

const EXHAUSTIVE_COST_CAP: u128 = 1 << 26;
const ENUM_LIFT_FACTOR: usize = 2;

/// Which built-in search runs and how candidates are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Weight-bounded scan of every support; complete inside the box.
    Exhaustive,
    /// Impulse search ranked by failure-boundary distance; candidates with no
    /// reachable failure boundary are dropped.
    StrategyI,
    /// Impulse search constrained to `w <= w_max`, `v <= v(w)`.
    StrategyII,
}

/// Bound on the unsatisfied-check count as a function of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VBound {
    /// `v <= w`, the common default.
    EqualsW,
    /// A flat cap independent of the weight.
    Fixed(usize),
}

impl VBound {
    pub fn bound(&self, w: usize) -> usize {
        match self {
            VBound::EqualsW => w,
            VBound::Fixed(c) => *c,
        }
    }
}

impl fmt::Display for VBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VBound::EqualsW => write!(f, "w"),
            VBound::Fixed(c) => write!(f, "{c}"),
        }
    }
}

/// How impulse trials pick the variables they bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpulseSeeding {
    /// Small uniformly random variable sets.
    Random,
    /// Variable sets of short Tanner-graph cycles, randomly shifted.
    Cycle,
}

#[derive(Debug, Clone)]
pub struct SearchStrategy {
    pub mode: SearchMode,
    pub w_max: usize,
    pub v_bound: VBound,
    /// Number of impulse trials; ignored by the exhaustive backend.
    pub budget: usize,
    /// Displacement applied to biased coordinates, in units of the symbol
    /// amplitude; 2 lands exactly on the flipped symbol.
    pub impulse_amplitude: f64,
    pub seeding: ImpulseSeeding,
    pub seed: u64,
}

impl SearchStrategy {
    pub fn exhaustive(w_max: usize) -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            w_max,
            v_bound: VBound::EqualsW,
            budget: 1,
            impulse_amplitude: 2.5,
            seeding: ImpulseSeeding::Random,
            seed: 0,
        }
    }

    pub fn impulse(w_max: usize, budget: usize, seed: u64) -> Self {
        Self {
            mode: SearchMode::StrategyII,
            w_max,
            v_bound: VBound::EqualsW,
            budget,
            impulse_amplitude: 2.5,
            seeding: ImpulseSeeding::Random,
            seed,
        }
    }

    pub fn cycle(w_max: usize, budget: usize, seed: u64) -> Self {
        Self {
            seeding: ImpulseSeeding::Cycle,
            ..Self::impulse(w_max, budget, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_max == 0 {
            return Err(Error::InvalidArgument("w_max must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidArgument(
                "impulse trial budget must be positive".into(),
            ));
        }
        if !self.impulse_amplitude.is_finite() || self.impulse_amplitude <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "impulse amplitude {} must be positive",
                self.impulse_amplitude
            )));
        }
        Ok(())
    }

    /// Single-token description stored in database headers.
    pub fn descriptor(&self) -> String {
        let name = match (self.mode, self.seeding) {
            (SearchMode::Exhaustive, _) => "exhaustive",
            (SearchMode::StrategyII, ImpulseSeeding::Random) => "impulse",
            (SearchMode::StrategyII, ImpulseSeeding::Cycle) => "cycle",
            (SearchMode::StrategyI, ImpulseSeeding::Random) => "impulse-ranked",
            (SearchMode::StrategyI, ImpulseSeeding::Cycle) => "cycle-ranked",
        };
        let mut out = format!("{name};wmax={};v={}", self.w_max, self.v_bound);
        if self.mode != SearchMode::Exhaustive {
            out.push_str(&format!(
                ";trials={};amp={}",
                self.budget, self.impulse_amplitude
            ));
        }
        out
    }
}

/// One trapping-set orbit: the canonical-shift support, its class `(w, v)`,
/// the orbit key, and bookkeeping flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsRecord {
    pub support: SupportVector,
    pub w: usize,
    pub v: usize,
    pub canonical_key: Vec<u8>,
    pub flags: Vec<String>,
}

impl TsRecord {
    /// Canonicalizes `support` under the shift group of an `n`-column code
    /// with circulant `z` and records the given class data.
    pub fn new(
        support: SupportVector,
        w: usize,
        v: usize,
        flags: Vec<String>,
        n: usize,
        z: usize,
    ) -> Result<Self> {
        if support.weight() != w {
            return Err(Error::InvalidArgument(format!(
                "stored weight {w} does not match support weight {}",
                support.weight()
            )));
        }
        let canon = canonical_support(&support, n, z)?;
        let canonical_key = encode_key(canon.support());
        Ok(Self {
            support: canon,
            w,
            v,
            canonical_key,
            flags,
        })
    }

    /// Classifies `support` against `e` and canonicalizes it.
    pub fn classify(
        e: &ExponentMatrix,
        support: SupportVector,
        flags: Vec<String>,
    ) -> Result<Self> {
        let (w, v) = e.classify_ts(&support)?;
        Self::new(support, w, v, flags, e.cols(), e.circulant())
    }

    fn sort_key(&self) -> (usize, usize, &[u8]) {
        (self.w, self.v, &self.canonical_key)
    }
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    supp: Vec<u32>,
    w: usize,
    v: usize,
    flags: Vec<String>,
}

/// Fixed fields of the database header line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbHeader {
    pub m: usize,
    pub n: usize,
    pub z: usize,
    pub matrix_digest: String,
    pub strategy: String,
    pub seed: u64,
}

/// How a database produced by the lift-based enumeration was built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftMeta {
    pub factor: usize,
    pub root_seed: u64,
    pub n_lifts: usize,
    pub b_digests: Vec<String>,
}

/// Optional metadata carried on a `#meta` line after the header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_digest: Option<String>,
}

impl DbMeta {
    fn is_empty(&self) -> bool {
        self.lift.is_none() && self.manifest_digest.is_none()
    }
}

/// A set of pairwise shift-inequivalent trapping-set records for one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TsDatabase {
    pub header: DbHeader,
    pub meta: DbMeta,
    records: BTreeMap<Vec<u8>, TsRecord>,
}

impl TsDatabase {
    pub fn new(header: DbHeader) -> Self {
        Self {
            header,
            meta: DbMeta::default(),
            records: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Inserts one record, merging with an existing representative of the
    /// same orbit. A flag survives a merge only if every sighting carried it,
    /// so a record found both directly and through a weight-reducing fold
    /// counts as directly established.
    pub fn insert(&mut self, record: TsRecord) {
        match self.records.get_mut(&record.canonical_key) {
            Some(existing) => {
                existing.flags.retain(|f| record.flags.contains(f));
            }
            None => {
                self.records.insert(record.canonical_key.clone(), record);
            }
        }
    }

    pub fn get(&self, key: &[u8]) -> Option<&TsRecord> {
        self.records.get(key)
    }

    /// Records sorted by `(w, v, canonical key)`, the on-disk order.
    pub fn records(&self) -> Vec<&TsRecord> {
        let mut out: Vec<&TsRecord> = self.records.values().collect();
        out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        out
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = format!(
            "#qcts v1 {} {} {} {} {} {}\n",
            h.m, h.n, h.z, h.matrix_digest, h.strategy, h.seed
        );
        if !self.meta.is_empty() {
            out.push_str("#meta ");
            out.push_str(&serde_json::to_string(&self.meta).expect("meta serializes"));
            out.push('\n');
        }
        for record in self.records() {
            let line = RecordLine {
                supp: record.support.support().to_vec(),
                w: record.w,
                v: record.v,
                flags: record.flags.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn digest(&self) -> String {
        crate::digest::short_hex(self.to_text().as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let body = text.strip_suffix('\n').ok_or_else(|| Error::Parse {
            line: 0,
            msg: "file must end with a newline".into(),
        })?;
        let mut lines = body.split('\n').enumerate();
        let (_, header_line) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header_line.split(' ').collect();
        if fields.len() != 8 || fields[0] != "#qcts" || fields[1] != "v1" {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be `#qcts v1 m n z matrix_digest strategy seed`".into(),
            });
        }
        let parse_num = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad {what} {s:?}"),
            })
        };
        let header = DbHeader {
            m: parse_num(fields[2], "m")?,
            n: parse_num(fields[3], "n")?,
            z: parse_num(fields[4], "z")?,
            matrix_digest: fields[5].to_string(),
            strategy: fields[6].to_string(),
            seed: fields[7].parse().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad seed {:?}", fields[7]),
            })?,
        };
        if header.m == 0 || header.n == 0 || header.z == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: "dimensions must be positive".into(),
            });
        }

        let mut db = Self::new(header);
        let len = db.header.n * db.header.z;
        for (idx, line) in lines {
            let lineno = idx + 1;
            if let Some(meta) = line.strip_prefix("#meta ") {
                db.meta = serde_json::from_str(meta).map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("bad meta: {e}"),
                })?;
                continue;
            }
            let parsed: RecordLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad record: {e}"),
            })?;
            let support = SupportVector::new(len, parsed.supp).map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            let record = TsRecord::new(
                support.clone(),
                parsed.w,
                parsed.v,
                parsed.flags,
                db.header.n,
                db.header.z,
            )
            .map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            if record.support != support {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "record support is not in canonical shift position".into(),
                });
            }
            if db.records.contains_key(&record.canonical_key) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "duplicate orbit".into(),
                });
            }
            db.records.insert(record.canonical_key.clone(), record);
        }
        Ok(db)
    }
}

fn make_header(e: &ExponentMatrix, strategy: String, seed: u64) -> DbHeader {
    DbHeader {
        m: e.rows(),
        n: e.cols(),
        z: e.circulant(),
        matrix_digest: e.digest(),
        strategy,
        seed,
    }
}

/// A trapping-set search backend. The built-ins are [`ExhaustiveSearch`] and
/// [`ImpulseSearch`]; anything implementing this trait plugs into
/// [`enumerate_with_solver`].
pub trait Solver: Sync {
    /// Returns canonical, pairwise-inequivalent records satisfying the
    /// strategy's constraints.
    fn search(
        &self,
        e: &ExponentMatrix,
        cfg: &DecoderConfig,
        strategy: &SearchStrategy,
    ) -> Result<Vec<TsRecord>>;
}

/// Complete weight-bounded enumeration; refuses when the candidate count
/// exceeds a fixed work cap (codes with `n*z <= 24` always fit).
pub struct ExhaustiveSearch;

impl Solver for ExhaustiveSearch {
    fn search(
        &self,
        e: &ExponentMatrix,
        _cfg: &DecoderConfig,
        strategy: &SearchStrategy,
    ) -> Result<Vec<TsRecord>> {
        strategy.validate()?;
        let nz = e.n_vars();
        let w_cap = strategy.w_max.min(nz);
        let cost = enumeration_cost(nz, w_cap);
        if cost > EXHAUSTIVE_COST_CAP {
            return Err(Error::ExhaustiveTooLarge {
                nz,
                w_max: strategy.w_max,
                cost,
                cap: EXHAUSTIVE_COST_CAP,
            });
        }

        // per-variable check lists over all block rows
        let var_checks: Vec<Vec<u32>> = (0..nz)
            .map(|j| {
                (0..e.rows())
                    .filter(|&i| e.entry(i, j / e.circulant()) >= 0)
                    .map(|i| (i * e.circulant()) as u32 + e.check_index_map(i, j).unwrap() as u32)
                    .collect()
            })
            .collect();

        struct Dfs<'a> {
            e: &'a ExponentMatrix,
            var_checks: &'a [Vec<u32>],
            strategy: &'a SearchStrategy,
            parity: Vec<bool>,
            unsat: usize,
            stack: Vec<u32>,
            found: BTreeMap<Vec<u8>, TsRecord>,
        }

        impl Dfs<'_> {
            fn toggle(&mut self, j: usize) {
                for &c in &self.var_checks[j] {
                    let p = &mut self.parity[c as usize];
                    *p = !*p;
                    if *p {
                        self.unsat += 1;
                    } else {
                        self.unsat -= 1;
                    }
                }
            }

            fn walk(&mut self, start: usize, w_cap: usize) -> Result<()> {
                let nz = self.e.n_vars();
                for j in start..nz {
                    self.toggle(j);
                    self.stack.push(j as u32);
                    let w = self.stack.len();
                    if self.unsat <= self.strategy.v_bound.bound(w) {
                        let support =
                            SupportVector::new(nz, self.stack.clone()).expect("sorted stack");
                        let record = TsRecord::new(
                            support,
                            w,
                            self.unsat,
                            Vec::new(),
                            self.e.cols(),
                            self.e.circulant(),
                        )?;
                        self.found
                            .entry(record.canonical_key.clone())
                            .or_insert(record);
                    }
                    if w < w_cap {
                        self.walk(j + 1, w_cap)?;
                    }
                    self.stack.pop();
                    self.toggle(j);
                }
                Ok(())
            }
        }

        let mut dfs = Dfs {
            e,
            var_checks: &var_checks,
            strategy,
            parity: vec![false; e.n_checks()],
            unsat: 0,
            stack: Vec::with_capacity(w_cap),
            found: BTreeMap::new(),
        };
        dfs.walk(0, w_cap)?;

        let mut out: Vec<TsRecord> = dfs.found.into_values().collect();
        out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(out)
    }
}

/// Decoder-probe search: bias a few coordinates of an otherwise clean channel
/// toward errors, decode, and harvest the supports the decoder gets stuck on.
pub struct ImpulseSearch {
    pub seeding: ImpulseSeeding,
}

impl Solver for ImpulseSearch {
    fn search(
        &self,
        e: &ExponentMatrix,
        cfg: &DecoderConfig,
        strategy: &SearchStrategy,
    ) -> Result<Vec<TsRecord>> {
        strategy.validate()?;
        let decoder = Decoder::new(e, *cfg);
        let nz = e.n_vars();
        let z = e.circulant();
        let n = e.cols();

        let cycle_seeds = match self.seeding {
            ImpulseSeeding::Cycle => short_cycle_seeds(e),
            ImpulseSeeding::Random => Vec::new(),
        };

        let per_trial: Vec<Vec<TsRecord>> = (0..strategy.budget)
            .into_par_iter()
            .map(|trial| -> Result<Vec<TsRecord>> {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(strategy.seed, trial as u64));
                let target: Vec<u32> = if cycle_seeds.is_empty() {
                    let size = rng.random_range(1..=4.min(nz));
                    let mut picked = std::collections::BTreeSet::new();
                    while picked.len() < size {
                        picked.insert(rng.random_range(0..nz as u32));
                    }
                    picked.into_iter().collect()
                } else {
                    // a single short cycle rarely traps a well-connected
                    // decoder; overlapping a few shifted cycles does
                    let unions = rng.random_range(1..=4usize);
                    let mut picked = std::collections::BTreeSet::new();
                    for _ in 0..unions {
                        let pick = &cycle_seeds[rng.random_range(0..cycle_seeds.len())];
                        let s = rng.random_range(0..z);
                        picked.extend(shift(pick, s, n, z)?.support().iter().copied());
                    }
                    picked.into_iter().collect()
                };

                // clean symbols are +1; targeted coordinates are pushed past
                // the decision boundary by the impulse amplitude
                let mut llr = vec![2.0f64; nz];
                for &j in &target {
                    llr[j as usize] = 2.0 * (1.0 - strategy.impulse_amplitude);
                }
                let (out, trace) = decoder.decode_trace(&llr)?;
                if !out.failed(cfg.criterion) {
                    return Ok(Vec::new());
                }

                // harvest the final support and the closest approach to a
                // satisfied state along the trajectory
                let mut candidates: Vec<Vec<u32>> = vec![out.hard.support().to_vec()];
                if let Some(best) = out
                    .unsat_per_iter
                    .iter()
                    .enumerate()
                    .min_by_key(|&(i, &u)| (u, i))
                    .map(|(i, _)| i)
                {
                    if best + 1 != trace.len() && !trace.is_empty() {
                        candidates.push(trace[best].clone());
                    }
                }

                let mut records = Vec::new();
                for support in candidates {
                    if support.is_empty() || support.len() > strategy.w_max {
                        continue;
                    }
                    let x = SupportVector::new(nz, support)?;
                    let record = TsRecord::classify(e, x, Vec::new())?;
                    if record.v <= strategy.v_bound.bound(record.w) {
                        records.push(record);
                    }
                }
                Ok(records)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut found: BTreeMap<Vec<u8>, TsRecord> = BTreeMap::new();
        for records in per_trial {
            for record in records {
                found.entry(record.canonical_key.clone()).or_insert(record);
            }
        }
        let mut out: Vec<TsRecord> = found.into_values().collect();
        out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(out)
    }
}

fn enumeration_cost(nz: usize, w_max: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for w in 1..=w_max.min(nz) {
        binom = binom.saturating_mul((nz - w + 1) as u128) / w as u128;
        total = total.saturating_add(binom);
        if total > EXHAUSTIVE_COST_CAP {
            return total;
        }
    }
    total
}

fn solve_records(
    e: &ExponentMatrix,
    cfg: &DecoderConfig,
    strategy: &SearchStrategy,
) -> Result<Vec<TsRecord>> {
    let records = match strategy.mode {
        SearchMode::Exhaustive => ExhaustiveSearch.search(e, cfg, strategy)?,
        SearchMode::StrategyII => ImpulseSearch {
            seeding: strategy.seeding,
        }
        .search(e, cfg, strategy)?,
        SearchMode::StrategyI => {
            let raw = ImpulseSearch {
                seeding: strategy.seeding,
            }
            .search(e, cfg, strategy)?;
            // rank by distance to the failure boundary; unreachable ones out
            let channel = ChannelModel::new(1.0)?;
            let mut ranked: Vec<(f64, TsRecord)> = Vec::new();
            for record in raw {
                if let BoundaryDistance::Bounded { d_squared, .. } =
                    error_boundary_distance(e, &record.support, *cfg, &channel, 1e-2)?
                {
                    ranked.push((d_squared, record));
                }
            }
            ranked.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| a.1.canonical_key.cmp(&b.1.canonical_key))
            });
            ranked.into_iter().map(|(_, r)| r).collect()
        }
    };
    Ok(records)
}

/// Runs the configured search on one matrix and packages the results.
pub fn solve(
    e: &ExponentMatrix,
    cfg: &DecoderConfig,
    strategy: &SearchStrategy,
) -> Result<TsDatabase> {
    strategy.validate()?;
    let records = solve_records(e, cfg, strategy)?;
    let mut db = TsDatabase::new(make_header(e, strategy.descriptor(), strategy.seed));
    for record in records {
        db.insert(record);
    }
    Ok(db)
}

/// Result of a lift-based enumeration: the merged base-code database plus the
/// histogram of `(w - w', v - v')` class changes across the fold-down.
pub struct EnumerationOutcome {
    pub db: TsDatabase,
    pub diff: DiffTable,
    /// Total records found on the covers, before folding and merging.
    pub lifted_records: usize,
}

/// Lift, solve and fold-down enumeration with deterministically derived
/// covers:
/// lift `j` and its solver stream are seeded from `root_seed`, so a run is
/// reproducible from the root alone.
pub fn enumerate_qc(
    e: &ExponentMatrix,
    n_lifts: usize,
    strategy: &SearchStrategy,
    cfg: &DecoderConfig,
    root_seed: u64,
) -> Result<TsDatabase> {
    Ok(enumerate_qc_full(e, n_lifts, strategy, cfg, root_seed)?.db)
}

/// As [`enumerate_qc`], returning the class-change histogram as well.
pub fn enumerate_qc_full(
    e: &ExponentMatrix,
    n_lifts: usize,
    strategy: &SearchStrategy,
    cfg: &DecoderConfig,
    root_seed: u64,
) -> Result<EnumerationOutcome> {
    if n_lifts == 0 {
        return Err(Error::InvalidArgument(
            "enumeration needs at least one lift".into(),
        ));
    }
    let lifts = (0..n_lifts)
        .map(|j| {
            LiftSpec::random(
                ENUM_LIFT_FACTOR,
                e.rows(),
                e.cols(),
                derive_seed(root_seed, 2 * j as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let solve_seeds: Vec<u64> = (0..n_lifts)
        .map(|j| derive_seed(root_seed, 2 * j as u64 + 1))
        .collect();
    enumerate_impl(
        e,
        &lifts,
        &solve_seeds,
        strategy,
        cfg,
        root_seed,
        &BuiltinSolver,
    )
}

/// Lift-based enumeration over caller-supplied covers.
pub fn enumerate_with_lifts(
    e: &ExponentMatrix,
    lifts: &[LiftSpec],
    strategy: &SearchStrategy,
    cfg: &DecoderConfig,
) -> Result<EnumerationOutcome> {
    let solve_seeds: Vec<u64> = (0..lifts.len())
        .map(|j| derive_seed(strategy.seed, j as u64))
        .collect();
    enumerate_impl(
        e,
        lifts,
        &solve_seeds,
        strategy,
        cfg,
        strategy.seed,
        &BuiltinSolver,
    )
}

/// Lift-based enumeration with a custom search backend.
pub fn enumerate_with_solver(
    e: &ExponentMatrix,
    lifts: &[LiftSpec],
    strategy: &SearchStrategy,
    cfg: &DecoderConfig,
    solver: &dyn Solver,
) -> Result<EnumerationOutcome> {
    let solve_seeds: Vec<u64> = (0..lifts.len())
        .map(|j| derive_seed(strategy.seed, j as u64))
        .collect();
    enumerate_impl(e, lifts, &solve_seeds, strategy, cfg, strategy.seed, solver)
}

/// Dispatches to the built-in backend selected by the strategy mode.
struct BuiltinSolver;

impl Solver for BuiltinSolver {
    fn search(
        &self,
        e: &ExponentMatrix,
        cfg: &DecoderConfig,
        strategy: &SearchStrategy,
    ) -> Result<Vec<TsRecord>> {
        solve_records(e, cfg, strategy)
    }
}

fn enumerate_impl(
    e: &ExponentMatrix,
    lifts: &[LiftSpec],
    solve_seeds: &[u64],
    strategy: &SearchStrategy,
    cfg: &DecoderConfig,
    recorded_seed: u64,
    solver: &dyn Solver,
) -> Result<EnumerationOutcome> {
    strategy.validate()?;
    if lifts.is_empty() {
        return Err(Error::InvalidArgument(
            "enumeration needs at least one lift".into(),
        ));
    }
    let (n, z) = (e.cols(), e.circulant());

    // Solve each cover with the weight box only: a fold-down can only lower
    // `v`, so bounding it on the cover would lose base trapping sets whose
    // cover preimages have larger syndromes. The user's box is applied to the
    // folded, reclassified records below.
    let per_lift: Vec<Vec<TsRecord>> = lifts
        .par_iter()
        .zip(solve_seeds.par_iter())
        .map(|(spec, &seed)| -> Result<Vec<TsRecord>> {
            let lifted = lift_exponents(e, spec)?;
            let strat = SearchStrategy {
                seed,
                v_bound: VBound::Fixed(lifted.n_checks()),
                ..strategy.clone()
            };
            solver.search(&lifted, cfg, &strat)
        })
        .collect::<Result<Vec<_>>>()?;

    let descriptor = format!("{};lifts={}", strategy.descriptor(), lifts.len());
    let mut db = TsDatabase::new(make_header(e, descriptor, recorded_seed));
    db.meta.lift = Some(LiftMeta {
        factor: lifts[0].factor(),
        root_seed: recorded_seed,
        n_lifts: lifts.len(),
        b_digests: lifts.iter().map(|l| l.digest()).collect(),
    });

    let mut diff = DiffTable::default();
    let mut lifted_records = 0;
    for (spec, records) in lifts.iter().zip(&per_lift) {
        let z_lift = spec.factor() * z;
        for record in records {
            lifted_records += 1;
            let folded = project_vector(&record.support, z_lift, z, n)?;
            let (w2, v2) = e.classify_ts(&folded)?;
            diff.add(record.w as i64 - w2 as i64, record.v as i64 - v2 as i64);
            if w2 == 0 {
                continue;
            }
            if w2 > strategy.w_max || v2 > strategy.v_bound.bound(w2) {
                continue;
            }
            let flags = if w2 != record.w {
                vec![FLAG_WEIGHT_CHANGED.to_string()]
            } else {
                Vec::new()
            };
            db.insert(TsRecord::new(folded, w2, v2, flags, n, z)?);
        }
    }

    Ok(EnumerationOutcome {
        db,
        diff,
        lifted_records,
    })
}

/// Collapses a record list to one canonical representative per shift orbit.
/// Idempotent and order-independent; flags survive only when every member of
/// an orbit carries them.
pub fn dedup_orbits(records: Vec<TsRecord>, n: usize, z: usize) -> Result<Vec<TsRecord>> {
    let mut map: BTreeMap<Vec<u8>, TsRecord> = BTreeMap::new();
    for record in records {
        if record.support.len() != n * z {
            return Err(Error::LengthMismatch {
                expected: n * z,
                got: record.support.len(),
            });
        }
        let canon = TsRecord::new(record.support, record.w, record.v, record.flags, n, z)?;
        match map.get_mut(&canon.canonical_key) {
            Some(existing) => existing.flags.retain(|f| canon.flags.contains(f)),
            None => {
                map.insert(canon.canonical_key.clone(), canon);
            }
        }
    }
    let mut out: Vec<TsRecord> = map.into_values().collect();
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(out)
}

/// Count of records per `(w, v)` class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistributionTable {
    counts: BTreeMap<(usize, usize), u64>,
}

impl DistributionTable {
    pub fn from_counts(counts: BTreeMap<(usize, usize), u64>) -> Self {
        Self { counts }
    }

    pub fn count(&self, w: usize, v: usize) -> u64 {
        self.counts.get(&(w, v)).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.counts
    }

    /// CSV rows `w,v,count` in ascending class order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,v,count\n");
        for (&(w, v), &count) in &self.counts {
            out.push_str(&format!("{w},{v},{count}\n"));
        }
        out
    }
}

impl fmt::Display for DistributionTable {
    /// Grid with one row per weight `w` and one column per syndrome weight
    /// `v`; cells above the `v = w` diagonal stay blank unless occupied.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.counts.is_empty() {
            return writeln!(f, "(empty)");
        }
        let w_max = self.counts.keys().map(|&(w, _)| w).max().unwrap();
        let w_min = self.counts.keys().map(|&(w, _)| w).min().unwrap().min(1);
        let v_max = self.counts.keys().map(|&(_, v)| v).max().unwrap();
        let v_min = self.counts.keys().map(|&(_, v)| v).min().unwrap().min(1);

        let cell = |w: usize, v: usize| -> String {
            match self.counts.get(&(w, v)) {
                Some(c) => c.to_string(),
                None if v <= w => "0".to_string(),
                None => String::new(),
            }
        };
        let mut widths: Vec<usize> = Vec::new();
        for v in v_min..=v_max {
            let mut width = v.to_string().len();
            for w in w_min..=w_max {
                width = width.max(cell(w, v).len());
            }
            widths.push(width);
        }
        let label_width = w_max.to_string().len().max(3);

        write!(f, "{:>label_width$}", "w\\v")?;
        for (i, v) in (v_min..=v_max).enumerate() {
            write!(f, " {:>width$}", v, width = widths[i])?;
        }
        writeln!(f)?;
        for w in w_min..=w_max {
            write!(f, "{w:>label_width$}")?;
            for (i, v) in (v_min..=v_max).enumerate() {
                write!(f, " {:>width$}", cell(w, v), width = widths[i])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-class counts of a database.
pub fn distribution_table(db: &TsDatabase) -> DistributionTable {
    let mut counts = BTreeMap::new();
    for record in db.records() {
        *counts.entry((record.w, record.v)).or_insert(0) += 1;
    }
    DistributionTable { counts }
}

/// Histogram of `(w - w', v - v')` class changes under a fold-down.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffTable {
    counts: BTreeMap<(i64, i64), u64>,
    total: u64,
}

impl DiffTable {
    pub fn add(&mut self, dw: i64, dv: i64) {
        *self.counts.entry((dw, dv)).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, dw: i64, dv: i64) -> u64 {
        self.counts.get(&(dw, dv)).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<(i64, i64), u64> {
        &self.counts
    }

    /// Bins with their share of the total, in percent.
    pub fn percentages(&self) -> Vec<((i64, i64), f64)> {
        self.counts
            .iter()
            .map(|(&bin, &count)| (bin, 100.0 * count as f64 / self.total as f64))
            .collect()
    }

    /// CSV rows `dw,dv,percent` with six-decimal percentages.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dw,dv,percent\n");
        for ((dw, dv), pct) in self.percentages() {
            out.push_str(&format!("{dw},{dv},{pct:.6}\n"));
        }
        out
    }
}

impl fmt::Display for DiffTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>6} {:>12}", "w-w'", "v-v'", "frequency,%")?;
        for ((dw, dv), pct) in self.percentages() {
            writeln!(f, "{dw:>6} {dv:>6} {pct:>12.6}")?;
        }
        Ok(())
    }
}

/// Folds every record of a cover database down to the base matrix and bins
/// the class changes `(w - w', v - v')`.
pub fn projection_diff_table(lifted_db: &TsDatabase, e: &ExponentMatrix) -> Result<DiffTable> {
    let (n, z) = (e.cols(), e.circulant());
    let z_lift = lifted_db.header.z;
    if lifted_db.header.n != n || z_lift <= z || !z_lift.is_multiple_of(z) {
        return Err(Error::DimensionMismatch(format!(
            "database is {}x(z={}) which is not a proper cover of {}x(z={})",
            lifted_db.header.n, z_lift, n, z
        )));
    }
    let mut diff = DiffTable::default();
    for record in lifted_db.records() {
        let folded = project_vector(&record.support, z_lift, z, n)?;
        let (w2, v2) = e.classify_ts(&folded)?;
        diff.add(record.w as i64 - w2 as i64, record.v as i64 - v2 as i64);
    }
    Ok(diff)
}

/// Variable sets of short cycles in the Tanner graph, one per block column,
/// deduplicated up to shifts. Used to seed impulse trials.
pub fn short_cycle_seeds(e: &ExponentMatrix) -> Vec<SupportVector> {
    const MAX_DEPTH: u32 = 6; // cycles of up to 12 edges

    let (m, n, z) = (e.rows(), e.cols(), e.circulant());
    let n_vars = n * z;
    let n_checks = m * z;
    let n_nodes = n_vars + n_checks;

    // node ids: variables first, then checks
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
    for j in 0..n_vars {
        for i in 0..m {
            if e.entry(i, j / z) >= 0 {
                let c = n_vars + i * z + e.check_index_map(i, j).unwrap();
                adj[j].push(c as u32);
                adj[c].push(j as u32);
            }
        }
    }

    let mut stamp = vec![u32::MAX; n_nodes];
    let mut parent = vec![u32::MAX; n_nodes];
    let mut dist = vec![0u32; n_nodes];
    let mut seen_keys = std::collections::BTreeSet::new();
    let mut seeds = Vec::new();

    for (run, q) in (0..n).enumerate() {
        let run = run as u32;
        let start = (q * z) as u32;
        let mut queue = std::collections::VecDeque::new();
        stamp[start as usize] = run;
        parent[start as usize] = start;
        dist[start as usize] = 0;
        queue.push_back(start);

        let mut cycle: Option<(u32, u32)> = None;
        'bfs: while let Some(u) = queue.pop_front() {
            if dist[u as usize] >= MAX_DEPTH {
                continue;
            }
            for &w in &adj[u as usize] {
                if w == parent[u as usize] {
                    continue;
                }
                if stamp[w as usize] == run {
                    cycle = Some((u, w));
                    break 'bfs;
                }
                stamp[w as usize] = run;
                parent[w as usize] = u;
                dist[w as usize] = dist[u as usize] + 1;
                queue.push_back(w);
            }
        }

        let Some((u, w)) = cycle else { continue };
        // walk both branches to their meeting point and harvest variable ids
        let mut path_u = Vec::new();
        let mut node = u;
        loop {
            path_u.push(node);
            if parent[node as usize] == node {
                break;
            }
            node = parent[node as usize];
        }
        let mut vars = std::collections::BTreeSet::new();
        let mut node = w;
        let meet_pos = loop {
            if let Some(pos) = path_u.iter().position(|&x| x == node) {
                break pos;
            }
            if (node as usize) < n_vars {
                vars.insert(node);
            }
            node = parent[node as usize];
        };
        for &x in &path_u[..=meet_pos] {
            if (x as usize) < n_vars {
                vars.insert(x);
            }
        }
        if vars.len() < 2 {
            continue;
        }
        let support = SupportVector::new(n_vars, vars.into_iter().collect()).unwrap();
        if let Ok((key, _)) = crate::transforms::canonical_form(&support, n, z) {
            if seen_keys.insert(key) {
                seeds.push(support);
            }
        }
    }
    seeds
}

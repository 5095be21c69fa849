//! Trapping-set tooling for quasi-cyclic LDPC codes with composite circulant
//! size: exponent-matrix arithmetic, projection and lifting between circulant
//! sizes, a shift-equivariant min-sum decoder, lift-based trapping-set
//! enumeration, and a shift-group-reduced importance-sampling estimator of
//! the error-floor probability.
//!
//! Everything operates on the compact exponent representation; full
//! parity-check matrices are only ever expanded inside test oracles.
//!
//! ```
//! use qcts::search::{solve, SearchStrategy};
//! use qcts::weighing::estimate_pf;
//! use qcts::{BiasEnsemble, DecoderConfig, ExponentMatrix};
//!
//! // a 2x4 grid of 6x6 circulants, 24 variables
//! let e = ExponentMatrix::parse("2 4 6\n0 2 5 1\n3 0 4 2\n")?;
//!
//! // every (w, v) class with w <= 3, v <= w, one record per shift orbit
//! let db = solve(&e, &DecoderConfig::default(), &SearchStrategy::exhaustive(3))?;
//! assert!(!db.is_empty());
//!
//! // importance-sample the failure probability around the two worst orbits
//! let basis = db.records().iter().take(2).map(|r| r.support.clone()).collect();
//! let ensemble = BiasEnsemble::new(basis, 1.7, 1.1, e.cols(), e.circulant())?;
//! let estimate = estimate_pf(&e, &ensemble, &DecoderConfig::default(), 2_000, 7)?;
//! assert!(estimate.estimate > 0.0);
//! # Ok::<(), qcts::Error>(())
//! ```

pub mod decoder;
pub mod digest;
pub mod error;
pub mod exponent;
pub mod rng;
pub mod search;
pub mod support;
pub mod transforms;
pub mod weighing;

pub use decoder::{ChannelModel, Decoder, DecoderConfig, DecoderOutput, FailureCriterion};
pub use error::{Error, Result};
pub use exponent::ExponentMatrix;
pub use search::{
    DbHeader, DiffTable, DistributionTable, ImpulseSeeding, SearchMode, SearchStrategy, Solver,
    TsDatabase, TsRecord, VBound,
};
pub use support::SupportVector;
pub use transforms::LiftSpec;
pub use weighing::{BiasEnsemble, EstimateOptions, PfEstimate, TableSet};

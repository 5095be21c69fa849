//! `qcts`: trapping-set enumeration and error-floor estimation for
//! quasi-cyclic LDPC codes, driven by exponent-matrix text files.
//!
//! Exit codes: 0 success, 1 usage error, 2 input integrity error, 3 runtime
//! failure.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use manifest::{ManifestBuilder, RunManifest};
use qcts::search::{
    distribution_table, enumerate_qc_full, projection_diff_table, solve, ImpulseSeeding,
    SearchMode, SearchStrategy, VBound,
};
use qcts::weighing::{estimate_pf_with, DenominatorPath, EstimateOptions};
use qcts::{
    BiasEnsemble, DecoderConfig, ExponentMatrix, FailureCriterion, LiftSpec, SupportVector,
    TsDatabase,
};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Integrity(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Integrity(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Integrity(m) | CliError::Runtime(m) => m,
        }
    }
}

fn classify_error(err: qcts::Error) -> CliError {
    use qcts::Error::*;
    match err {
        InvalidArgument(_) => CliError::Usage(err.to_string()),
        Parse { .. }
        | LengthMismatch { .. }
        | NotADivisor { .. }
        | DimensionMismatch(_)
        | DigestMismatch { .. }
        | ExhaustiveTooLarge { .. } => CliError::Integrity(err.to_string()),
        NonFiniteWeight { .. } | NonFiniteInput { .. } => CliError::Runtime(err.to_string()),
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "qcts",
    version,
    about = "Trapping sets and error-floor estimation for quasi-cyclic LDPC codes"
)]
struct Cli {
    /// Worker threads for searches and sampling (default: QCTS_THREADS or all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum StrategyArg {
    Exhaustive,
    Impulse,
    #[default]
    Cycle,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum FailureArg {
    /// Detected errors only: the output is not a codeword.
    Noncode,
    /// Any output other than the transmitted word (default).
    #[default]
    Nontx,
}

impl From<FailureArg> for FailureCriterion {
    fn from(arg: FailureArg) -> Self {
        match arg {
            FailureArg::Noncode => FailureCriterion::NonCodeword,
            FailureArg::Nontx => FailureCriterion::NotTransmitted,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum RankArg {
    /// Keep every record inside the (w, v) box (default).
    #[default]
    None,
    /// Rank records by distance to the decoder-failure boundary and drop the
    /// ones with no reachable boundary.
    Boundary,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce an exponent matrix to a divisor circulant size
    Project {
        input: PathBuf,
        output: PathBuf,
        /// Target circulant size; must divide the input circulant
        #[arg(long = "z-star")]
        z_star: usize,
    },
    /// Lift an exponent matrix to a multiple circulant size with seeded offsets
    Lift {
        input: PathBuf,
        output: PathBuf,
        /// Lift degree (at least 2)
        #[arg(long, default_value_t = 2)]
        factor: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enumerate trapping sets, optionally through lifted covers
    Enumerate {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        strategy: StrategyArg,
        /// Largest trapping-set weight to keep
        #[arg(long, default_value_t = 8)]
        wmax: usize,
        /// Flat cap on unsatisfied checks (default: v <= w)
        #[arg(long)]
        vmax: Option<usize>,
        /// Number of lifted covers; 0 searches the matrix directly
        #[arg(long, default_value_t = 1)]
        lifts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Impulse trials per cover (impulse/cycle strategies)
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Impulse displacement amplitude
        #[arg(long = "imp-amp", default_value_t = 2.5)]
        imp_amp: f64,
        /// Decoder iterations
        #[arg(long, default_value_t = 20)]
        iters: usize,
        /// Min-sum normalization factor
        #[arg(long = "norm-factor", default_value_t = 0.75)]
        norm_factor: f64,
        #[arg(long, value_enum, default_value_t)]
        failure: FailureArg,
        #[arg(long, value_enum, default_value_t)]
        rank: RankArg,
    },
    /// Reclassify a vector or database against a matrix
    Classify {
        matrix: PathBuf,
        db: Option<PathBuf>,
        /// Comma-separated support indices of a single vector
        #[arg(long)]
        support: Option<String>,
    },
    /// Estimate the frame-failure probability by importance sampling
    Weigh {
        matrix: PathBuf,
        db: PathBuf,
        output: PathBuf,
        /// Bias displacement along each trapping set
        #[arg(long, default_value_t = 1.7)]
        mu: f64,
        /// Channel noise standard deviation
        #[arg(long)]
        sigma: f64,
        /// Number of importance samples
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of database records used as bias points
        #[arg(long, default_value_t = 4)]
        basis: usize,
        /// Use the direct double-sum denominator instead of the tables
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 20)]
        iters: usize,
        #[arg(long = "norm-factor", default_value_t = 0.75)]
        norm_factor: f64,
        #[arg(long, value_enum, default_value_t)]
        failure: FailureArg,
    },
    /// Emit CSV statistics for a database
    Stats {
        db: PathBuf,
        /// Base matrix: report (w - w', v - v') fold-down differences instead
        /// of (w, v) counts
        base_matrix: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let kind = err.kind();
            let _ = err.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("qcts: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = resolve_threads(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let worker_count = pool.current_num_threads();
    pool.install(|| match cli.command {
        Command::Project {
            input,
            output,
            z_star,
        } => cmd_project(&input, &output, z_star, worker_count),
        Command::Lift {
            input,
            output,
            factor,
            seed,
        } => cmd_lift(&input, &output, factor, seed, worker_count),
        Command::Enumerate {
            input,
            output,
            strategy,
            wmax,
            vmax,
            lifts,
            seed,
            trials,
            imp_amp,
            iters,
            norm_factor,
            failure,
            rank,
        } => cmd_enumerate(
            &input,
            &output,
            EnumerateArgs {
                strategy,
                wmax,
                vmax,
                lifts,
                seed,
                trials,
                imp_amp,
                iters,
                norm_factor,
                failure,
                rank,
            },
            worker_count,
        ),
        Command::Classify {
            matrix,
            db,
            support,
        } => cmd_classify(&matrix, db.as_deref(), support.as_deref()),
        Command::Weigh {
            matrix,
            db,
            output,
            mu,
            sigma,
            samples,
            seed,
            basis,
            oracle,
            iters,
            norm_factor,
            failure,
        } => cmd_weigh(
            &matrix,
            &db,
            &output,
            WeighArgs {
                mu,
                sigma,
                samples,
                seed,
                basis,
                oracle,
                iters,
                norm_factor,
                failure,
            },
            worker_count,
        ),
        Command::Stats { db, base_matrix } => cmd_stats(&db, base_matrix.as_deref()),
    })
}

fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("QCTS_THREADS") {
        Ok(value) => value
            .parse()
            .map_err(|_| CliError::Usage(format!("QCTS_THREADS is not a number: {value:?}"))),
        Err(_) => Ok(0), // rayon default
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Integrity(format!("cannot read {}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> CliResult<ExponentMatrix> {
    let text = read_file(path)?;
    ExponentMatrix::parse(&text)
        .map_err(|e| CliError::Integrity(format!("{}: {e}", path.display())))
}

fn read_db(path: &Path) -> CliResult<TsDatabase> {
    let text = read_file(path)?;
    TsDatabase::parse(&text).map_err(|e| CliError::Integrity(format!("{}: {e}", path.display())))
}

/// Write-temp-then-rename so an interrupted run never leaves a truncated file.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| CliError::Runtime(format!("cannot create temp file: {e}")))?;
    std::io::Write::write_all(&mut tmp, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Runtime(format!("cannot persist {}: {e}", path.display())))?;
    Ok(())
}

fn write_with_manifest(
    path: &Path,
    bytes: &[u8],
    builder: ManifestBuilder,
    threads: usize,
) -> CliResult<()> {
    write_atomic(path, bytes)?;
    let manifest = builder.finish(path, bytes, threads);
    write_atomic(
        &RunManifest::sidecar_path(path),
        manifest.to_json().as_bytes(),
    )?;
    Ok(())
}

fn cmd_project(input: &Path, output: &Path, z_star: usize, threads: usize) -> CliResult<()> {
    let matrix = read_matrix(input)?;
    let projected = qcts::transforms::project_exponents(&matrix, z_star).map_err(classify_error)?;
    let text = projected.to_text();
    let builder = ManifestBuilder::new("project")
        .arg("input", input.display())
        .arg("z_star", z_star)
        .input("matrix", &matrix.digest());
    write_with_manifest(output, text.as_bytes(), builder, threads)?;
    println!(
        "projected {}x{} z={} -> z={} ({})",
        matrix.rows(),
        matrix.cols(),
        matrix.circulant(),
        z_star,
        projected.digest()
    );
    Ok(())
}

fn cmd_lift(
    input: &Path,
    output: &Path,
    factor: usize,
    seed: u64,
    threads: usize,
) -> CliResult<()> {
    if factor < 2 {
        return Err(CliError::Usage(format!(
            "lift factor must be at least 2, got {factor}"
        )));
    }
    let matrix = read_matrix(input)?;
    let spec =
        LiftSpec::random(factor, matrix.rows(), matrix.cols(), seed).map_err(classify_error)?;
    let lifted = qcts::transforms::lift_exponents(&matrix, &spec).map_err(classify_error)?;
    let text = lifted.to_text();
    let builder = ManifestBuilder::new("lift")
        .arg("input", input.display())
        .arg("factor", factor)
        .arg("seed", seed)
        .arg("b_digest", spec.digest())
        .input("matrix", &matrix.digest());
    write_with_manifest(output, text.as_bytes(), builder, threads)?;
    println!(
        "lifted z={} -> z={} with offsets {} ({})",
        matrix.circulant(),
        lifted.circulant(),
        spec.digest(),
        lifted.digest()
    );
    Ok(())
}

struct EnumerateArgs {
    strategy: StrategyArg,
    wmax: usize,
    vmax: Option<usize>,
    lifts: usize,
    seed: u64,
    trials: usize,
    imp_amp: f64,
    iters: usize,
    norm_factor: f64,
    failure: FailureArg,
    rank: RankArg,
}

fn build_strategy(args: &EnumerateArgs) -> SearchStrategy {
    let (mode, seeding) = match (args.strategy, args.rank) {
        (StrategyArg::Exhaustive, _) => (SearchMode::Exhaustive, ImpulseSeeding::Random),
        (StrategyArg::Impulse, RankArg::None) => (SearchMode::StrategyII, ImpulseSeeding::Random),
        (StrategyArg::Cycle, RankArg::None) => (SearchMode::StrategyII, ImpulseSeeding::Cycle),
        (StrategyArg::Impulse, RankArg::Boundary) => {
            (SearchMode::StrategyI, ImpulseSeeding::Random)
        }
        (StrategyArg::Cycle, RankArg::Boundary) => (SearchMode::StrategyI, ImpulseSeeding::Cycle),
    };
    SearchStrategy {
        mode,
        w_max: args.wmax,
        v_bound: args.vmax.map_or(VBound::EqualsW, VBound::Fixed),
        budget: args.trials,
        impulse_amplitude: args.imp_amp,
        seeding,
        seed: args.seed,
    }
}

fn build_decoder_config(
    iters: usize,
    norm_factor: f64,
    failure: FailureArg,
) -> CliResult<DecoderConfig> {
    let mut cfg =
        DecoderConfig::new(iters, norm_factor).map_err(|e| CliError::Usage(e.to_string()))?;
    cfg.criterion = failure.into();
    Ok(cfg)
}

fn cmd_enumerate(
    input: &Path,
    output: &Path,
    args: EnumerateArgs,
    threads: usize,
) -> CliResult<()> {
    let matrix = read_matrix(input)?;
    let strategy = build_strategy(&args);
    strategy
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = build_decoder_config(args.iters, args.norm_factor, args.failure)?;

    let builder = ManifestBuilder::new("enumerate")
        .arg("input", input.display())
        .arg("strategy", strategy.descriptor())
        .arg("lifts", args.lifts)
        .arg("seed", args.seed)
        .arg("iters", args.iters)
        .arg("norm_factor", args.norm_factor)
        .arg("failure", format!("{:?}", cfg.criterion))
        .input("matrix", &matrix.digest());
    let manifest_digest = builder.digest();

    let (mut db, diff) = if args.lifts == 0 {
        let db = solve(&matrix, &cfg, &strategy).map_err(classify_error)?;
        (db, None)
    } else {
        let outcome = enumerate_qc_full(&matrix, args.lifts, &strategy, &cfg, args.seed)
            .map_err(classify_error)?;
        (outcome.db, Some(outcome.diff))
    };
    db.meta.manifest_digest = Some(manifest_digest);

    let text = db.to_text();
    write_with_manifest(output, text.as_bytes(), builder, threads)?;

    println!(
        "{} trapping-set orbits -> {} ({})",
        db.len(),
        output.display(),
        db.digest()
    );
    let table = distribution_table(&db);
    if table.is_empty() {
        println!("(no records within bounds)");
    } else {
        print!("{table}");
    }
    if let Some(diff) = diff {
        if diff.total() > 0 {
            println!(
                "fold-down class changes over {} cover records:",
                diff.total()
            );
            print!("{diff}");
        }
    }
    Ok(())
}

fn cmd_classify(matrix_path: &Path, db: Option<&Path>, support: Option<&str>) -> CliResult<()> {
    let matrix = read_matrix(matrix_path)?;
    match (db, support) {
        (_, Some(list)) => {
            let mut indices = Vec::new();
            for token in list.split(',').filter(|t| !t.is_empty()) {
                let idx: u32 = token
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad support index {token:?}")))?;
                indices.push(idx);
            }
            indices.sort_unstable();
            let x = SupportVector::new(matrix.n_vars(), indices)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let (w, v) = matrix.classify_ts(&x).map_err(classify_error)?;
            println!("{w} {v}");
            Ok(())
        }
        (Some(db_path), None) => {
            let db = read_db(db_path)?;
            check_pairing(&db, &matrix)?;
            let mut mismatches = 0usize;
            for (idx, record) in db.records().iter().enumerate() {
                let (w, v) = matrix
                    .classify_ts(&record.support)
                    .map_err(classify_error)?;
                if (w, v) == (record.w, record.v) {
                    println!("{idx} {w} {v} ok");
                } else {
                    println!("{idx} {w} {v} MISMATCH stored=({},{})", record.w, record.v);
                    mismatches += 1;
                }
            }
            if mismatches > 0 {
                return Err(CliError::Integrity(format!(
                    "{mismatches} records disagree with the matrix"
                )));
            }
            Ok(())
        }
        (None, None) => Err(CliError::Usage(
            "classify needs a database or --support".into(),
        )),
    }
}

fn check_pairing(db: &TsDatabase, matrix: &ExponentMatrix) -> CliResult<()> {
    let expected = matrix.digest();
    if db.header.matrix_digest != expected {
        return Err(CliError::Integrity(format!(
            "database was built from matrix {}, got {}",
            db.header.matrix_digest, expected
        )));
    }
    Ok(())
}

struct WeighArgs {
    mu: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
    basis: usize,
    oracle: bool,
    iters: usize,
    norm_factor: f64,
    failure: FailureArg,
}

fn cmd_weigh(
    matrix_path: &Path,
    db_path: &Path,
    output: &Path,
    args: WeighArgs,
    threads: usize,
) -> CliResult<()> {
    if args.samples == 0 {
        return Err(CliError::Usage("sample count must be positive".into()));
    }
    if args.basis == 0 {
        return Err(CliError::Usage("basis size must be positive".into()));
    }
    let matrix = read_matrix(matrix_path)?;
    let db = read_db(db_path)?;
    check_pairing(&db, &matrix)?;
    if db.is_empty() {
        return Err(CliError::Integrity(
            "database holds no trapping sets to bias toward".into(),
        ));
    }

    let supports: Vec<SupportVector> = db
        .records()
        .into_iter()
        .take(args.basis)
        .map(|r| r.support.clone())
        .collect();
    let ensemble = BiasEnsemble::new(
        supports,
        args.mu,
        args.sigma,
        matrix.cols(),
        matrix.circulant(),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = build_decoder_config(args.iters, args.norm_factor, args.failure)?;

    let tables = qcts::weighing::build_tables(&ensemble);
    println!(
        "bias basis: {} orbit(s); disjoint shift fraction {:.4}",
        ensemble.p(),
        tables.disjoint_fraction()
    );

    let opts = EstimateOptions {
        denominator: if args.oracle {
            DenominatorPath::Naive
        } else {
            DenominatorPath::Tabular
        },
        ..EstimateOptions::default()
    };
    let estimate = estimate_pf_with(&matrix, &ensemble, &cfg, args.samples, args.seed, opts)
        .map_err(classify_error)?;

    let mut report = serde_json::to_string_pretty(&estimate)
        .map_err(|e| CliError::Runtime(format!("report serialization: {e}")))?;
    report.push('\n');

    let builder = ManifestBuilder::new("weigh")
        .arg("matrix", matrix_path.display())
        .arg("db", db_path.display())
        .arg("mu", args.mu)
        .arg("sigma", args.sigma)
        .arg("samples", args.samples)
        .arg("seed", args.seed)
        .arg("basis", ensemble.p())
        .arg("oracle", args.oracle)
        .arg("iters", args.iters)
        .arg("norm_factor", args.norm_factor)
        .arg("failure", format!("{:?}", cfg.criterion))
        .input("matrix", &matrix.digest())
        .input("db", &db.digest());
    write_with_manifest(output, report.as_bytes(), builder, threads)?;

    println!(
        "P_f = {:.6e} +- {:.6e} ({} failures / {} samples) -> {}",
        estimate.estimate,
        estimate.stderr,
        estimate.failures,
        estimate.samples,
        output.display()
    );
    Ok(())
}

fn cmd_stats(db_path: &Path, base_matrix: Option<&Path>) -> CliResult<()> {
    let db = read_db(db_path)?;
    match base_matrix {
        None => {
            let table = distribution_table(&db);
            print!("{}", table.to_csv());
        }
        Some(base_path) => {
            let base = read_matrix(base_path)?;
            let diff = projection_diff_table(&db, &base).map_err(classify_error)?;
            print!("{}", diff.to_csv());
        }
    }
    Ok(())
}
